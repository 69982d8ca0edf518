"""
Branch-and-bound over the binary columns of a MilpModel.

Nodes are chosen best-bound first; after each branching the search dives
into one child (the side the fractional value rounds to) and parks the other
on the heap. Every node's bounds are tightened by activity-based propagation
before its relaxation is solved, warm-started from the parent's basis.
"""

from __future__ import annotations

import heapq
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .milp import BINARY, MilpModel
from .simplex import INFEASIBLE, DenseLp, NumericalBreakdown

log = logging.getLogger(__name__)

INT_TOL = 1e-6
PRUNE_TOL = 1e-6

OPTIMAL = "optimal"
INFEASIBLE_STATUS = "infeasible"
LIMIT = "limit"

MOST_FRACTIONAL = "most-fractional"
PSEUDO_COST = "pseudo-cost-lite"


@dataclass(frozen=True)
class SolveParams:
    time_limit_seconds: float = math.inf
    mip_gap: float = 1e-5
    node_limit: int | None = None
    branching_rule: str = MOST_FRACTIONAL
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mip_gap < 0:
            raise ValueError("mip_gap must be non-negative")
        if self.branching_rule not in (MOST_FRACTIONAL, PSEUDO_COST):
            raise ValueError(f"unknown branching rule {self.branching_rule!r}")


@dataclass
class SolveReport:
    status: str
    lb: float
    ub: float
    gap: float
    nodes: int
    simplex_iterations: int
    wall_time: float
    incumbent: list[float] | None = None
    message: str = ""
    # Values seen by every processed node: (local LP bound, incumbent, global bound)
    trace: list[tuple[float, float, float]] = field(default_factory=list, repr=False)

    def to_dict(self, with_incumbent: bool = True) -> dict:
        data = asdict(self)
        data.pop("trace")
        if not with_incumbent:
            data.pop("incumbent")
        for key in ("lb", "ub", "gap"):
            if not math.isfinite(data[key]):
                data[key] = None
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def relative_gap(lb: float, ub: float) -> float:
    if not (math.isfinite(lb) and math.isfinite(ub)):
        return math.inf
    return max(ub - lb, 0.0) / max(1.0, abs(ub))


class _Propagator:
    """Activity-based bound tightening for binary columns over all rows as ``<=``."""

    def __init__(self, A, senses, b, binary):
        le = senses == "<="
        ge = senses == ">="
        eq = senses == "="
        G = np.vstack([A[le], -A[ge], A[eq], -A[eq]])
        self.h = np.concatenate([b[le], -b[ge], b[eq], -b[eq]])
        rows, cols = np.nonzero(G)
        order = np.argsort(cols, kind="stable")
        self.rows, self.cols = rows[order], cols[order]
        self.coef = G[self.rows, self.cols]
        self.up = self.coef > 0
        self.binary = binary

    def _tightest(self, mask, values, reduce, fill, n):
        """Per-column ``reduce`` of ``values`` over the entries selected by ``mask``."""
        out = np.full(n, fill)
        cols = self.cols[mask]
        if cols.size:
            starts = np.flatnonzero(np.r_[True, cols[1:] != cols[:-1]])
            out[cols[starts]] = reduce.reduceat(values[mask], starts)
        return out

    def __call__(self, lb, ub):
        """Tightened copies of ``(lb, ub)``, or None if some row cannot hold."""
        lb, ub = lb.copy(), ub.copy()
        if not len(self.h):
            return lb, ub
        n = len(lb)
        r, c, a, up = self.rows, self.cols, self.coef, self.up
        for _ in range(n + 1):
            minact = np.bincount(r, weights=a * np.where(up, lb[c], ub[c]), minlength=len(self.h))
            slack = self.h - minact
            if np.any(slack < -1e-9):
                return None
            # a > 0: x_j <= lb_j + slack / a ; a < 0: x_j >= ub_j + slack / a
            room = slack[r] / a
            new_ub = self._tightest(up, lb[c] + room, np.minimum, np.inf, n)
            new_lb = self._tightest(~up, ub[c] + room, np.maximum, -np.inf, n)
            b = self.binary
            new_ub = np.where(b, np.floor(new_ub + 1e-9), new_ub)
            new_lb = np.where(b, np.ceil(new_lb - 1e-9), new_lb)
            tight_ub = new_ub < ub - 1e-9
            tight_lb = new_lb > lb + 1e-9
            if not (tight_ub.any() or tight_lb.any()):
                return lb, ub
            ub = np.where(tight_ub, new_ub, ub)
            lb = np.where(tight_lb, new_lb, lb)
            if np.any(lb > ub + 1e-9):
                return None
        return lb, ub


@dataclass(order=True)
class _Node:
    key: float
    seq: int
    bound: float = field(compare=False)
    lb: np.ndarray = field(compare=False, repr=False)
    ub: np.ndarray = field(compare=False, repr=False)
    depth: int = field(compare=False, default=0)
    # parent solution (diving child) or parent basis (parked child)
    warm: object = field(compare=False, default=None, repr=False)


def solve_milp(model: MilpModel, params: SolveParams | None = None, start=None) -> SolveReport:
    """Solve ``model`` to optimality within ``params``' limits.

    ``start``, when given, must be a feasible point and seeds the incumbent.
    """
    params = params or SolveParams()
    t0 = time.perf_counter()
    deadline = t0 + params.time_limit_seconds

    lp = DenseLp.from_model(model)
    binary = np.array([col.kind == BINARY for col in model.columns], dtype=bool)
    propagate = _Propagator(lp.A, lp.senses, lp.b, binary)
    rng = np.random.default_rng(params.seed)
    # with binary columns and integer costs every feasible value is an integer
    integral = bool(binary.all()) and np.all(lp.c == np.round(lp.c)) and lp.constant == round(lp.constant)

    best_x = None
    best = -math.inf
    if start is not None:
        start = np.asarray(start, dtype=float)
        bad = model.violations(start)
        if bad:
            raise ValueError(f"start point violates {bad[:5]}")
        best_x, best = start.copy(), model.objective_value(start)

    report = SolveReport(LIMIT, best, math.inf, math.inf, 0, 0, 0.0)
    pc_sum = np.zeros((len(binary), 2))
    pc_cnt = np.zeros((len(binary), 2))

    def finish(status: str, ub: float, message: str = "") -> SolveReport:
        if status == OPTIMAL:
            ub = max(ub, best)
        report.status = status
        report.lb = best
        report.ub = ub
        report.gap = relative_gap(best, ub)
        report.incumbent = None if best_x is None else [float(v) for v in best_x]
        report.wall_time = time.perf_counter() - t0
        report.message = message
        return report

    if time.perf_counter() >= deadline:
        return finish(LIMIT, math.inf, "time limit reached before the root node")

    root = propagate(lp.lb, lp.ub)
    if root is None:
        return finish(INFEASIBLE_STATUS if best_x is None else OPTIMAL, best, "root propagation infeasible")

    heap: list[_Node] = []
    seq = 0
    heapq.heappush(heap, _Node(-math.inf, seq, math.inf, root[0], root[1]))
    dive: _Node | None = None

    while heap or dive is not None:
        open_bound = -heap[0].key if heap else -math.inf
        if dive is not None:
            open_bound = max(open_bound, dive.bound)
        if best > -math.inf and relative_gap(best, open_bound) <= params.mip_gap:
            return finish(OPTIMAL, open_bound)
        if time.perf_counter() >= deadline:
            return finish(LIMIT, open_bound, "time limit")
        if params.node_limit is not None and report.nodes >= params.node_limit:
            return finish(LIMIT, open_bound, "node limit")

        node = dive if dive is not None else heapq.heappop(heap)
        dive = None
        if node.bound <= best + PRUNE_TOL:
            continue
        report.nodes += 1
        try:
            sol = lp.solve(node.lb, node.ub, warm=node.warm)
        except NumericalBreakdown as exc:
            return finish(LIMIT, open_bound, f"numerical breakdown: {exc}")
        report.simplex_iterations += sol.iterations
        if sol.status == INFEASIBLE:
            continue
        bound = min(sol.objective, node.bound)
        if integral:
            bound = math.floor(bound + INT_TOL)
        report.trace.append((bound, best, open_bound))
        if bound <= best + PRUNE_TOL:
            continue

        x = sol.x
        frac = np.where(binary & (node.ub > node.lb), np.abs(x - np.round(x)), 0.0)
        if frac.max(initial=0.0) <= INT_TOL:
            cand = np.where(binary, np.round(x), x)
            if not model.violations(cand):
                best, best_x = model.objective_value(cand), cand
                log.debug("incumbent %.6g at node %d", best, report.nodes)
                continue
            # rounding within tolerance broke a row: branch on the least integral column
            if frac.max(initial=0.0) <= 0:
                continue
            threshold = 0.0
        else:
            threshold = INT_TOL

        j = _pick_branch(x, frac, threshold, params, pc_sum, pc_cnt, rng)
        children = []
        for up in (False, True):
            lb, ub = node.lb.copy(), node.ub.copy()
            if up:
                lb[j] = 1.0
            else:
                ub[j] = 0.0
            tightened = propagate(lb, ub)
            if tightened is None:
                continue
            seq += 1
            children.append((up, _Node(-bound, seq, bound, tightened[0], tightened[1], node.depth + 1)))
        if params.branching_rule == PSEUDO_COST:
            _record_pseudo_cost(lp, node, sol, j, x, bound, pc_sum, pc_cnt)
        prefer_up = x[j] >= 0.5
        for up, child in children:
            if up == prefer_up and dive is None:
                child.warm = sol
                dive = child
            else:
                child.warm = sol.basis
                heapq.heappush(heap, child)

    ub = best if best_x is not None else -math.inf
    if best_x is None:
        return finish(INFEASIBLE_STATUS, ub, "search tree exhausted without a feasible point")
    return finish(OPTIMAL, ub)


def _pick_branch(x, frac, threshold, params, pc_sum, pc_cnt, rng) -> int:
    """Column closest to 0.5 (lowest index on ties), or best pseudo-cost score."""
    idx = np.flatnonzero(frac > threshold)
    closeness = np.abs(x[idx] - 0.5)
    if params.branching_rule == PSEUDO_COST:
        known = (pc_cnt[idx] > 0).all(axis=1)
        if known.any():
            down = pc_sum[idx, 0] / np.maximum(pc_cnt[idx, 0], 1)
            up = pc_sum[idx, 1] / np.maximum(pc_cnt[idx, 1], 1)
            f = x[idx] - np.floor(x[idx])
            score = np.where(known, np.maximum(down * f, 1e-6) * np.maximum(up * (1 - f), 1e-6), -1.0)
            top = np.flatnonzero(score >= score.max() - 1e-12)
            return int(idx[top[rng.integers(len(top))]]) if len(top) > 1 else int(idx[top[0]])
    return int(idx[np.argmin(closeness)])


def _record_pseudo_cost(lp, node, parent, j, x, bound, pc_sum, pc_cnt) -> None:
    """Update pseudo-costs from the two child LPs of one branching."""
    f = x[j] - math.floor(x[j])
    for side, (lo, hi), dist in ((0, (0.0, 0.0), f), (1, (1.0, 1.0), 1 - f)):
        lb, ub = node.lb.copy(), node.ub.copy()
        lb[j], ub[j] = lo, hi
        try:
            sol = lp.solve(lb, ub, warm=parent)
        except NumericalBreakdown:
            continue
        if sol.status == INFEASIBLE or dist <= 0:
            continue
        pc_sum[j, side] += max(bound - sol.objective, 0.0) / dist
        pc_cnt[j, side] += 1
