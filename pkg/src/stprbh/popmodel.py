"""
Partial-ordering binary program for the rooted Steiner tree problem with
revenues, budget and hop limit.

Every non-root node ``v`` gets a position ``pi_v`` in ``1..H`` (the root sits
at 0). ``g[i, v] = 1`` means ``pi_v > i``; the "less than" indicators are
eliminated through ``l[v, i+1] = 1 - g[i, v]``, and the boundary values
``g[0, v] = 1``, ``g[H, v] = 0`` and ``g[i, r] = 0`` are constants. What is
left are the columns ``g[i, v]`` for ``1 <= i <= H-1`` and two arc columns
``x[u, v]``, ``x[v, u]`` per edge, with ``x[u, v] = 1`` when the tree uses
the edge and ``pi_u < pi_v``.

Fixings (from strengthening, or rows that collapse to ``x <= 0``) are
substituted into the rows and kept as columns with equal bounds, so the
column count never depends on the variant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .instance import Instance
from .milp import BINARY, Column, MilpModel, Row
from .reduce import shortest_paths
from .tree import NotATree, SteinerTree, build_tree

INTEGRALITY_TOL = 1e-6


class EmptyGraph(ValueError):
    pass


@dataclass(frozen=True)
class ModelVariant:
    name: str = "basic"
    use_strengthening_fixings: bool = False
    use_root_cut: bool = False
    use_leaf_symmetry: bool = False
    apply_eurc: bool = False


BASIC = ModelVariant("basic")
POP1 = ModelVariant("pop1", True, True, False, False)
POP1R = ModelVariant("pop1r", True, True, False, True)
POP2 = ModelVariant("pop2", True, True, True, False)
POP2R = ModelVariant("pop2r", True, True, True, True)
VARIANTS = {v.name: v for v in (BASIC, POP1, POP1R, POP2, POP2R)}


@dataclass
class PopVariableIndex:
    hop_limit: int
    root: int
    g_index: dict[tuple[int, int], int] = field(default_factory=dict)
    x_index: dict[tuple[int, int], int] = field(default_factory=dict)
    fixed_g: dict[tuple[int, int], int] = field(default_factory=dict)
    fixed_x: dict[tuple[int, int], int] = field(default_factory=dict)

    def g_value(self, i: int, v: int, assignment) -> float:
        if (i, v) in self.fixed_g:
            return self.fixed_g[(i, v)]
        return assignment[self.g_index[(i, v)]]


def _key_name(key) -> str:
    kind, a, b = key
    if kind == "g":
        return f"g_{a}_{b + 1}"
    return f"x_{a + 1}_{b + 1}"


def build_pop(instance: Instance, variant: ModelVariant = BASIC) -> tuple[MilpModel, PopVariableIndex]:
    """Build the eliminated POP model for ``instance``.

    ``variant.apply_eurc`` is informational here: reduce the instance first.
    """
    if instance.edge_count == 0:
        raise EmptyGraph(f"instance {instance.name!r} has no edges")
    H, r, n = instance.hop_limit, instance.root, instance.node_count
    rho = instance.revenues
    others = [v for v in range(n) if v != r]
    hop_len = shortest_paths(instance).unweighted_len

    index = PopVariableIndex(H, r)
    columns: list[Column] = []
    col_of: dict[tuple, int] = {}

    def add_column(key) -> None:
        col_of[key] = len(columns)
        columns.append(Column(_key_name(key), BINARY, 0.0, 1.0))

    for v in others:
        for i in range(1, H):
            add_column(("g", i, v))
            index.g_index[(i, v)] = col_of[("g", i, v)]
    for u, v, _ in instance.edges:
        for a, b in ((u, v), (v, u)):
            add_column(("x", a, b))
            index.x_index[(a, b)] = col_of[("x", a, b)]

    fixed: dict[tuple, int] = {}
    for i in range(H + 1):
        fixed[("g", i, r)] = 0
    for v in others:
        fixed[("g", 0, v)] = 1
        fixed[("g", H, v)] = 0

    if variant.use_strengthening_fixings:
        for v in others:
            if hop_len[v] <= H:
                # pi_v >= len(r, v): g is 1 below that position
                for i in range(1, int(hop_len[v])):
                    fixed[("g", i, v)] = 1
            if rho[v] == 0 and hop_len[v] <= H - 1 and H >= 2:
                fixed[("g", H - 1, v)] = 0

    # Raw rows as (name, {key: coef}, constant, sense, rhs); the constant sits on the left.
    raw: list[tuple[str, dict, float, str, float]] = []

    def g_term(i, v, expr, sign=1.0):
        key = ("g", i, v)
        expr[key] = expr.get(key, 0.0) + sign

    for v in others:
        for i in range(H):
            e: dict = {}
            g_term(i, v, e)
            g_term(i + 1, v, e, -1.0)
            raw.append((f"mono_{i}_{v + 1}", e, 0.0, ">=", 0.0))

    def edge_rows(prefix, u, v, tag_u, tag_v):
        # arc (u, v): l[u, i] + g[i, v] - x[u, v] >= 0, with l[u, 0] = 0 and l[u, i] = 1 - g[i-1, u]
        for i in range(H + 1):
            e: dict = {}
            const = 0.0
            if i >= 1:
                const += 1.0
                g_term(i - 1, u, e, -1.0)
            g_term(i, v, e)
            e[("x", u, v)] = e.get(("x", u, v), 0.0) - 1.0
            raw.append((f"{prefix}_{i}_{tag_u + 1}_{tag_v + 1}", e, const, ">=", 0.0))

    for u, v, _ in instance.edges:
        edge_rows("fwd", u, v, u, v)
    for u, v, _ in instance.edges:
        edge_rows("rev", v, u, u, v)

    for v in others:
        e = {("x", u, v): 1.0 for u in instance.neighbours(v)}
        raw.append((f"indeg_{v + 1}", e, 0.0, "<=", 1.0))
    for v in others:
        nbrs = instance.neighbours(v)
        for w in nbrs:
            e = {("x", u, v): 1.0 for u in nbrs if u != w}
            e[("x", v, w)] = -1.0
            raw.append((f"outdeg_{v + 1}_{w + 1}", e, 0.0, ">=", 0.0))

    e = {}
    for u, v, c in instance.edges:
        e[("x", u, v)] = c
        e[("x", v, u)] = c
    raw.append(("budget", e, 0.0, "<=", instance.budget))

    if variant.use_root_cut:
        tol = 0.0 if instance.is_integral else 1e-9
        cut = {("x", r, w): 1.0 for w, c in instance.adjacency[r] if c <= instance.budget + tol}
        if cut:
            raw.append(("rootcut", cut, 0.0, ">=", 1.0))

    if variant.use_leaf_symmetry:
        for v in others:
            if rho[v] > 0:
                e = {("x", v, w): 1.0 for w in instance.neighbours(v)}
                g_term(H - 1, v, e)
                raw.append((f"leafsym_{v + 1}", e, 0.0, ">=", 1.0))

    rows = _substitute(raw, fixed, col_of)

    for key, val in fixed.items():
        kind, a, b = key
        if key in col_of:
            j = col_of[key]
            columns[j] = Column(columns[j].name, BINARY, float(val), float(val))
        if kind == "g":
            index.fixed_g[(a, b)] = val
        else:
            index.fixed_x[(a, b)] = val

    objective = []
    for u, v, _ in instance.edges:
        if rho[v] != 0:
            objective.append((col_of[("x", u, v)], rho[v]))
        if rho[u] != 0:
            objective.append((col_of[("x", v, u)], rho[u]))
    objective.sort()

    model = MilpModel(
        columns=tuple(columns),
        rows=tuple(rows),
        objective=tuple(objective),
        constant=rho[r],
        name=f"{instance.name or 'stprbh'}-{variant.name}",
    )
    return model, index


def _substitute(raw, fixed: dict, col_of: dict) -> list[Row]:
    """Plug fixed values into the rows until nothing changes.

    Rows that hold for every binary point are dropped; a row left with one
    free variable whose bound pins it to 0 or 1 becomes a fixing. Other rows
    are emitted over their free columns only.
    """
    live = list(range(len(raw)))
    while True:
        changed = False
        keep = []
        for k in live:
            name, expr, const, sense, rhs = raw[k]
            free, rhs_eff = {}, rhs - const
            for key, a in expr.items():
                if a == 0:
                    continue
                if key in fixed:
                    rhs_eff -= a * fixed[key]
                else:
                    free[key] = free.get(key, 0.0) + a
            free = {key: a for key, a in free.items() if a != 0}
            lo = sum(min(a, 0.0) for a in free.values())
            hi = sum(max(a, 0.0) for a in free.values())
            if (sense == "<=" and hi <= rhs_eff) or (sense == ">=" and lo >= rhs_eff) or (
                sense == "=" and lo == hi == rhs_eff
            ):
                continue
            if (sense == "<=" and lo > rhs_eff) or (sense == ">=" and hi < rhs_eff) or (
                sense == "=" and not lo <= rhs_eff <= hi
            ):
                raise ValueError(f"row {name} cannot be satisfied after fixings")
            if len(free) == 1:
                (key, a), = free.items()
                val = _forced_value(a, sense, rhs_eff)
                if val is not None:
                    fixed[key] = val
                    changed = True
                    continue
            keep.append(k)
        live = keep
        if not changed:
            break

    rows = []
    for k in live:
        name, expr, const, sense, rhs = raw[k]
        rhs_eff = rhs - const
        coeffs = {}
        for key, a in expr.items():
            if key in fixed:
                rhs_eff -= a * fixed[key]
            elif a != 0:
                coeffs[col_of[key]] = coeffs.get(col_of[key], 0.0) + a
        coeffs = tuple(sorted((j, a) for j, a in coeffs.items() if a != 0))
        rows.append(Row(name, coeffs, sense, rhs_eff + 0.0))
    return rows


def _forced_value(a: float, sense: str, rhs: float) -> int | None:
    """Value a single binary must take under ``a*x sense rhs``, if pinned."""
    bound = rhs / a
    if sense == "=":
        return int(round(bound)) if bound in (0.0, 1.0) else None
    upper = (sense == "<=") == (a > 0)
    if upper and bound <= 0:
        return 0
    if not upper and bound >= 1:
        return 1
    return None


# ---------------------------------------------------------------------------
# Reading solutions back


def decode_solution(instance: Instance, index: PopVariableIndex, assignment) -> SteinerTree:
    """Tree formed by the arcs whose ``x`` value rounds to 1."""
    values = np.asarray(assignment, dtype=float)
    frac = np.abs(values - np.round(values))
    if frac.size and frac.max() > INTEGRALITY_TOL:
        raise ValueError(f"assignment is not integral (max distance {frac.max():.3g})")
    arcs = [arc for arc, j in index.x_index.items() if values[j] >= 0.5]
    return build_tree(instance, arcs)


def implied_positions(index: PopVariableIndex, assignment) -> dict[int, int]:
    """``pi_v`` = smallest ``i`` with ``g[i, v] = 0`` (the root is at 0)."""
    H = index.hop_limit
    nodes = {v for _, v in index.g_index} | {v for _, v in index.fixed_g}
    out = {}
    for v in nodes:
        out[v] = next(i for i in range(H + 1) if index.g_value(i, v, assignment) < 0.5)
    return out


def start_assignment(instance: Instance, model: MilpModel, index: PopVariableIndex) -> np.ndarray:
    """A feasible point: the root alone, or the root plus one affordable neighbour.

    The second form is needed when the model carries the root cut. Every
    non-tree node is parked at the highest position its fixings allow.
    """
    x = np.zeros(model.num_columns)
    for j, col in enumerate(model.columns):
        x[j] = col.lb
    r = index.root
    for j in index.g_index.values():
        if model.columns[j].fixed:
            continue
        x[j] = 1.0
    if any(row.name == "rootcut" for row in model.rows):
        tol = 0.0 if instance.is_integral else 1e-9
        options = [
            (-instance.revenues[w], c, w)
            for w, c in instance.adjacency[r]
            if c <= instance.budget + tol and index.fixed_x.get((r, w)) != 0
        ]
        _, _, w = min(options)
        x[index.x_index[(r, w)]] = 1.0
    # g_{H-1,v} may be fixed to 0 only for zero-revenue nodes, which never need pi_v = H.
    return x


def row_count_bound(instance: Instance) -> int:
    """Upper bound on the rows ``build_pop`` may emit for any variant."""
    H, n, m = instance.hop_limit, instance.node_count, instance.edge_count
    deg_sum = 2 * m
    return max(H - 2, 0) * (n - 1) + 2 * (H + 1) * m + n + deg_sum + 1 + n


def column_count(instance: Instance) -> int:
    return (instance.hop_limit - 1) * (instance.node_count - 1) + 2 * instance.edge_count


__all__ = [
    "BASIC",
    "POP1",
    "POP1R",
    "POP2",
    "POP2R",
    "VARIANTS",
    "EmptyGraph",
    "ModelVariant",
    "NotATree",
    "PopVariableIndex",
    "build_pop",
    "column_count",
    "decode_solution",
    "implied_positions",
    "row_count_bound",
    "start_assignment",
]
