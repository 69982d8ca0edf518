"""
Dense bounded-variable simplex for the LP relaxation of a MilpModel.

Binary columns are relaxed to their bounds. Columns fixed in the model are
moved to the right-hand side once, when a ``DenseLp`` is built; columns fixed
later (by branching) stay in the tableau with equal bounds.

A cold solve runs the primal method: phase 1 minimises the sum of
artificials, phase 2 maximises the model objective, with Dantzig pricing
until too many degenerate pivots pile up and Bland's rule after that. A warm
solve starts from the optimal basis of an earlier solve with looser bounds.
Tightening bounds keeps that basis dual feasible, so the dual method repairs
primal feasibility, usually in a handful of pivots. A warm solve that cannot
finish cleanly, or that claims infeasibility without a verified certificate,
falls back to a cold solve.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .milp import MilpModel

FEAS_TOL = 1e-7
OPT_TOL = 1e-9
DUAL_FEAS_TOL = 1e-7
PIVOT_TOL = 1e-9
BREAKDOWN_TOL = 1e-11

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
_NOT_DUAL_FEASIBLE = "not dual feasible"


class NumericalBreakdown(ArithmeticError):
    pass


@dataclass(frozen=True)
class Basis:
    """A final basis in the column space of one ``DenseLp``.

    Ids below ``n_free`` are free structural columns, then come the slacks,
    then one artificial id per active row (``n_free + n_slack + row``).
    """

    basic: tuple[int, ...]
    at_upper: frozenset[int]


@dataclass
class LpSolution:
    status: str
    objective: float
    x: np.ndarray
    iterations: int = 0
    basis: Basis | None = None
    tableau: "_Tableau | None" = field(default=None, repr=False)
    warm: bool = False


class _Tableau:
    """``T = B^-1 M`` for ``M z = b``, ``lo <= z <= hi``, plus ``B^-1 b``."""

    def __init__(self, M, b, lo, hi, basis, art_rows, n_core, T=None, binv_b=None):
        self.M, self.b = M, b
        self.m, self.N = M.shape
        self.n_core = n_core
        self.art_rows = np.asarray(art_rows, dtype=int)
        self.lo = np.array(lo, dtype=float)
        self.hi = np.array(hi, dtype=float)
        self.basis = np.array(basis, dtype=int)
        self.is_basic = np.zeros(self.N, dtype=bool)
        self.is_basic[self.basis] = True
        self.at_upper = np.zeros(self.N, dtype=bool)
        if T is None:
            sol = _basis_solve(M[:, self.basis], np.column_stack([M, b]))
            T, binv_b = sol[:, :-1], sol[:, -1]
        self.T = T
        self.binv_b = binv_b
        self.beta = np.zeros(self.m)
        self.iterations = 0
        self.degenerate = 0
        self.bland = False
        self.degenerate_limit = 10 * (self.m + self.N)
        self.max_iter = 50 * (self.m + self.N) + 1000

    def copy(self) -> "_Tableau":
        t = _Tableau.__new__(_Tableau)
        t.__dict__.update(self.__dict__)
        for name in ("lo", "hi", "basis", "is_basic", "at_upper", "T", "binv_b", "beta"):
            setattr(t, name, getattr(self, name).copy())
        t.iterations = t.degenerate = 0
        t.bland = False
        return t

    def nonbasic_point(self) -> np.ndarray:
        z = np.where(self.at_upper, self.hi, self.lo)
        z[self.is_basic] = 0.0
        return z

    def place(self) -> None:
        """Recompute basic values after the bounds have changed."""
        self.at_upper &= np.isfinite(self.hi) & ~self.is_basic
        self.beta = self.binv_b - self.T @ self.nonbasic_point()

    def pivot(self, r: int, j: int, d: np.ndarray) -> None:
        T = self.T
        piv = T[r, j]
        if abs(piv) < BREAKDOWN_TOL:
            raise NumericalBreakdown(f"pivot {piv:.3g} below {BREAKDOWN_TOL}")
        T[r] /= piv
        self.binv_b[r] /= piv
        col = T[:, j].copy()
        col[r] = 0.0
        rows = np.flatnonzero(col)
        if rows.size:
            T[rows] -= np.outer(col[rows], T[r])
            self.binv_b[rows] -= col[rows] * self.binv_b[r]
        d -= d[j] * T[r]
        leaving = self.basis[r]
        self.is_basic[leaving] = False
        self.basis[r] = j
        self.is_basic[j] = True
        self.at_upper[j] = False

    def _tick(self, step: float) -> None:
        self.iterations += 1
        if self.iterations > self.max_iter:
            raise NumericalBreakdown(f"no convergence after {self.iterations} iterations")
        if step <= 1e-12:
            self.degenerate += 1
            if self.degenerate > self.degenerate_limit:
                self.bland = True

    def primal(self, cost: np.ndarray) -> str:
        """Minimise ``cost @ z`` from a primal feasible basis."""
        T, basis = self.T, self.basis
        d = cost - cost[basis] @ T
        movable = self.hi > self.lo
        while True:
            cand = (~self.is_basic) & movable & (
                ((~self.at_upper) & (d < -OPT_TOL)) | (self.at_upper & (d > OPT_TOL))
            )
            if not cand.any():
                return OPTIMAL
            idx = np.flatnonzero(cand)
            j = idx[0] if self.bland else idx[np.argmax(np.abs(d[idx]))]
            delta = -1.0 if self.at_upper[j] else 1.0
            da = delta * T[:, j]

            beta = self.beta
            lo_b, hi_b = self.lo[basis], self.hi[basis]
            ratios = np.full(self.m, np.inf)
            dec = da > PIVOT_TOL
            inc = (da < -PIVOT_TOL) & np.isfinite(hi_b)
            ratios[dec] = (beta[dec] - lo_b[dec]) / da[dec]
            ratios[inc] = (hi_b[inc] - beta[inc]) / (-da[inc])
            np.maximum(ratios, 0.0, out=ratios)
            t_row = ratios.min() if self.m else np.inf
            t_flip = self.hi[j] - self.lo[j]

            if t_flip <= t_row:
                if not np.isfinite(t_flip):
                    return UNBOUNDED
                self._tick(t_flip)
                beta -= t_flip * da
                self.at_upper[j] = not self.at_upper[j]
                continue

            ties = np.flatnonzero(ratios <= t_row + 1e-12)
            r = ties[np.argmin(basis[ties])] if self.bland else ties[np.argmax(np.abs(da[ties]))]
            self._tick(t_row)
            start = self.hi[j] if self.at_upper[j] else self.lo[j]
            beta -= t_row * da
            self.at_upper[basis[r]] = da[r] < 0
            self.pivot(r, j, d)
            beta[r] = start + delta * t_row

    def dual(self, cost: np.ndarray) -> str:
        """Minimise ``cost @ z`` from a dual feasible basis."""
        T, basis = self.T, self.basis
        d = cost - cost[basis] @ T
        movable = self.hi > self.lo
        nb = ~self.is_basic & movable
        if np.any(nb & (((~self.at_upper) & (d < -DUAL_FEAS_TOL)) | (self.at_upper & (d > DUAL_FEAS_TOL)))):
            return _NOT_DUAL_FEASIBLE
        while True:
            beta = self.beta
            lo_b, hi_b = self.lo[basis], self.hi[basis]
            viol = np.maximum(lo_b - beta, beta - hi_b)
            bad = np.flatnonzero(viol > FEAS_TOL * np.maximum(1.0, np.abs(beta)))
            if not bad.size:
                return OPTIMAL
            r = bad[np.argmin(basis[bad])] if self.bland else bad[np.argmax(viol[bad])]
            below = beta[r] < lo_b[r]
            row = T[r]
            nb = ~self.is_basic & movable
            if below:
                cand = nb & (((~self.at_upper) & (row < -PIVOT_TOL)) | (self.at_upper & (row > PIVOT_TOL)))
            else:
                cand = nb & (((~self.at_upper) & (row > PIVOT_TOL)) | (self.at_upper & (row < -PIVOT_TOL)))
            idx = np.flatnonzero(cand)
            if not idx.size:
                self.infeasible_row = r
                return INFEASIBLE
            ratios = np.abs(d[idx]) / np.abs(row[idx])
            step = ratios.min()
            ties = idx[ratios <= step + 1e-12]
            q = ties[0] if self.bland else ties[np.argmax(np.abs(row[ties]))]
            self._tick(step)

            target = lo_b[r] if below else hi_b[r]
            start = self.hi[q] if self.at_upper[q] else self.lo[q]
            delta = (beta[r] - target) / row[q]
            beta -= delta * T[:, q]
            self.at_upper[basis[r]] = not below
            self.pivot(r, q, d)
            beta[r] = start + delta

    def farkas_certified(self, r: int) -> bool:
        """Recheck, from a fresh factorisation, that row ``r`` proves infeasibility."""
        e = np.zeros(self.m)
        e[r] = 1.0
        try:
            y = np.linalg.solve(self.M[:, self.basis].T, e)
        except np.linalg.LinAlgError:
            return False
        row = y @ self.M
        row[np.abs(row) < BREAKDOWN_TOL] = 0.0
        rhs = y @ self.b
        with np.errstate(invalid="ignore"):
            a = np.where(row == 0, 0.0, row * self.lo)
            b = np.where(row == 0, 0.0, row * self.hi)
        low = np.minimum(a, b).sum()
        high = np.maximum(a, b).sum()
        tol = 1e-6 * max(1.0, abs(rhs))
        return bool(rhs < low - tol or rhs > high + tol)

    def point(self) -> np.ndarray:
        """Primal point; basic values are re-solved when the running ones drifted."""
        z = self.nonbasic_point()
        z[self.basis] = self.beta
        if self.m and np.abs(self.M @ z - self.b).max(initial=0.0) > 1e-9:
            z[self.basis] = 0.0
            try:
                z[self.basis] = np.linalg.solve(self.M[:, self.basis], self.b - self.M @ z)
            except np.linalg.LinAlgError as exc:
                raise NumericalBreakdown("singular basis at termination") from exc
        lo, hi = self.lo[self.basis], self.hi[self.basis]
        xb = z[self.basis]
        worst = max(np.max(lo - xb, initial=0.0), np.max(xb - hi, initial=0.0))
        if worst > 1e-6:
            raise NumericalBreakdown(f"basic solution violates bounds by {worst:.3g}")
        z[self.basis] = np.clip(xb, lo, hi)
        return z

    def snapshot(self) -> Basis:
        ids = np.arange(self.N)
        ids[self.n_core:] = self.n_core + self.art_rows
        upper = ids[self.at_upper & ~self.is_basic]
        return Basis(tuple(int(v) for v in ids[self.basis]), frozenset(int(v) for v in upper))


def _basis_solve(B: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """``B^-1 rhs``, eliminating the unit (slack or artificial) columns of ``B`` first."""
    nz = B != 0
    unit = nz.sum(axis=0) == 1
    urow = nz[:, unit].argmax(axis=0)
    upos = np.flatnonzero(unit)
    spos = np.flatnonzero(~unit)
    rest = np.setdiff1d(np.arange(B.shape[0]), urow)
    if len(np.unique(urow)) != len(urow) or len(rest) != len(spos):
        raise NumericalBreakdown("singular starting basis")
    out = np.empty_like(rhs)
    try:
        out[spos] = np.linalg.solve(B[np.ix_(rest, spos)], rhs[rest])
    except np.linalg.LinAlgError as exc:
        raise NumericalBreakdown("singular starting basis") from exc
    out[upos] = (rhs[urow] - B[np.ix_(urow, spos)] @ out[spos]) / B[urow, upos][:, None]
    return out


def _rows_hold(act, senses, b) -> np.ndarray:
    tol = FEAS_TOL * np.maximum(1.0, np.abs(b))
    return np.where(senses == "<=", act <= b + tol, np.where(senses == ">=", act >= b - tol, np.abs(act - b) <= tol))


class DenseLp:
    """Dense arrays of a model, solvable repeatedly under tighter column bounds.

    Columns fixed by ``lb``/``ub`` at construction are folded into the
    right-hand side; later solves may tighten the bounds of the other
    columns but must leave those fixed ones alone.
    """

    def __init__(self, c, A, senses, b, lb, ub, constant: float = 0.0):
        self.c = np.asarray(c, dtype=float)
        self.A = np.asarray(A, dtype=float)
        self.senses = np.asarray(senses)
        self.b = np.asarray(b, dtype=float)
        self.lb = np.asarray(lb, dtype=float)
        self.ub = np.asarray(ub, dtype=float)
        self.constant = float(constant)
        if np.any(np.isneginf(self.lb)):
            raise ValueError("columns without a finite lower bound are not supported")

        free = self.lb < self.ub
        b_eff = self.b - self.A[:, ~free] @ self.lb[~free]
        A_free = self.A[:, free]
        active = np.any(A_free != 0, axis=1)
        self.free = free
        self.idle_ok = bool(np.all(self.lb <= self.ub + FEAS_TOL)) and bool(
            _rows_hold(np.zeros(int((~active).sum())), self.senses[~active], b_eff[~active]).all()
        )
        senses_a = self.senses[active]
        ineq = np.flatnonzero(senses_a != "=")
        slack = np.zeros((len(senses_a), len(ineq)))
        slack[ineq, np.arange(len(ineq))] = np.where(senses_a[ineq] == "<=", 1.0, -1.0)
        self.core = np.hstack([A_free[active], slack])
        self.core_b = b_eff[active]
        self.slack_sign = np.zeros(len(senses_a))
        self.slack_sign[ineq] = slack[ineq, np.arange(len(ineq))]
        self.slack_col = np.full(len(senses_a), -1)
        self.n_free = int(free.sum())
        self.slack_col[ineq] = self.n_free + np.arange(len(ineq))
        self.n_core = self.core.shape[1]
        self.cost = np.concatenate([-self.c[free], np.zeros(len(ineq))])

    @classmethod
    def from_model(cls, model: MilpModel) -> "DenseLp":
        c, A, senses, b, lb, ub = model.dense()
        return cls(c, A, senses, b, lb, ub, model.constant)

    def _bounds(self, lb, ub):
        fixed = ~self.free
        if np.any(lb[fixed] != self.lb[fixed]) or np.any(ub[fixed] != self.ub[fixed]):
            raise ValueError("bounds of columns fixed at construction cannot change")
        n_slack = self.n_core - self.n_free
        lo = np.concatenate([lb[self.free], np.zeros(n_slack)])
        hi = np.concatenate([ub[self.free], np.full(n_slack, np.inf)])
        return lo, hi

    def solve(self, lb=None, ub=None, warm: "LpSolution | Basis | None" = None) -> LpSolution:
        """Optimum under the given bounds, optionally warm-started.

        ``warm`` may be an earlier solution (its tableau is copied) or a
        ``Basis``; its bounds must have been looser than the ones given now.
        """
        lb = self.lb if lb is None else np.asarray(lb, dtype=float)
        ub = self.ub if ub is None else np.asarray(ub, dtype=float)
        n = len(self.c)
        if np.any(lb > ub + FEAS_TOL) or not self.idle_ok:
            return LpSolution(INFEASIBLE, np.nan, np.full(n, np.nan))
        lo, hi = self._bounds(lb, ub)
        if warm is not None:
            try:
                sol = self._solve_warm(lb, lo, hi, warm)
            except NumericalBreakdown:
                sol = None
            if sol is not None:
                return sol
        return self._solve_cold(lb, lo, hi)

    def _finish(self, lb, tab: _Tableau, iterations: int, warm: bool) -> LpSolution:
        x = np.where(self.free, 0.0, lb)
        x[self.free] = tab.point()[: self.n_free]
        act = self.A @ x
        if not _rows_hold(act, self.senses, self.b).all():
            raise NumericalBreakdown("optimal basis does not satisfy the rows")
        objective = float(self.c @ x + self.constant)
        return LpSolution(OPTIMAL, objective, x, iterations, tab.snapshot(), tab, warm)

    def _solve_cold(self, lb, lo, hi) -> LpSolution:
        n = len(self.c)
        m = len(self.core_b)
        res = self.core_b - self.core[:, : self.n_free] @ lo[: self.n_free]
        basis = np.empty(m, dtype=int)
        art_rows, art_sign = [], []
        for i in range(m):
            k = self.slack_col[i]
            if k >= 0 and self.slack_sign[i] * res[i] >= 0:
                basis[i] = k
            else:
                basis[i] = self.n_core + len(art_rows)
                art_rows.append(i)
                art_sign.append(1.0 if res[i] >= 0 else -1.0)
        art = np.zeros((m, len(art_rows)))
        art[art_rows, np.arange(len(art_rows))] = art_sign
        M = np.hstack([self.core, art])
        scale = M[np.arange(m), basis]
        tab = _Tableau(
            M,
            self.core_b,
            np.concatenate([lo, np.zeros(len(art_rows))]),
            np.concatenate([hi, np.full(len(art_rows), np.inf)]),
            basis,
            art_rows,
            self.n_core,
            T=M / scale[:, None],
            binv_b=self.core_b / scale,
        )
        tab.place()
        if art_rows:
            cost = np.zeros(tab.N)
            cost[self.n_core :] = 1.0
            tab.primal(cost)
            infeas = float(np.sum(np.clip(tab.beta[tab.basis >= self.n_core], 0.0, None)))
            if infeas > FEAS_TOL * max(1.0, float(np.abs(self.core_b).max(initial=0.0))):
                return LpSolution(INFEASIBLE, np.nan, np.full(n, np.nan), tab.iterations)
            tab.hi[self.n_core :] = 0.0
        status = tab.primal(np.concatenate([self.cost, np.zeros(len(art_rows))]))
        if status == UNBOUNDED:
            return LpSolution(UNBOUNDED, np.inf, np.full(n, np.nan), tab.iterations)
        return self._finish(lb, tab, tab.iterations, False)

    def _solve_warm(self, lb, lo, hi, warm) -> LpSolution | None:
        n = len(self.c)
        if isinstance(warm, LpSolution):
            if warm.tableau is None:
                return None
            tab = warm.tableau.copy()
        else:
            basic = np.asarray(warm.basic, dtype=int)
            art_ids = np.sort(basic[basic >= self.n_core])
            art_rows = art_ids - self.n_core
            art = np.zeros((len(self.core_b), len(art_rows)))
            art[art_rows, np.arange(len(art_rows))] = 1.0
            to_local = {int(g): self.n_core + k for k, g in enumerate(art_ids)}
            local = [to_local.get(int(g), int(g)) for g in basic]
            tab = _Tableau(
                np.hstack([self.core, art]),
                self.core_b,
                np.zeros(self.n_core + len(art_rows)),
                np.zeros(self.n_core + len(art_rows)),
                local,
                art_rows,
                self.n_core,
            )
            upper = [g for g in warm.at_upper if g < self.n_core]
            tab.at_upper[upper] = True
        n_art = tab.N - self.n_core
        tab.lo = np.concatenate([lo, np.zeros(n_art)])
        tab.hi = np.concatenate([hi, np.zeros(n_art)])
        tab.place()
        status = tab.dual(np.concatenate([self.cost, np.zeros(n_art)]))
        if status == OPTIMAL:
            return self._finish(lb, tab, tab.iterations, True)
        if status == INFEASIBLE and tab.farkas_certified(tab.infeasible_row):
            return LpSolution(INFEASIBLE, np.nan, np.full(n, np.nan), tab.iterations, warm=True)
        return None


def solve_lp(model: MilpModel) -> LpSolution:
    """Optimum of the model with every binary relaxed to its interval."""
    return DenseLp.from_model(model).solve()
