"""Bounded-variable simplex on a dense tableau.

The LP ``min c x  s.t.  A x {<=,>=,==} b,  lb <= x <= ub`` is brought to
``A x + s = b`` with one slack per row whose bounds encode the sense
(``<=``: s >= 0, ``>=``: s <= 0, ``==``: s = 0).  Rows are scaled to unit
max-abs and the objective to unit max-abs before pivoting; duals and reduced
costs are unscaled on the way out.

Cold solves run a two-phase primal simplex with artificials.  Warm solves
refactor a stored basis and run the dual simplex when the basis is dual but
not primal feasible, which is what branch-and-bound children look like.
Dantzig pricing with a Harris ratio test is used until a run of degenerate
pivots, after which Bland's rule takes over until progress resumes.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from . import _kernels as K
from .model import Basis, LpSolution, Model

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
PIVOT_TOL = 1e-9
REFACTOR_EVERY = 150
DEGENERATE_RUN = 40


class SimplexError(RuntimeError):
    """Raised when the pivot budget is exhausted or the basis goes singular."""


class _State:
    __slots__ = ("T", "d", "x", "basis", "status", "lo", "hi", "allowed", "cost", "iters", "pivots")

    def __init__(self, T, d, x, basis, status, lo, hi, allowed, cost):
        self.T = T
        self.d = d
        self.x = x
        self.basis = basis
        self.status = status
        self.lo = lo
        self.hi = hi
        self.allowed = allowed
        self.cost = cost
        self.iters = 0
        self.pivots = 0


class StandardLP:
    """Scaled standard form of a model, reusable across bound changes."""

    def __init__(self, A, senses, b, c, c0, lb, ub):
        m, n = A.shape
        self.m, self.n = m, n
        rs = np.abs(A).max(axis=1, initial=0.0) if n else np.zeros(m)
        rs[rs == 0.0] = 1.0
        self.row_scale = rs
        cs = float(np.abs(c).max(initial=0.0))
        self.obj_scale = cs if cs > 0.0 else 1.0
        self.A = A / rs[:, None]
        self.b = b / rs
        self.c = c
        self.c0 = c0
        self.lb = lb.astype(float)
        self.ub = ub.astype(float)
        s_lo = np.zeros(m)
        s_hi = np.zeros(m)
        s_hi[senses == "<="] = np.inf
        s_lo[senses == ">="] = -np.inf
        self.s_lo, self.s_hi = s_lo, s_hi
        self.Af = np.ascontiguousarray(np.hstack([self.A, np.eye(m)]))
        self.cost = np.concatenate([c / self.obj_scale, np.zeros(m)])
        self.N = n + m
        self.max_iter = 50 * (self.N + m) + 2000

    @classmethod
    def from_model(cls, model: Model) -> "StandardLP":
        A, senses, b, c, c0, lb, ub = model.arrays()
        return cls(A, senses, b, c, c0, lb, ub)

    # ------------------------------------------------------------------
    def solve(self, lb=None, ub=None, warm: Basis | None = None) -> LpSolution:
        lo = np.concatenate([self.lb if lb is None else np.asarray(lb, float), self.s_lo])
        hi = np.concatenate([self.ub if ub is None else np.asarray(ub, float), self.s_hi])
        if np.any(lo > hi + FEAS_TOL):
            return LpSolution(status="infeasible")
        hi = np.maximum(hi, lo)
        total_iters = 0
        if warm is not None:
            st = self._from_basis(warm, lo, hi)
            if st is not None:
                outcome = self._warm_run(st)
                total_iters += st.iters
                if outcome is not None:
                    return self._finish(st, outcome, total_iters)
        st, outcome = self._cold(lo, hi)
        total_iters += st.iters
        if outcome == "infeasible":
            return self._infeasible(st, total_iters)
        return self._finish(st, outcome, total_iters)

    # ------------------------------------------------------------------
    def _warm_run(self, st: _State):
        if self._primal_feasible(st):
            return self._primal(st)
        if self._dual_feasible(st):
            out = self._dual(st)
            if out == "optimal":
                return self._primal(st)
            if out == "infeasible":
                return "infeasible_dual"
        return None

    def _cold(self, lo, hi):
        m, n, N = self.m, self.n, self.N
        x = np.zeros(N)
        status = np.full(N, K.AT_ZERO, dtype=np.int64)
        for j in range(n):
            if np.isfinite(lo[j]):
                x[j] = lo[j]
                status[j] = K.AT_LOWER
            elif np.isfinite(hi[j]):
                x[j] = hi[j]
                status[j] = K.AT_UPPER
        res = self.b - self.A @ x[:n]
        basis = np.empty(m, dtype=np.int64)
        art_rows, art_sign = [], []
        for i in range(m):
            j = n + i
            if lo[j] - FEAS_TOL <= res[i] <= hi[j] + FEAS_TOL:
                basis[i] = j
                x[j] = res[i]
                status[j] = K.BASIC
            else:
                bound = lo[j] if res[i] < lo[j] else hi[j]
                x[j] = bound
                status[j] = K.AT_LOWER if bound == lo[j] else K.AT_UPPER
                art_rows.append(i)
                art_sign.append(1.0 if res[i] - bound > 0 else -1.0)
        k = len(art_rows)
        if k == 0:
            T = self.Af.copy()
            st = _State(T, None, x, basis, status, lo, hi, np.ones(N, dtype=bool), self.cost)
            st.d = self.cost - self.cost[basis] @ T
            return st, self._primal(st)

        art = np.zeros((m, k))
        for a, (i, s) in enumerate(zip(art_rows, art_sign)):
            art[i, a] = s
        T = np.hstack([self.Af, art])
        xa = np.zeros(k)
        for a, (i, s) in enumerate(zip(art_rows, art_sign)):
            T[i] *= s
            basis[i] = N + a
            xa[a] = abs(res[i] - x[n + i])
        x = np.concatenate([x, xa])
        status = np.concatenate([status, np.zeros(k, dtype=np.int64)])
        lo1 = np.concatenate([lo, np.zeros(k)])
        hi1 = np.concatenate([hi, np.full(k, np.inf)])
        cost1 = np.concatenate([np.zeros(N), np.ones(k)])
        T = np.ascontiguousarray(T)
        st = _State(T, cost1 - cost1[basis] @ T, x, basis, status, lo1, hi1,
                    np.ones(N + k, dtype=bool), cost1)
        out = self._primal(st)
        if out != "optimal":
            raise SimplexError(f"phase 1 ended with status {out}")
        infeas = float(st.x[N:].sum())
        if infeas > FEAS_TOL * max(1.0, float(np.abs(self.b).max(initial=0.0))):
            return st, "infeasible"

        # drive artificials out of the basis, then drop their columns
        st.allowed[N:] = False
        st.hi[N:] = 0.0
        for r in range(m):
            if st.basis[r] >= N:
                row = np.abs(st.T[r, :N])
                row[st.status[:N] == K.BASIC] = 0.0
                q = int(np.argmax(row))
                if row[q] <= PIVOT_TOL:
                    raise SimplexError("could not remove artificial variable from basis")
                leaving = st.basis[r]
                K.pivot(st.T, st.d, r, q)
                st.basis[r] = q
                st.status[q] = K.BASIC
                st.status[leaving] = K.AT_LOWER
        st2 = _State(np.ascontiguousarray(st.T[:, :N]), None, st.x[:N].copy(), st.basis,
                     st.status[:N].copy(), lo, hi, np.ones(N, dtype=bool), self.cost)
        st2.iters = st.iters
        self._refactor(st2)
        return st2, self._primal(st2)

    # ------------------------------------------------------------------
    def _from_basis(self, warm: Basis, lo, hi):
        N = self.N
        if warm.basic.shape[0] != self.m or warm.status.shape[0] != N:
            return None
        status = warm.status.astype(np.int64).copy()
        basis = warm.basic.astype(np.int64).copy()
        x = np.zeros(N)
        for j in np.flatnonzero(status != K.BASIC):
            s = status[j]
            if s == K.AT_UPPER and np.isfinite(hi[j]):
                x[j] = hi[j]
            elif np.isfinite(lo[j]) and (s != K.AT_ZERO or lo[j] > 0.0):
                x[j] = lo[j]
                status[j] = K.AT_LOWER
            elif np.isfinite(hi[j]):
                x[j] = hi[j]
                status[j] = K.AT_UPPER
            else:
                status[j] = K.AT_ZERO
        st = _State(None, None, x, basis, status, lo, hi, np.ones(N, dtype=bool), self.cost)
        try:
            self._refactor(st)
        except (np.linalg.LinAlgError, ValueError, SimplexError):
            return None
        return st

    def _refactor(self, st: _State) -> None:
        B = self.Af[:, st.basis]
        lu = sla.lu_factor(B, check_finite=False)
        if np.min(np.abs(np.diag(lu[0])), initial=np.inf) < 1e-11:
            raise SimplexError("singular basis")
        st.T = np.ascontiguousarray(sla.lu_solve(lu, self.Af, check_finite=False))
        nb = st.status != K.BASIC
        rhs = self.b - self.Af[:, nb] @ st.x[nb]
        st.x[st.basis] = sla.lu_solve(lu, rhs, check_finite=False)
        st.d = st.cost - st.cost[st.basis] @ st.T
        st.d[st.basis] = 0.0

    def _primal_feasible(self, st: _State, tol: float = FEAS_TOL) -> bool:
        xb = st.x[st.basis]
        return bool(np.all(xb >= st.lo[st.basis] - tol) and np.all(xb <= st.hi[st.basis] + tol))

    def _dual_feasible(self, st: _State, tol: float = OPT_TOL) -> bool:
        d, s = st.d, st.status
        free_box = st.hi > st.lo
        bad = (
            ((s == K.AT_LOWER) & free_box & (d < -tol))
            | ((s == K.AT_UPPER) & free_box & (d > tol))
            | ((s == K.AT_ZERO) & (np.abs(d) > tol))
        )
        return not bool(bad.any())

    # ------------------------------------------------------------------
    def _primal(self, st: _State) -> str:
        bland = False
        degenerate = 0
        since_refactor = 0
        while True:
            if st.iters >= self.max_iter:
                raise SimplexError(f"primal simplex exceeded {self.max_iter} iterations")
            st.iters += 1
            q, dirn = K.choose_entering(st.d, st.status, st.lo, st.hi, st.allowed, OPT_TOL, bland)
            if q < 0:
                return "optimal"
            dxB = -dirn * st.T[:, q]
            basis = st.basis
            r, t = K.primal_ratio(st.x[basis], st.lo[basis], st.hi[basis], dxB, basis,
                                  PIVOT_TOL, FEAS_TOL, bland)
            flip = st.hi[q] - st.lo[q]
            if r < 0 and not np.isfinite(flip):
                st.x = st.x.copy()
                self._ray = (q, dirn, dxB.copy())
                return "unbounded"
            if np.isfinite(flip) and flip <= t:
                st.x[q] += dirn * flip
                st.x[basis] += dxB * flip
                st.status[q] = K.AT_UPPER if dirn > 0 else K.AT_LOWER
                degenerate = 0
                bland = False
                continue
            st.x[q] += dirn * t
            st.x[basis] += dxB * t
            leaving = basis[r]
            if dxB[r] < 0:
                st.x[leaving] = st.lo[leaving]
                st.status[leaving] = K.AT_LOWER
            else:
                st.x[leaving] = st.hi[leaving]
                st.status[leaving] = K.AT_UPPER if st.hi[leaving] > st.lo[leaving] else K.AT_LOWER
            K.pivot(st.T, st.d, r, q)
            basis[r] = q
            st.status[q] = K.BASIC
            st.pivots += 1
            if t <= 1e-12:
                degenerate += 1
                if degenerate > DEGENERATE_RUN:
                    bland = True
            else:
                degenerate = 0
                bland = False
            since_refactor += 1
            if since_refactor >= REFACTOR_EVERY:
                since_refactor = 0
                self._refactor(st)

    def _dual(self, st: _State) -> str:
        since_refactor = 0
        start = st.iters
        while True:
            if st.iters >= self.max_iter:
                raise SimplexError(f"dual simplex exceeded {self.max_iter} iterations")
            st.iters += 1
            bland = (st.iters - start) > 4 * self.m + 50
            basis = st.basis
            xB = st.x[basis]
            r = K.choose_leaving(xB, st.lo[basis], st.hi[basis], basis, FEAS_TOL, bland)
            if r < 0:
                return "optimal"
            leaving = basis[r]
            if xB[r] < st.lo[leaving]:
                sign, target = 1.0, st.lo[leaving]
            else:
                sign, target = -1.0, st.hi[leaving]
            alpha = st.T[r]
            q = K.dual_ratio(alpha, st.d, st.status, st.lo, st.hi, st.allowed, sign, PIVOT_TOL)
            if q < 0:
                return "infeasible"
            delta = (xB[r] - target) / alpha[q]
            st.x[q] += delta
            st.x[basis] -= st.T[:, q] * delta
            st.x[leaving] = target
            st.status[leaving] = K.AT_LOWER if sign > 0 else K.AT_UPPER
            if st.hi[leaving] == st.lo[leaving]:
                st.status[leaving] = K.AT_LOWER
            K.pivot(st.T, st.d, r, q)
            basis[r] = q
            st.status[q] = K.BASIC
            st.pivots += 1
            since_refactor += 1
            if since_refactor >= REFACTOR_EVERY:
                since_refactor = 0
                self._refactor(st)

    # ------------------------------------------------------------------
    def _finish(self, st: _State, outcome: str, iters: int) -> LpSolution:
        n = self.n
        if outcome == "infeasible_dual":
            # a warm basis proved infeasibility; re-run cold for a Farkas certificate
            lo, hi = st.lo, st.hi
            st2, out2 = self._cold(lo, hi)
            if out2 == "infeasible":
                return self._infeasible(st2, iters + st2.iters)
            return self._finish(st2, out2, iters + st2.iters)
        if outcome == "unbounded":
            q, dirn, dxB = self._ray
            ray = np.zeros(self.N)
            ray[q] = dirn
            ray[st.basis] += dxB
            return LpSolution(status="unbounded", x=st.x[:n].copy(), ray=ray[:n], iterations=iters)
        for _ in range(3):
            self._refactor(st)
            if self._primal_feasible(st, 1e-7) and self._dual_feasible(st, 1e-7):
                break
            if not self._primal_feasible(st, 1e-7):
                if self._dual(st) == "infeasible":
                    return self._finish(st, "infeasible_dual", iters + st.iters)
            out = self._primal(st)
            if out == "unbounded":
                return self._finish(st, out, iters + st.iters)
        else:
            raise SimplexError("could not reach a clean optimal basis")
        x = st.x[:n].copy()
        y = -st.d[n:] * self.obj_scale / self.row_scale
        rc = st.d[:n] * self.obj_scale
        obj = float(self.c @ x + self.c0)
        basis = Basis(st.basis.copy(), st.status.copy())
        return LpSolution(status="optimal", x=x, objective=obj, duals=y, reduced_costs=rc,
                          basis=basis, iterations=iters)

    def _infeasible(self, st: _State, iters: int) -> LpSolution:
        n, m = self.n, self.m
        # phase-1 duals: y^T b > 0 while y^T A x stays bounded by the box
        y = -st.d[n:n + m] / self.row_scale
        return LpSolution(status="infeasible", farkas=y, iterations=iters)


def standard_form(model: Model) -> StandardLP:
    std = model._cache.get("std")
    if std is None:
        std = StandardLP.from_model(model)
        model._cache["std"] = std
    return std


def solve_lp(model: Model, warm: Basis | None = None, lb=None, ub=None,
             relax: bool = False) -> LpSolution:
    """Solve ``model`` as an LP.

    Integer and binary variables must be fixed (lb == ub) unless ``relax`` is
    set, in which case integrality is dropped.
    """
    if not relax:
        mask = model.integer_mask()
        lo = np.asarray(model.lb if lb is None else lb)
        hi = np.asarray(model.ub if ub is None else ub)
        if np.any(mask & (lo != hi)):
            raise ValueError("solve_lp needs integer variables fixed; use relax=True or solve_milp")
    return standard_form(model).solve(lb, ub, warm)


def farkas_gap(model: Model, y: np.ndarray, lb=None, ub=None) -> float:
    """``y^T b - max_{lb<=x<=ub, slack bounds} y^T (A x + s)``; positive proves infeasibility."""
    A, senses, b, _, _, lo, hi = model.arrays()
    lo = lo if lb is None else np.asarray(lb, float)
    hi = hi if ub is None else np.asarray(ub, float)
    g = A.T @ y
    best = 0.0
    for gj, l, u in zip(g, lo, hi):
        if abs(gj) <= 1e-12:
            continue
        bound = u if gj > 0 else l
        if not np.isfinite(bound):
            return -np.inf
        best += gj * bound
    for yi, s in zip(y, senses):
        if abs(yi) <= 1e-12:
            continue
        # slack s_i: <= has s >= 0, >= has s <= 0, == fixed at 0
        if (s == "<=" and yi > 0) or (s == ">=" and yi < 0):
            return -np.inf
    return float(y @ b - best)
