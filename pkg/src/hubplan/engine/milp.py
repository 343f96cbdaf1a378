"""Best-first branch-and-bound over simplex relaxations.

Nodes carry only their bound vectors and the parent's optimal basis; the LP
is solved lazily when a node is popped, warm-started by the dual simplex.
Branching picks the most fractional integer variable (ties to the lowest id).

Warm starts and heuristic proposals are integer assignments, either full
vectors or ``{var_id: value}`` mappings.  They are completed by an LP with
the integers fixed; a mapping that leaves some integers free is accepted only
if the completed relaxation happens to be integral.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .model import Basis, MilpSolution, Model
from .simplex import standard_form

log = logging.getLogger(__name__)

INT_TOL = 1e-6

Assignment = Mapping[int, float] | np.ndarray
HeuristicHook = Callable[[np.ndarray, float], "Assignment | None"]


@dataclass
class MilpOptions:
    gap_tol: float = 1e-6
    time_limit: float = float("inf")
    node_limit: int = 100_000
    warm_starts: Sequence[Assignment] = field(default_factory=list)
    int_tol: float = INT_TOL
    max_hook_chain: int = 25


class _Search:
    def __init__(self, model: Model, opts: MilpOptions, hook: HeuristicHook | None):
        self.model = model
        self.opts = opts
        self.hook = hook
        self.std = standard_form(model)
        self.mask = model.integer_mask()
        self.int_idx = np.flatnonzero(self.mask)
        A, _, _, _, _, lb, ub = model.arrays()
        self.lb0 = lb.copy()
        self.ub0 = ub.copy()
        # integer bounds can be rounded inward for free
        self.lb0[self.int_idx] = np.ceil(self.lb0[self.int_idx] - opts.int_tol)
        self.ub0[self.int_idx] = np.floor(self.ub0[self.int_idx] + opts.int_tol)
        self.result = MilpSolution(status="unknown")
        self.start = time.monotonic()

    # -- incumbents -------------------------------------------------------
    def _complete(self, assign: Assignment):
        """Return (x, objective) or a rejection reason string."""
        lb, ub = self.lb0.copy(), self.ub0.copy()
        tol = self.opts.int_tol
        if isinstance(assign, Mapping):
            items = assign.items()
        else:
            arr = np.asarray(assign, dtype=float)
            if arr.shape != (self.model.num_vars,):
                return f"expected {self.model.num_vars} values, got shape {arr.shape}"
            items = ((j, arr[j]) for j in self.int_idx)
        for j, v in items:
            j = int(j)
            if not 0 <= j < self.model.num_vars:
                return f"variable id {j} out of range"
            if not self.mask[j]:
                continue
            r = round(float(v))
            if abs(float(v) - r) > tol:
                return f"{self.model.var_names[j]}={v} is not integral"
            if r < lb[j] - tol or r > ub[j] + tol:
                return f"{self.model.var_names[j]}={r} outside [{lb[j]}, {ub[j]}]"
            lb[j] = ub[j] = r
        sol = self.std.solve(lb, ub)
        if not sol.optimal:
            return f"completion LP is {sol.status}"
        frac = np.abs(sol.x[self.int_idx] - np.round(sol.x[self.int_idx]))
        if frac.size and frac.max() > tol:
            return "partial assignment does not complete to an integral point"
        x = sol.x.copy()
        x[self.int_idx] = np.round(x[self.int_idx])
        return x, sol.objective

    def _better(self, obj: float) -> bool:
        inc = self.result.objective
        return obj < inc - 1e-9 * max(1.0, abs(inc)) if np.isfinite(inc) else True

    def _install(self, x, obj, source: str) -> None:
        """Install an incumbent and let the hook try to improve it."""
        chain = 0
        while True:
            self.result.x = x
            self.result.objective = obj
            self.result.trajectory.append((self.result.nodes, obj, self.result.bound))
            log.debug("incumbent %.6g from %s", obj, source)
            if self.hook is None or chain >= self.opts.max_hook_chain:
                return
            chain += 1
            self.result.heuristic_calls += 1
            proposal = self.hook(x.copy(), obj)
            if proposal is None:
                return
            done = self._complete(proposal)
            if isinstance(done, str):
                log.debug("heuristic proposal rejected: %s", done)
                self.result.hook_rejections.append(done)
                return
            x2, obj2 = done
            if not self._better(obj2):
                return
            self.result.heuristic_improvements += 1
            x, obj, source = x2, obj2, "heuristic"

    # -- main loop ----------------------------------------------------------
    def run(self) -> MilpSolution:
        res = self.result
        opts = self.opts
        for k, ws in enumerate(opts.warm_starts):
            done = self._complete(ws)
            if isinstance(done, str):
                res.warm_start_log.append(f"warm start {k} rejected: {done}")
                continue
            x, obj = done
            res.warm_start_log.append(f"warm start {k} accepted: objective {obj:.10g}")
            if self._better(obj):
                self._install(x, obj, f"warm start {k}")

        if np.any(self.lb0 > self.ub0):
            res.status = "infeasible"
            return res

        seq = itertools.count()
        heap: list = [(-np.inf, next(seq), self.lb0, self.ub0, None)]
        root = True
        while heap:
            if res.nodes >= opts.node_limit:
                res.status = "node_limit"
                break
            if time.monotonic() - self.start > opts.time_limit:
                res.status = "time_limit"
                break
            open_bound = heap[0][0]
            if np.isfinite(open_bound) and open_bound > res.bound:
                res.bound = open_bound
            if self._closed():
                break
            parent_bound, _, lb, ub, basis = heapq.heappop(heap)
            if np.isfinite(res.objective) and parent_bound >= res.objective - self._prune_slack():
                continue
            res.nodes += 1
            sol = self.std.solve(lb, ub, basis)
            if sol.status == "unbounded":
                if root:
                    res.status = "unbounded"
                    return res
                continue
            if not sol.optimal:
                root = False
                continue
            if root:
                res.bound = sol.objective
                root = False
            if np.isfinite(res.objective) and sol.objective >= res.objective - self._prune_slack():
                continue
            j = self._branch_var(sol.x)
            if j < 0:
                x = sol.x.copy()
                x[self.int_idx] = np.round(x[self.int_idx])
                if self._better(sol.objective):
                    self._install(x, sol.objective, "tree")
                continue
            v = sol.x[j]
            down_ub = ub.copy()
            down_ub[j] = np.floor(v)
            up_lb = lb.copy()
            up_lb[j] = np.ceil(v)
            heapq.heappush(heap, (sol.objective, next(seq), lb, down_ub, sol.basis))
            heapq.heappush(heap, (sol.objective, next(seq), up_lb, ub, sol.basis))
        else:
            # tree exhausted: incumbent (if any) is optimal
            if res.x is not None:
                res.bound = res.objective
        if res.status == "unknown":
            res.status = "optimal" if res.x is not None else "infeasible"
        if res.x is not None and res.bound > res.objective:
            res.bound = res.objective
        res.trajectory.append((res.nodes, res.objective, res.bound))
        return res

    def _prune_slack(self) -> float:
        inc = self.result.objective
        return self.opts.gap_tol * max(1.0, abs(inc))

    def _closed(self) -> bool:
        res = self.result
        if res.x is None:
            return False
        if res.gap <= self.opts.gap_tol:
            res.status = "optimal"
            return True
        return False

    def _branch_var(self, x: np.ndarray) -> int:
        if self.int_idx.size == 0:
            return -1
        vals = x[self.int_idx]
        frac = np.abs(vals - np.round(vals))
        score = np.minimum(vals - np.floor(vals), np.ceil(vals) - vals)
        score[frac <= self.opts.int_tol] = -1.0
        k = int(np.argmax(score))  # argmax returns the first (lowest id) on ties
        return -1 if score[k] < 0 else int(self.int_idx[k])


def solve_milp(model: Model, options: MilpOptions | None = None,
               heuristic_hook: HeuristicHook | None = None) -> MilpSolution:
    """Minimise ``model`` with integrality enforced on binary/integer variables.

    ``heuristic_hook(x, objective)`` is called on every new incumbent and may
    return an integer assignment; it is installed if it completes to a
    strictly better feasible point.
    """
    return _Search(model, options or MilpOptions(), heuristic_hook).run()


def enumerate_binary(model: Model) -> tuple[float, np.ndarray | None]:
    """Exhaustive enumeration over all integer assignments (small models only)."""
    std = standard_form(model)
    mask = model.integer_mask()
    idx = np.flatnonzero(mask)
    lb = np.array(model.lb)
    ub = np.array(model.ub)
    ranges = [range(int(np.ceil(lb[j])), int(np.floor(ub[j])) + 1) for j in idx]
    best, best_x = np.inf, None
    for combo in itertools.product(*ranges):
        l2, u2 = lb.copy(), ub.copy()
        l2[idx] = combo
        u2[idx] = combo
        sol = std.solve(l2, u2)
        if sol.optimal and sol.objective < best - 1e-12:
            best, best_x = sol.objective, sol.x
    return best, best_x


__all__ = ["MilpOptions", "solve_milp", "enumerate_binary", "Basis"]
