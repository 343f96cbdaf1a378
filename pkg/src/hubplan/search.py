"""Incumbent improvement, Pareto sweeps and warm-start selection.

``neighbor_search`` perturbs plan slots by one step and prices each neighbor
with fixed-plan operator LPs.  Among cheaper neighbors that stay feasible and
within the emissions cap it moves to the one with the best cost reduction
per unit of added emissions; neighbors that cut both cost and emissions rank
first.  Order 2 is a variable-neighborhood descent: single-slot moves are
tried first and pair moves only when no single move improves, so its result
is never worse than order 1 from the same start.
"""

from __future__ import annotations

import csv
import io
import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .hub_model import HubTopology
from .operation_model import InvestmentPlan, PlanEvaluation, evaluate_plan
from .scenarios import ScenarioSet

log = logging.getLogger(__name__)

MODES = ("operator", "cooperative")
COST_TOL = 1e-7


@dataclass(frozen=True)
class Neighborhood:
    order: int = 1
    step: int = 1

    def __post_init__(self):
        if self.order not in (1, 2):
            raise ValueError("neighborhood order must be 1 or 2")
        if self.step < 1:
            raise ValueError("neighborhood step must be >= 1")


@dataclass
class SearchResult:
    plan: InvestmentPlan
    evaluation: PlanEvaluation | None
    start_cost: float
    moves: list[tuple[str, float, float]] = field(default_factory=list)  # (describe, cost, emissions)
    plan_evaluations: int = 0
    lp_solves: int = 0
    note: str = ""

    @property
    def cost(self) -> float:
        return self.evaluation.total if self.evaluation is not None else math.inf

    @property
    def improved(self) -> bool:
        return self.cost < self.start_cost - COST_TOL * max(1.0, abs(self.start_cost))


class _Pricer:
    """Memoised plan evaluation in operator or cooperative mode."""

    def __init__(self, topo: HubTopology, scen: ScenarioSet, cap: float | None, mode: str):
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        self.topo, self.scen, self.cap, self.mode = topo, scen, cap, mode
        self.cache: dict[tuple[int, ...], PlanEvaluation] = {}
        self.lp_solves = 0

    def __call__(self, plan: InvestmentPlan) -> PlanEvaluation:
        key = plan.vector(self.topo.spec)
        if key not in self.cache:
            if self.mode == "operator":
                ev = evaluate_plan(self.topo, self.scen, plan, optimistic=True)
                self.lp_solves += 2 * self.scen.S * self.scen.Y
            else:
                ev = evaluate_plan(self.topo, self.scen, plan, emission_cap=self.cap)
                self.lp_solves += 1
            self.cache[key] = ev
        return self.cache[key]

    def admissible(self, ev: PlanEvaluation) -> bool:
        if not ev.feasible:
            return False
        return self.cap is None or ev.max_emissions <= self.cap + 1e-9 * max(1.0, abs(self.cap))


def _moves(spec, vec: tuple[int, ...], order: int, step: int):
    """Neighbor vectors of exactly ``order`` perturbed slots, with a stable move id."""
    bits = InvestmentPlan.slot_bits(spec)
    n = len(vec)
    for slots in itertools.combinations(range(n), order):
        for signs in itertools.product((1, -1), repeat=order):
            new = list(vec)
            ok = True
            for j, sg in zip(slots, signs):
                new[j] += sg * step
                if not 0 <= new[j] <= 2 ** bits[j] - 1:
                    ok = False
            if ok:
                yield (slots, signs), tuple(new)


def neighbor_search(topo: HubTopology, scen: ScenarioSet, incumbent: InvestmentPlan,
                    emission_cap: float | None = None, order: int = 1,
                    mode: str = "operator", max_moves: int = 1000,
                    neighborhood: Neighborhood | None = None) -> SearchResult:
    """Descend from ``incumbent`` through single-step neighbors (see module doc).

    ``mode="operator"`` prices plans by the cost-minimising operator with
    optimistic ties; ``"cooperative"`` lets dispatch honour the annual cap.
    Returns the input unchanged when it is infeasible or already at the cap.
    """
    nb = neighborhood or Neighborhood(order)
    spec = topo.spec
    price = _Pricer(topo, scen, emission_cap, mode)
    cur_plan = incumbent
    cur = price(incumbent)
    res = SearchResult(incumbent, cur, cur.total if cur.feasible else math.inf)
    if not price.admissible(cur):
        res.note = "incumbent infeasible or above the emissions cap"
        res.lp_solves = price.lp_solves
        res.plan_evaluations = len(price.cache)
        return res
    if emission_cap is not None and cur.max_emissions >= emission_cap:
        res.note = "incumbent has no emissions slack"
    for _ in range(max_moves):
        best = None
        for k in range(1, nb.order + 1):
            vec = cur_plan.vector(spec)
            for move_id, new in _moves(spec, vec, k, nb.step):
                plan = InvestmentPlan.from_vector(spec, new)
                ev = price(plan)
                if not price.admissible(ev):
                    continue
                saving = cur.total - ev.total
                if saving <= COST_TOL * max(1.0, abs(cur.total)):
                    continue
                d_em = ev.max_emissions - cur.max_emissions
                ratio = math.inf if d_em <= 0 else saving / d_em
                key = (ratio, saving, tuple(-j for j in move_id[0]), tuple(move_id[1]))
                if best is None or key > best[0]:
                    best = (key, plan, ev)
            if best is not None:
                break
        if best is None:
            break
        _, cur_plan, cur = best
        res.moves.append((cur_plan.describe(spec), cur.total, cur.max_emissions))
        log.debug("neighbor move -> %s (%.6g)", cur_plan.describe(spec), cur.total)
    res.plan, res.evaluation = cur_plan, cur
    res.lp_solves = price.lp_solves
    res.plan_evaluations = len(price.cache)
    return res


# ---------------------------------------------------------------------------
# warm starts
# ---------------------------------------------------------------------------


def pick_warm_start(pool: Sequence[InvestmentPlan], topo: HubTopology, scen: ScenarioSet,
                    carbon_price: float = 0.0) -> InvestmentPlan:
    """Plan minimising investment + NPV operation + price x emissions, re-priced at ``carbon_price``."""
    if not pool:
        raise ValueError("warm-start pool is empty")
    best, best_score = None, math.inf
    for plan in pool:
        ev = evaluate_plan(topo, scen, plan, optimistic=True, tax_rate=carbon_price)
        if not ev.feasible:
            continue
        score = ev.total + carbon_price * float(np.sum(ev.breakdown.emissions))
        if best is None or score < best_score - 1e-9 * max(1.0, abs(best_score)):
            best, best_score = plan, score
    if best is None:
        raise ValueError("no feasible plan in the warm-start pool")
    return best


# ---------------------------------------------------------------------------
# Pareto sweeps
# ---------------------------------------------------------------------------

SOURCES = ("solved", "inherited-from-tighter", "bound-from-looser")
FRONTIER_HEADER = ["target_tCO2e", "total_cost", "invest_cost", "net_operate_cost", "carbon_price",
                   "achieved_tCO2e", "gap", "source"]


@dataclass
class ParetoPoint:
    target: float
    result: object  # FrameworkResult
    upper: float
    lower: float
    source: str = "solved"
    error: str = ""

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValueError(f"unknown source {self.source!r}")


def targets_for(baseline_emissions: float, resolution: int) -> list[float]:
    """``baseline * k / resolution`` for k = resolution..1 (loosest first)."""
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    return [baseline_emissions * k / resolution for k in range(resolution, 0, -1)]


def share_bounds(points: list[ParetoPoint], topo: HubTopology | None = None,
                 scen: ScenarioSet | None = None) -> list[ParetoPoint]:
    """Apply cross-target bound sharing in place.

    A solution for a tighter target is feasible for every looser one, so it
    replaces a looser point's incumbent when cheaper (re-verified when the
    hub is supplied).  A lower bound proven for a looser target is valid for
    every tighter one.
    """
    order = sorted(range(len(points)), key=lambda k: points[k].target)
    # tight -> loose: carry the cheapest feasible incumbent upward
    best = None
    for k in order:
        p = points[k]
        if best is not None and best.upper < p.upper - 1e-9 * max(1.0, abs(p.upper)):
            ok = True
            if topo is not None and scen is not None:
                ev = evaluate_plan(topo, scen, best.result.plan, optimistic=True)
                ok = ev.feasible and ev.max_emissions <= p.target + 1e-6 * max(1.0, p.target)
            if ok:
                p.result, p.upper, p.source = best.result, best.upper, "inherited-from-tighter"
        if math.isfinite(p.upper) and (best is None or p.upper <= best.upper):
            best = p
    # loose -> tight: carry the largest lower bound downward
    lb = -math.inf
    for k in reversed(order):
        p = points[k]
        if lb > p.lower + 1e-9 * max(1.0, abs(p.lower)):
            p.lower = lb
            if p.source == "solved":
                p.source = "bound-from-looser"
        lb = max(lb, p.lower)
        p.lower = min(p.lower, p.upper)
    return points


def pareto_sweep(framework: str, topo: HubTopology, scen: ScenarioSet, resolution: int,
                 econ=None, parallelism: int = 1) -> list[ParetoPoint]:
    """Solve the unconstrained baseline, then ``resolution`` evenly spaced targets."""
    from .frameworks import EconomicConfig, solve_framework

    econ = econ or EconomicConfig()
    base = solve_framework(framework, topo, scen, econ.with_cap(None))
    if base.plan is None:
        raise RuntimeError(f"baseline solve failed: {base.status} {base.message}")
    targets = targets_for(base.achieved_emissions, resolution)

    def run(target: float) -> ParetoPoint:
        if target == targets[0]:
            res = base
        else:
            try:
                res = solve_framework(framework, topo, scen, econ.with_cap(target))
            except Exception as exc:  # recorded, sweep continues
                log.warning("target %.6g failed: %s", target, exc)
                return ParetoPoint(target, None, math.inf, -math.inf, error=str(exc))
        upper = res.total if res.plan is not None else math.inf
        lower = res.bound if res.plan is not None else -math.inf
        return ParetoPoint(target, res, upper, min(lower, upper), error=res.message if res.plan is None else "")

    if parallelism > 1:
        with ThreadPoolExecutor(parallelism) as pool:
            points = list(pool.map(run, targets))
    else:
        points = [run(t) for t in targets]
    return share_bounds(points, topo, scen)


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and not math.isfinite(v)):
        return ""
    return f"{float(v):.6f}"


def frontier_csv(points: Iterable[ParetoPoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FRONTIER_HEADER)
    for p in points:
        r = p.result
        if r is None or r.plan is None:
            w.writerow([_fmt(p.target), "", "", "", "", "", "", p.source])
            continue
        w.writerow([_fmt(p.target), _fmt(p.upper), _fmt(r.investment), _fmt(r.net_operate),
                    _fmt(r.carbon_price), _fmt(r.achieved_emissions), _fmt(r.gap), p.source])
    return buf.getvalue()


def combined_csv(frontiers: dict[str, list[ParetoPoint]]) -> str:
    """Totals of several frameworks aligned on target rows."""
    names = list(frontiers)
    rows: dict[float, dict[str, float]] = {}
    for name in names:
        for p in frontiers[name]:
            rows.setdefault(round(p.target, 9), {})[name] = p.upper
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["target_tCO2e"] + [f"{n}_total_cost" for n in names])
    for t in sorted(rows, reverse=True):
        w.writerow([_fmt(t)] + [_fmt(rows[t].get(n)) for n in names])
    return buf.getvalue()
