"""The four planning frameworks and a Benders variant of the cooperative one.

* F1 cooperative builder-operator with an annual emissions cap.
* F2 cooperative builder-operator facing a carbon tax ``T_y = max(P E_y, 0)``;
  the smallest rate meeting the cap is found by bisection.
* F3 builder facing an independent cost-minimising operator, with an
  expected-emissions cap; each day's operator LP is replaced by primal rows,
  dual rows and a strong-duality row.
* F4 as F3 without the cap but with a social cost of carbon in the builder's
  objective (undiscounted, as written); the smallest rate meeting the cap is
  found by bisection.

Every result is re-priced by :func:`evaluate_plan` before it is returned.
"""

from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .duality_reform import (BigMReport, PlanVars, add_dual_block, add_plan, add_strong_duality,
                             default_big_m, validate_products)
from .engine import (INF, LinExpr, MilpOptions, MilpSolution, Model, farkas_gap, solve_lp,
                     solve_milp, tally_model)
from .engine.complexity import ComplexityCounts
from .hub_model import HubTopology
from .operation_model import (InvestmentPlan, PlanEvaluation, PlanTerms, add_day_block,
                              evaluate_plan)
from .scenarios import ScenarioSet

log = logging.getLogger(__name__)

FRAMEWORKS = ("F1", "F2", "F3", "F4")
PRICE_CAP = 2.0 ** 20
EMISSION_TOL = 1e-6
MAX_ESCALATIONS = 3


class FrameworkError(RuntimeError):
    pass


@dataclass(frozen=True)
class EconomicConfig:
    """Policy and solver settings shared by all frameworks.

    Horizon, discount rate and the 365-day annualisation live on the
    scenario set.  ``carbon_price`` fixes the F2 tax rate or the F4 SCoC and
    skips the bisection.
    """

    emission_cap: float | None = None
    carbon_price: float | None = None
    price_tol: float = 0.5
    price_cap: float = PRICE_CAP
    gap_tol: float = 1e-6
    time_limit: float = math.inf
    node_limit: int = 100_000
    big_m: float | None = None
    heuristic: bool = True
    heuristic_order: int = 2
    benders_max_iter: int = 50
    warm_starts: tuple = ()

    def __post_init__(self):
        if self.emission_cap is not None and not math.isfinite(self.emission_cap):
            raise ValueError("emission cap must be finite or absent")
        if not self.price_tol > 0:
            raise ValueError("price tolerance must be > 0")
        if self.carbon_price is not None and self.carbon_price < 0:
            raise ValueError("carbon price must be >= 0")

    def with_cap(self, cap: float | None) -> "EconomicConfig":
        return replace(self, emission_cap=cap)

    def milp_options(self, warm=()) -> MilpOptions:
        return MilpOptions(gap_tol=self.gap_tol, time_limit=self.time_limit,
                           node_limit=self.node_limit, warm_starts=list(warm))


@dataclass
class PriceProbe:
    price: float
    emissions: float
    total: float
    plan: dict


@dataclass
class FrameworkResult:
    framework: str
    status: str
    plan: InvestmentPlan | None = None
    evaluation: PlanEvaluation | None = None
    objective: float = math.nan  # model objective (includes carbon terms for F2/F4)
    bound: float = -math.inf  # lower bound on the total
    emission_cap: float | None = None
    carbon_price: float | None = None
    gap: float = math.inf
    nodes: int = 0
    iterations: int = 0
    wall_time: float = 0.0
    warm_starts: list[str] = field(default_factory=list)
    heuristic_improvements: int = 0
    probes: list[PriceProbe] = field(default_factory=list)
    monotone_violations: list[tuple[float, float]] = field(default_factory=list)
    big_m: float | None = None
    big_m_trips: list[str] = field(default_factory=list)
    complexity: ComplexityCounts | None = None
    verified: bool = False
    message: str = ""

    @property
    def total(self) -> float:
        """Investment plus discounted net operating cost (carbon payments excluded)."""
        return self.evaluation.total if self.evaluation and self.evaluation.feasible else math.inf

    @property
    def investment(self) -> float:
        return self.evaluation.breakdown.investment if self._ok else math.nan

    @property
    def net_operate(self) -> float:
        return self.evaluation.breakdown.npv_operate if self._ok else math.nan

    @property
    def achieved_emissions(self) -> float:
        return self.evaluation.max_emissions if self._ok else math.inf

    @property
    def _ok(self) -> bool:
        return self.evaluation is not None and self.evaluation.feasible

    @property
    def price_bracket(self) -> float:
        """Width of the final bisection interval (0 when no bisection ran)."""
        infeasible = [p.price for p in self.probes if not p.emissions <= _cap_slack(self.emission_cap)]
        if self.carbon_price is None or not infeasible:
            return 0.0
        below = [p for p in infeasible if p <= self.carbon_price]
        return self.carbon_price - max(below) if below else 0.0

    def as_dict(self) -> dict:
        bd = self.evaluation.breakdown if self._ok else None
        return {
            "framework": self.framework,
            "status": self.status,
            "plan": self.plan.as_dict() if self.plan is not None else None,
            "objective": _num(self.objective),
            "bound": _num(self.bound),
            "total": _num(self.total),
            "investment": _num(self.investment),
            "net_operate_npv": _num(self.net_operate),
            "achieved_emissions": _num(self.achieved_emissions),
            "emission_cap": self.emission_cap,
            "carbon_price": self.carbon_price,
            "gap": _num(self.gap),
            "per_year": None if bd is None else {
                "operate": bd.operate.tolist(), "revenue": bd.revenue.tolist(),
                "emissions": bd.emissions.tolist(), "tax": bd.tax.tolist(),
                "discount": bd.discount.tolist()},
            "nodes": self.nodes,
            "iterations": self.iterations,
            "wall_time": self.wall_time,
            "warm_starts": list(self.warm_starts),
            "heuristic_improvements": self.heuristic_improvements,
            "probes": [{"price": p.price, "emissions": _num(p.emissions), "total": _num(p.total),
                        "plan": p.plan} for p in self.probes],
            "monotone_violations": [list(v) for v in self.monotone_violations],
            "big_m": self.big_m,
            "big_m_trips": list(self.big_m_trips),
            "complexity": self.complexity.as_dict() if self.complexity else None,
            "verified": self.verified,
            "message": self.message,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)


def _num(v):
    if v is None:
        return None
    v = float(v)
    return v if math.isfinite(v) else None


def _cap_slack(cap: float | None) -> float:
    if cap is None:
        return math.inf
    return cap + EMISSION_TOL * max(1.0, abs(cap))


def result_from_dict(d: dict, topo: HubTopology, scen: ScenarioSet) -> FrameworkResult:
    """Rebuild a result document; the evaluation is recomputed from the plan."""
    plan = InvestmentPlan(**d["plan"]) if d.get("plan") else None
    ev = None
    if plan is not None:
        fw, cp = d["framework"], d.get("carbon_price") or 0.0
        if fw == "F1":
            ev = evaluate_plan(topo, scen, plan, emission_cap=d.get("emission_cap"))
        elif fw == "F2":
            ev = evaluate_plan(topo, scen, plan, optimistic=True, tax_rate=cp)
        else:
            ev = evaluate_plan(topo, scen, plan, optimistic=True)
    cx = d.get("complexity")
    res = FrameworkResult(
        framework=d["framework"], status=d["status"], plan=plan, evaluation=ev,
        objective=_inf(d.get("objective"), math.nan), bound=_inf(d.get("bound"), -math.inf),
        emission_cap=d.get("emission_cap"), carbon_price=d.get("carbon_price"),
        gap=_inf(d.get("gap"), math.inf), nodes=d.get("nodes", 0), iterations=d.get("iterations", 0),
        wall_time=d.get("wall_time", 0.0), warm_starts=list(d.get("warm_starts", [])),
        heuristic_improvements=d.get("heuristic_improvements", 0),
        probes=[PriceProbe(p["price"], _inf(p["emissions"], math.inf), _inf(p["total"], math.inf),
                           p["plan"]) for p in d.get("probes", [])],
        monotone_violations=[tuple(v) for v in d.get("monotone_violations", [])],
        big_m=d.get("big_m"), big_m_trips=list(d.get("big_m_trips", [])),
        complexity=ComplexityCounts(**cx) if cx else None, verified=d.get("verified", False),
        message=d.get("message", ""))
    return res


def _inf(v, default):
    return default if v is None else float(v)


# ---------------------------------------------------------------------------
# model builders
# ---------------------------------------------------------------------------


@dataclass
class BuiltModel:
    model: Model
    plan: PlanVars
    annual_emissions: list[LinExpr]
    annual_cost: list[LinExpr]  # net operating cost per year, annualised
    products: list = field(default_factory=list)
    cap_rows: list[int] = field(default_factory=list)


def _check_inputs(topo: HubTopology, scen: ScenarioSet) -> ScenarioSet:
    from .operation_model import check_scenarios

    scen = scen.with_energies(topo.energies) if scen.energies != topo.energies else scen
    problems = check_scenarios(topo, scen)
    if problems:
        raise FrameworkError("; ".join(problems))
    return scen


def build_cooperative(topo: HubTopology, scen: ScenarioSet, emission_cap: float | None = None,
                      tax_rate: float | None = None, name: str = "F1") -> BuiltModel:
    """Single MILP: plan, every day's dispatch, NPV objective, optional cap and tax."""
    model = Model(name)
    pv = add_plan(model, topo)
    cost = [LinExpr() for _ in range(scen.Y)]
    emis = [LinExpr() for _ in range(scen.Y)]
    for day in scen.days():
        b = add_day_block(model, topo, day, pv.terms, tag=f"[{day.s},{day.y}]")
        cost[day.y].iadd(b.cost, day.weight)
        emis[day.y].iadd(b.emissions, day.weight)
    obj = pv.invest.copy()
    for y in range(scen.Y):
        obj.iadd(cost[y], scen.discount(y))
        if tax_rate:
            t = model.add_var(f"tax[{y}]", 0.0, INF, group="tax")
            model.add_constr(LinExpr({t: 1.0}) - emis[y] * tax_rate, ">=", 0.0, f"tax_def[{y}]", "tax")
            obj.add_term(t, scen.discount(y))
    model.set_objective(obj)
    built = BuiltModel(model, pv, emis, cost)
    if emission_cap is not None:
        built.cap_rows = [model.add_constr(emis[y], "<=", emission_cap, f"cap[{y}]", "cap")
                          for y in range(scen.Y)]
    return built


def build_bilevel(topo: HubTopology, scen: ScenarioSet, emission_cap: float | None = None,
                  scoc: float = 0.0, big_m: float = 1e3, name: str = "F3") -> BuiltModel:
    """Single-level builder model with one strong-duality block per day."""
    model = Model(name)
    pv = add_plan(model, topo)
    cost = [LinExpr() for _ in range(scen.Y)]
    emis = [LinExpr() for _ in range(scen.Y)]
    products = []
    for day in scen.days():
        tag = f"[{day.s},{day.y}]"
        b = add_day_block(model, topo, day, pv.terms, tag=tag)
        d = add_dual_block(model, topo, day, pv, big_m=big_m, tag=tag)
        add_strong_duality(model, b, d, tag)
        products.extend(d.products)
        cost[day.y].iadd(b.cost, day.weight)
        emis[day.y].iadd(b.emissions, day.weight)
    obj = pv.invest.copy()
    for y in range(scen.Y):
        obj.iadd(cost[y], scen.discount(y))
        if scoc:
            obj.iadd(emis[y], scoc)
    model.set_objective(obj)
    built = BuiltModel(model, pv, emis, cost, products)
    if emission_cap is not None:
        built.cap_rows = [model.add_constr(emis[y], "<=", emission_cap, f"cap[{y}]", "cap")
                          for y in range(scen.Y)]
    return built


# ---------------------------------------------------------------------------
# shared solve helpers
# ---------------------------------------------------------------------------


def _warm(pv: PlanVars, econ: EconomicConfig, extra=()) -> list:
    out = []
    for p in list(econ.warm_starts) + list(extra):
        if isinstance(p, InvestmentPlan) and p.within_bits(pv.spec):
            out.append(pv.assignment(p))
    return out


def _fill(res: FrameworkResult, sol: MilpSolution, built: BuiltModel, t0: float) -> None:
    res.nodes = sol.nodes
    res.warm_starts = list(sol.warm_start_log)
    res.heuristic_improvements = sol.heuristic_improvements
    res.wall_time = time.monotonic() - t0
    res.complexity = tally_model(built.model)
    if sol.has_solution:
        res.plan = built.plan.plan_from(sol.x)
        res.objective = float(sol.objective)
        res.bound = float(sol.bound)
        res.gap = float(sol.gap)


def _status(sol: MilpSolution) -> str:
    if sol.status == "optimal":
        return "optimal"
    if sol.status in ("node_limit", "time_limit"):
        return sol.status if sol.has_solution else f"{sol.status} (no incumbent)"
    return sol.status


def _verify(res: FrameworkResult, ev: PlanEvaluation, model_total: float | None) -> None:
    """Record the re-priced plan and check it against the model and the cap."""
    res.evaluation = ev
    notes = []
    if not ev.feasible:
        notes.append(f"re-pricing failed: {ev.reason}")
    else:
        if model_total is not None and math.isfinite(model_total):
            diff = abs(ev.total - model_total)
            if diff > 1e-6 * max(1.0, abs(model_total)):
                notes.append(f"model total {model_total:.10g} differs from re-priced {ev.total:.10g}")
        if ev.max_emissions > _cap_slack(res.emission_cap):
            notes.append(f"emissions {ev.max_emissions:.6g} above cap {res.emission_cap:.6g}")
    res.verified = not notes
    if notes:
        res.message = "; ".join([res.message] + notes if res.message else notes)


def _min_emissions_plan(built: BuiltModel, econ: EconomicConfig) -> tuple[float, InvestmentPlan | None]:
    """Smallest achievable max-year emissions of an uncapped model."""
    m = built.model
    z = m.add_var("max_emissions", -INF, INF, group="aux")
    for e in built.annual_emissions:
        m.add_constr(LinExpr({z: 1.0}) - e, ">=", 0.0, group="aux")
    m.set_objective(LinExpr({z: 1.0}))
    sol = solve_milp(m, econ.milp_options())
    if not sol.has_solution:
        return math.inf, None
    return float(sol.objective), built.plan.plan_from(sol.x)


# ---------------------------------------------------------------------------
# F1
# ---------------------------------------------------------------------------


def solve_f1(topo: HubTopology, scen: ScenarioSet, econ: EconomicConfig | None = None) -> FrameworkResult:
    """Cooperative builder-operator, NPV objective, cap per year."""
    econ = econ or EconomicConfig()
    scen = _check_inputs(topo, scen)
    t0 = time.monotonic()
    built = build_cooperative(topo, scen, econ.emission_cap, name="F1")
    hook = None
    if econ.heuristic and econ.emission_cap is not None:
        hook = _search_hook(topo, scen, built.plan, econ, "cooperative")
    sol = solve_milp(built.model, econ.milp_options(_warm(built.plan, econ)), hook)
    res = FrameworkResult("F1", _status(sol), emission_cap=econ.emission_cap)
    _fill(res, sol, built, t0)
    if sol.status == "infeasible":
        floor, plan = _min_emissions_plan(build_cooperative(topo, scen, None), econ)
        res.message = (f"emissions cap {econ.emission_cap:g} is below the minimum achievable "
                       f"{floor:.6g} t/yr")
        if plan is not None:
            res.message += f" (certificate plan: {plan.describe(topo.spec)})"
        return res
    if res.plan is not None:
        _verify(res, evaluate_plan(topo, scen, res.plan, emission_cap=econ.emission_cap), res.objective)
    return res


# ---------------------------------------------------------------------------
# F2 / F4 bisection
# ---------------------------------------------------------------------------


def _monotone_violations(probes: list[PriceProbe]) -> list[tuple[float, float]]:
    """Price pairs (p1 < p2) where emissions rose."""
    pts = sorted((p.price, p.emissions) for p in probes if math.isfinite(p.emissions))
    out = []
    for (p1, e1), (p2, e2) in zip(pts, pts[1:]):
        if e2 > e1 + EMISSION_TOL * max(1.0, abs(e1)):
            out.append((p1, p2))
    return out


def _bisect(solve_at, cap: float | None, econ: EconomicConfig, label: str) -> FrameworkResult:
    """Smallest price (within tolerance) whose solution meets ``cap``."""
    probes: list[PriceProbe] = []

    def probe(price: float) -> FrameworkResult:
        r = solve_at(price)
        probes.append(PriceProbe(price, r.achieved_emissions, r.total,
                                 r.plan.as_dict() if r.plan is not None else {}))
        if r.plan is None:
            raise FrameworkError(f"{label} solve at price {price:g} failed: {r.status} {r.message}")
        return r

    def meets(r: FrameworkResult) -> bool:
        return r.achieved_emissions <= _cap_slack(cap)

    def finish(r: FrameworkResult, status: str | None = None, msg: str = "") -> FrameworkResult:
        r.probes = probes
        r.monotone_violations = _monotone_violations(probes)
        if r.monotone_violations:
            msg = (msg + "; " if msg else "") + f"non-monotone emissions between prices {r.monotone_violations}"
        if status:
            r.status = status
        if msg:
            r.message = (r.message + "; " if r.message else "") + msg
        return r

    if econ.carbon_price is not None:
        r = probe(econ.carbon_price)
        return finish(r, None if meets(r) or cap is None else "cap-not-met",
                      "" if meets(r) or cap is None else "fixed price does not meet the cap")
    r0 = probe(0.0)
    if cap is None or meets(r0):
        return finish(r0)
    lo, hi, best = 0.0, 1.0, None
    while True:
        r = probe(hi)
        if meets(r):
            best = r
            break
        lo = hi
        if hi >= econ.price_cap:
            return finish(r, "tax-infeasible" if label == "F2" else "scoc-infeasible",
                          f"cap {cap:g} unreachable at price {hi:g}; achieved floor "
                          f"{r.achieved_emissions:.6g} t/yr")
        hi = min(hi * 2.0, econ.price_cap)
    while hi - lo > econ.price_tol:
        mid = 0.5 * (lo + hi)
        r = probe(mid)
        if meets(r):
            hi, best = mid, r
        else:
            lo = mid
    return finish(best)


def _with_pool(topo, scen, econ: EconomicConfig, probes_pool: list, price: float) -> EconomicConfig:
    """Add the best previously seen plan at ``price`` as a warm start."""
    if not probes_pool:
        return econ
    from .search import pick_warm_start

    try:
        best = pick_warm_start(probes_pool, topo, scen, price)
    except ValueError:
        return econ
    return replace(econ, warm_starts=tuple(econ.warm_starts) + (best,))


def minimum_emissions(topo: HubTopology, scen: ScenarioSet, econ: EconomicConfig | None = None,
                      operator: bool = False) -> tuple[float, InvestmentPlan | None]:
    """Smallest achievable max-year emissions and a plan attaining it.

    ``operator=True`` restricts dispatch to cost-minimising operator
    responses (the floor relevant to F3 and F4).
    """
    econ = econ or EconomicConfig()
    scen = _check_inputs(topo, scen)
    if operator:
        built = build_bilevel(topo, scen, None, 0.0, econ.big_m or default_big_m(scen))
    else:
        built = build_cooperative(topo, scen, None)
    return _min_emissions_plan(built, econ)


def _solve_f2_at(topo, scen, econ, price) -> FrameworkResult:
    t0 = time.monotonic()
    built = build_cooperative(topo, scen, None, tax_rate=price, name="F2")
    sol = solve_milp(built.model, econ.milp_options(_warm(built.plan, econ)))
    res = FrameworkResult("F2", _status(sol), emission_cap=econ.emission_cap, carbon_price=price)
    _fill(res, sol, built, t0)
    if res.plan is not None:
        ev = evaluate_plan(topo, scen, res.plan, optimistic=True, tax_rate=price)
        _verify(res, ev, None)
        if ev.feasible:
            taxed = ev.breakdown.total_with_tax
            if abs(taxed - res.objective) > 1e-6 * max(1.0, abs(taxed)):
                res.verified = False
                res.message = f"model objective {res.objective:.10g} differs from re-priced {taxed:.10g}"
    return res


def solve_f2(topo: HubTopology, scen: ScenarioSet, econ: EconomicConfig | None = None) -> FrameworkResult:
    """Smallest carbon tax for which the cooperative optimum meets the cap."""
    econ = econ or EconomicConfig()
    scen = _check_inputs(topo, scen)
    t0 = time.monotonic()
    pool: list[InvestmentPlan] = []

    def at(p):
        r = _solve_f2_at(topo, scen, _with_pool(topo, scen, econ, pool, p), p)
        if r.plan is not None:
            pool.append(r.plan)
        return r

    res = _bisect(at, econ.emission_cap, econ, "F2")
    res.wall_time = time.monotonic() - t0
    res.iterations = len(res.probes)
    return res


# ---------------------------------------------------------------------------
# F3 / F4
# ---------------------------------------------------------------------------


def _search_hook(topo, scen, pv: PlanVars, econ: EconomicConfig, mode: str):
    from .search import neighbor_search

    def hook(x, objective):
        plan = pv.plan_from(x)
        sr = neighbor_search(topo, scen, plan, econ.emission_cap, order=econ.heuristic_order, mode=mode)
        if sr.improved:
            return pv.assignment(sr.plan)
        return None

    return hook


def _solve_bilevel(topo, scen, econ: EconomicConfig, scoc: float, label: str) -> FrameworkResult:
    t0 = time.monotonic()
    cap = econ.emission_cap if label == "F3" else None
    big_m = econ.big_m or default_big_m(scen)
    trips: list[str] = []
    for attempt in range(MAX_ESCALATIONS + 1):
        built = build_bilevel(topo, scen, cap, scoc, big_m, name=label)
        hook = None
        if econ.heuristic and label == "F3":
            hook = _search_hook(topo, scen, built.plan, econ, "operator")
        sol = solve_milp(built.model, econ.milp_options(_warm(built.plan, econ)), hook)
        report = BigMReport()
        if sol.has_solution:
            report = validate_products(sol.x, built.products, built.model.var_names)
        # a plan the operator can run within the cap but the block cannot certify
        for why in sol.hook_rejections:
            if "infeasible" in why:
                report.trips.append(f"heuristic plan rejected by the strong-duality block ({why})")
        if report.ok:
            break
        trips.extend(f"M={big_m:g}: {t}" for t in report.trips[:5])
        if attempt == MAX_ESCALATIONS:
            break
        log.info("%s big-M %.3g tripped; escalating", label, big_m)
        big_m *= 10.0
    res = FrameworkResult(label, _status(sol), emission_cap=econ.emission_cap,
                          carbon_price=scoc if label == "F4" else None)
    _fill(res, sol, built, t0)
    res.big_m, res.big_m_trips = big_m, trips
    if not report.ok:
        res.message = f"big-M validation still failing after {MAX_ESCALATIONS} escalations"
    if sol.status == "infeasible" and label == "F3":
        floor, plan = _min_emissions_plan(build_bilevel(topo, scen, None, 0.0, big_m), econ)
        res.message = (f"emissions cap {cap:g} is below the minimum operator-chosen "
                       f"{floor:.6g} t/yr")
        if plan is not None:
            res.message += f" (certificate plan: {plan.describe(topo.spec)})"
        return res
    if res.plan is not None:
        ev = evaluate_plan(topo, scen, res.plan, optimistic=True)
        model_total = res.objective
        if label == "F4" and ev.feasible:
            model_total = res.objective - scoc * float(np.sum(_model_emissions(built, sol.x)))
        _verify(res, ev, model_total)
    return res


def _model_emissions(built: BuiltModel, x: np.ndarray) -> np.ndarray:
    return np.array([e.value(x) for e in built.annual_emissions])


def solve_f3(topo: HubTopology, scen: ScenarioSet, econ: EconomicConfig | None = None) -> FrameworkResult:
    """Builder minimises NPV cost against a cost-minimising operator, under the cap."""
    econ = econ or EconomicConfig()
    scen = _check_inputs(topo, scen)
    return _solve_bilevel(topo, scen, econ, 0.0, "F3")


def solve_f4(topo: HubTopology, scen: ScenarioSet, econ: EconomicConfig | None = None) -> FrameworkResult:
    """Smallest social cost of carbon whose builder optimum meets the cap."""
    econ = econ or EconomicConfig()
    scen = _check_inputs(topo, scen)
    t0 = time.monotonic()
    pool: list[InvestmentPlan] = []

    def at(p):
        r = _solve_bilevel(topo, scen, _with_pool(topo, scen, econ, pool, p), p, "F4")
        if r.plan is not None:
            pool.append(r.plan)
        return r

    res = _bisect(at, econ.emission_cap, econ, "F4")
    res.wall_time = time.monotonic() - t0
    res.iterations = len(res.probes)
    return res


def jump_structure(res: FrameworkResult) -> list[tuple[float, float, float]]:
    """Distinct (price, emissions, total) outcomes seen by a bisection, by price."""
    seen: dict[tuple, tuple[float, float, float]] = {}
    for p in sorted(res.probes, key=lambda p: p.price):
        key = tuple(sorted((k, tuple(sorted(v.items()))) for k, v in p.plan.items()))
        seen.setdefault(key, (p.price, p.emissions, p.total))
    return sorted(seen.values())


# ---------------------------------------------------------------------------
# Benders (F1)
# ---------------------------------------------------------------------------


@dataclass
class _Sub:
    model: Model
    fixed: dict  # master var id -> sub var id (plan step counts and emission budget)
    cost: LinExpr


def _benders_sub(topo, day, spec_slots, with_budget: bool) -> _Sub:
    """Day LP whose plan step counts (and emission budget) are fixed continuous variables."""
    m = Model(f"sub[{day.s},{day.y}]")
    k = {slot: m.add_var(f"k[{slot[0]}:{slot[1]}]", 0.0, 0.0, group="fixed") for slot in spec_slots}
    spec = topo.spec
    grid = {mm: LinExpr() for mm in topo.energies}
    for g in spec.grid:
        grid[g.energy] = LinExpr({k[("grid", g.energy)]: g.step})
    terms = PlanTerms(
        grid=grid,
        converter={c.id: LinExpr({k[("units", c.id)]: c.unit_rating}) for c in spec.converters},
        storage_power={s.id: LinExpr({k[("storage_power", s.id)]: s.power_step}) for s in spec.storages},
        storage_energy={s.id: LinExpr({k[("storage_energy", s.id)]: s.energy_step}) for s in spec.storages},
    )
    b = add_day_block(m, topo, day, terms)
    fixed = dict(k)
    if with_budget:
        eps = m.add_var("budget", 0.0, 0.0, group="fixed")
        m.add_constr(b.emissions - LinExpr({eps: 1.0}), "<=", 0.0, "budget")
        fixed["budget"] = eps
    m.set_objective(b.cost)
    return _Sub(m, fixed, b.cost)


def _day_cost_bounds(topo, day, pv: PlanVars) -> tuple[float, float]:
    """Crude bounds on a day's cost and emissions from the largest capacities."""
    spec = topo.spec
    lo_cost = lo_em = 0.0
    for g in spec.grid:
        i = topo.energy_index(g.energy)
        cap = g.max_capacity
        for t in range(day.n_hours):
            f, h, e = day.price[i, t], day.feedin[i, t], day.emissions[i, t]
            lo_cost += min(0.0, f) * cap * day.dt
            lo_em += min(0.0, e) * cap * day.dt
            if g.exportable:
                lo_cost -= max(0.0, h) * cap * day.dt
    return lo_cost, lo_em


def solve_f1_benders(topo: HubTopology, scen: ScenarioSet,
                     econ: EconomicConfig | None = None) -> FrameworkResult:
    """F1 by Benders decomposition: plan master, one LP subproblem per day.

    With a cap the master also allocates a per-day emission budget; the
    annual cap is imposed on the weighted budgets.
    """
    econ = econ or EconomicConfig()
    scen = _check_inputs(topo, scen)
    t0 = time.monotonic()
    cap = econ.emission_cap
    master = Model("F1-master")
    pv = add_plan(master, topo)
    obj = pv.invest.copy()
    theta, budget, subs = {}, {}, {}
    cap_expr = [LinExpr() for _ in range(scen.Y)]
    for day in scen.days():
        key = (day.s, day.y)
        lo_cost, lo_em = _day_cost_bounds(topo, day, pv)
        theta[key] = master.add_var(f"theta[{day.s},{day.y}]", lo_cost, INF, group="value")
        obj.add_term(theta[key], day.weight * scen.discount(day.y))
        if cap is not None:
            budget[key] = master.add_var(f"budget[{day.s},{day.y}]", lo_em, INF, group="value")
            cap_expr[day.y].add_term(budget[key], day.weight)
        subs[key] = _benders_sub(topo, day, pv.slots, cap is not None)
    if cap is not None:
        for y in range(scen.Y):
            master.add_constr(cap_expr[y], "<=", cap, f"cap[{y}]", "cap")
    master.set_objective(obj)

    def master_var(name):
        return pv.steps[name] if name != "budget" else None

    upper, lower, best_plan = math.inf, -math.inf, None
    it = 0
    incumbent = list(_warm(pv, econ))
    status = "iteration_limit"
    nodes = 0
    for it in range(1, econ.benders_max_iter + 1):
        sol = solve_milp(master, econ.milp_options(incumbent))
        nodes += sol.nodes
        if not sol.has_solution:
            status = "infeasible" if sol.status == "infeasible" else sol.status
            break
        lower = max(lower, float(sol.bound))
        x = sol.x
        plan = pv.plan_from(x)
        total, cuts = plan.invest_cost(topo.spec), 0
        feasible = True
        for key, sub in subs.items():
            day = scen.day(*key)
            lb = np.array(sub.model.lb)
            ub = np.array(sub.model.ub)
            vals = {}
            for name, j in sub.fixed.items():
                mv = budget[key] if name == "budget" else master_var(name)
                vals[name] = float(x[mv])
                lb[j] = ub[j] = vals[name]
            res = solve_lp(sub.model, lb=lb, ub=ub)
            if res.status == "infeasible":
                feasible = False
                cut = _feasibility_cut(sub, res.farkas, lb, ub)
                if cut is None:
                    raise FrameworkError("feasibility certificate could not be turned into a cut")
                coefs, rhs = cut
                e = LinExpr()
                for name, c in coefs.items():
                    e.add_term(budget[key] if name == "budget" else master_var(name), c)
                master.add_constr(e, ">=", rhs, f"feas{it}[{key}]", "cut")
                cuts += 1
                continue
            if not res.optimal:
                raise FrameworkError(f"day subproblem {key} is {res.status}")
            z = float(res.objective)
            total += day.weight * scen.discount(day.y) * z
            if x[theta[key]] < z - 1e-9 * max(1.0, abs(z)):
                e = LinExpr({theta[key]: 1.0})
                rhs = z
                for name, j in sub.fixed.items():
                    g = float(res.reduced_costs[j])
                    if g:
                        e.add_term(budget[key] if name == "budget" else master_var(name), -g)
                        rhs -= g * vals[name]
                master.add_constr(e, ">=", rhs, f"opt{it}[{key}]", "cut")
                cuts += 1
        if feasible and total < upper:
            upper, best_plan = total, plan
            incumbent = [pv.assignment(plan)]
        if feasible and (cuts == 0 or upper - lower <= econ.gap_tol * max(1.0, abs(upper))):
            status = "optimal"
            lower = min(lower, upper) if math.isfinite(upper) else lower
            break
    res = FrameworkResult("F1", status, plan=best_plan, emission_cap=cap, iterations=it, nodes=nodes,
                          objective=upper, bound=lower)
    res.gap = max(0.0, (upper - lower) / max(1.0, abs(upper))) if math.isfinite(upper) else math.inf
    res.wall_time = time.monotonic() - t0
    res.message = "benders"
    if best_plan is not None:
        _verify(res, evaluate_plan(topo, scen, best_plan, emission_cap=cap), upper)
    elif status == "infeasible":
        res.message = "benders master infeasible: emissions cap unreachable"
    return res


def _feasibility_cut(sub: _Sub, y: np.ndarray, lb: np.ndarray, ub: np.ndarray):
    """Linear condition on the fixed values implied by a Farkas certificate.

    ``farkas_gap`` is affine in the fixed values; requiring it to be <= 0
    gives ``sum_j g_j v_j >= y^T b - (contribution of the other bounded vars)``.
    """
    if y is None or farkas_gap(sub.model, y, lb, ub) <= 0:
        return None
    A, _, b, _, _, _, _ = sub.model.arrays()
    g = A.T @ y
    fixed_ids = set(sub.fixed.values())
    lb2, ub2 = lb.copy(), ub.copy()
    for j in fixed_ids:
        lb2[j] = ub2[j] = 0.0
    rest = float(y @ b) - farkas_gap(sub.model, y, lb2, ub2)  # max over the other variables
    if not math.isfinite(rest):
        return None
    coefs = {name: float(g[j]) for name, j in sub.fixed.items() if abs(g[j]) > 1e-12}
    return coefs, float(y @ b) - rest


# ---------------------------------------------------------------------------
# dispatch by id
# ---------------------------------------------------------------------------


def solve_framework(framework: str, topo: HubTopology, scen: ScenarioSet,
                    econ: EconomicConfig | None = None) -> FrameworkResult:
    solvers = {"F1": solve_f1, "F2": solve_f2, "F3": solve_f3, "F4": solve_f4,
               "F1-benders": solve_f1_benders}
    if framework not in solvers:
        raise ValueError(f"unknown framework {framework!r}; expected one of {sorted(solvers)}")
    return solvers[framework](topo, scen, econ)
