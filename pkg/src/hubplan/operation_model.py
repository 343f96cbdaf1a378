"""Operational model of one representative day and plan evaluation.

Row classes of a day block, all indexed by hour ``t`` (dual name in brackets):

* ``alpha``    Z V_t = 0                                   [alpha, free]
* ``beta``     Q_t - Q_{t-1} + dt * J A V_t = 0, cyclic       [beta, free]
* ``gamma_lo`` -Q_t <= 0;  ``gamma_hi`` Q_t <= Qmax           [gamma >= 0]
* ``zeta``     J A V_t <= D * I  (converters)                 [zeta >= 0]
* ``kappa_lo`` -J A V_t <= Dmax; ``kappa_hi`` J A V_t <= Dmax [kappa >= 0]
* ``rho``      U V_t <= B_t * Pmax                            [rho >= 0]
* ``mu``       W V_t - r_t = L_t                              [mu, free]
* ``phi_lo``   -r_t <= 0;  ``phi_hi`` r_t <= Pmax (0 if not exportable)
* ``sigma``    -K V_t <= 0                                    [sigma >= 0]

Flows, state of charge and exports are declared free so that every
restriction is a row with its own dual.  The objective is the day's raw cost
``sum_t sum_m (f P - h r) dt``; annual weighting and discounting happen
outside the LP, which keeps duals in price units.  With the solver dual
``y = dz/db``, the named duals are ``-y``.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .engine import INF, LinExpr, Model, solve_lp
from .engine.model import LpSolution
from .hub_model import HubSpec, HubTopology
from .scenarios import DAYS_PER_YEAR, DayData, ScenarioSet

log = logging.getLogger(__name__)

ROW_CLASSES = ("alpha", "beta", "gamma_lo", "gamma_hi", "zeta", "kappa_lo", "kappa_hi",
               "rho", "mu", "phi_lo", "phi_hi", "sigma")
SIGNED = ("gamma_lo", "gamma_hi", "zeta", "kappa_lo", "kappa_hi", "rho", "phi_lo", "phi_hi", "sigma")


# ---------------------------------------------------------------------------
# investment plans
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InvestmentPlan:
    """Capacities as integer step counts on the discretization grid.

    ``grid[m]`` steps of the grid connection step, ``units[g]`` converter
    units, ``storage_energy[g]`` / ``storage_power[g]`` storage steps.
    Omitted entries are zero.
    """

    grid: Mapping[str, int] = field(default_factory=dict)
    units: Mapping[str, int] = field(default_factory=dict)
    storage_energy: Mapping[str, int] = field(default_factory=dict)
    storage_power: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("grid", "units", "storage_energy", "storage_power"):
            d = {k: int(v) for k, v in dict(getattr(self, name)).items() if int(v) != 0}
            if any(v < 0 for v in d.values()):
                raise ValueError(f"plan {name} has negative entries: {d}")
            object.__setattr__(self, name, d)

    # -- grid-space vectors -------------------------------------------------
    @staticmethod
    def slots(spec: HubSpec) -> list[tuple[str, str]]:
        """Integer decision slots in canonical order: grid, storage energy, storage power, units."""
        out = [("grid", g.energy) for g in spec.grid]
        out += [("storage_energy", s.id) for s in spec.storages]
        out += [("storage_power", s.id) for s in spec.storages]
        out += [("units", c.id) for c in spec.converters]
        return out

    @staticmethod
    def slot_bits(spec: HubSpec) -> list[int]:
        return ([g.bits for g in spec.grid] + [s.energy_bits for s in spec.storages]
                + [s.power_bits for s in spec.storages] + [c.bits for c in spec.converters])

    def vector(self, spec: HubSpec) -> tuple[int, ...]:
        return tuple(getattr(self, kind).get(key, 0) for kind, key in self.slots(spec))

    @classmethod
    def from_vector(cls, spec: HubSpec, vec: Iterable[int]) -> "InvestmentPlan":
        parts: dict[str, dict[str, int]] = {"grid": {}, "units": {}, "storage_energy": {},
                                            "storage_power": {}}
        for (kind, key), v in zip(cls.slots(spec), vec):
            parts[kind][key] = int(v)
        return cls(**parts)

    @classmethod
    def from_capacities(cls, spec: HubSpec, grid_mw: Mapping[str, float] | None = None,
                        units: Mapping[str, int] | None = None,
                        storage_mwh: Mapping[str, float] | None = None,
                        storage_mw: Mapping[str, float] | None = None) -> "InvestmentPlan":
        """Snap physical capacities down onto the step grid (warns when snapping)."""
        def snap(value: float, step: float, what: str) -> int:
            k = int(np.floor(value / step + 1e-9))
            if abs(k * step - value) > 1e-9 * max(1.0, abs(value)):
                log.warning("%s = %g is not on the %g grid; snapped down to %g", what, value, step,
                            k * step)
            return k

        g = {m: snap(v, spec.grid_for(m).step, f"grid {m}") for m, v in (grid_mw or {}).items()}
        st = {s.id: s for s in spec.storages}
        se = {k: snap(v, st[k].energy_step, f"{k} energy") for k, v in (storage_mwh or {}).items()}
        sp = {k: snap(v, st[k].power_step, f"{k} power") for k, v in (storage_mw or {}).items()}
        return cls(grid=g, units=dict(units or {}), storage_energy=se, storage_power=sp)

    def within_bits(self, spec: HubSpec) -> bool:
        return all(0 <= v <= 2 ** b - 1 for v, b in zip(self.vector(spec), self.slot_bits(spec)))

    def bits(self, spec: HubSpec) -> dict[tuple[str, str], list[int]]:
        """Binary-counting digits (LSB first) of every slot."""
        return {slot: [(v >> n) & 1 for n in range(b)]
                for slot, v, b in zip(self.slots(spec), self.vector(spec), self.slot_bits(spec))}

    # -- physical quantities -------------------------------------------------
    def grid_mw(self, spec: HubSpec, m: str) -> float:
        g = spec.grid_for(m)
        return 0.0 if g is None else self.grid.get(m, 0) * g.step

    def converter_mw(self, spec: HubSpec, gid: str) -> float:
        c = next(c for c in spec.converters if c.id == gid)
        return self.units.get(gid, 0) * c.unit_rating

    def storage_mw(self, spec: HubSpec, gid: str) -> float:
        s = next(s for s in spec.storages if s.id == gid)
        return self.storage_power.get(gid, 0) * s.power_step

    def storage_mwh(self, spec: HubSpec, gid: str) -> float:
        s = next(s for s in spec.storages if s.id == gid)
        return self.storage_energy.get(gid, 0) * s.energy_step

    def invest_cost(self, spec: HubSpec) -> float:
        total = sum(g.cap_cost * self.grid_mw(spec, g.energy) for g in spec.grid)
        total += sum(c.unit_cost * self.units.get(c.id, 0) for c in spec.converters)
        total += sum(s.power_cost * self.storage_mw(spec, s.id)
                     + s.energy_cost * self.storage_mwh(spec, s.id) for s in spec.storages)
        return float(total)

    def describe(self, spec: HubSpec) -> str:
        parts = [f"{c.id}:{self.units[c.id]}" for c in spec.converters if self.units.get(c.id)]
        parts += [f"{g.energy} {self.grid_mw(spec, g.energy):g} MW" for g in spec.grid
                  if self.grid.get(g.energy)]
        for s in spec.storages:
            if self.storage_energy.get(s.id) or self.storage_power.get(s.id):
                parts.append(f"{s.id} {self.storage_mwh(spec, s.id):g} MWh/"
                             f"{self.storage_mw(spec, s.id):g} MW")
        return "{" + ", ".join(parts) + "}"

    def as_dict(self) -> dict:
        return {"grid": dict(self.grid), "units": dict(self.units),
                "storage_energy": dict(self.storage_energy),
                "storage_power": dict(self.storage_power)}


@dataclass
class PlanTerms:
    """Plan-dependent right-hand sides as affine expressions (MW / MWh)."""

    grid: dict[str, LinExpr]
    converter: dict[str, LinExpr]  # D_g * I_g
    storage_power: dict[str, LinExpr]
    storage_energy: dict[str, LinExpr]

    @classmethod
    def constant(cls, topo: HubTopology, plan: InvestmentPlan) -> "PlanTerms":
        spec = topo.spec
        return cls(
            grid={m: LinExpr(constant=plan.grid_mw(spec, m)) for m in topo.energies},
            converter={c.id: LinExpr(constant=plan.converter_mw(spec, c.id)) for c in spec.converters},
            storage_power={s.id: LinExpr(constant=plan.storage_mw(spec, s.id)) for s in spec.storages},
            storage_energy={s.id: LinExpr(constant=plan.storage_mwh(spec, s.id)) for s in spec.storages},
        )


# ---------------------------------------------------------------------------
# day block
# ---------------------------------------------------------------------------


@dataclass
class DayBlock:
    """Variable and row indices of one (s, y) day inside a model."""

    day: DayData
    V: np.ndarray  # [t, l]
    Q: np.ndarray  # [t, storage]
    r: np.ndarray  # [t, m]
    rows: dict[str, np.ndarray]  # class -> [t, k] row ids
    cost: LinExpr  # raw day cost, C - R
    emissions: LinExpr  # raw day emissions
    purchase: LinExpr  # sum f P dt
    revenue: LinExpr  # sum h r dt


def add_day_block(model: Model, topo: HubTopology, day: DayData, terms: PlanTerms,
                  tag: str = "", group: str | None = "primal") -> DayBlock:
    """Append the operational variables and rows of one day to ``model``."""
    spec = topo.spec
    T, L, M = day.n_hours, topo.n_branches, len(topo.energies)
    GS = len(spec.storages)
    dt = day.dt
    energies = topo.energies
    V = np.array([[model.add_var(f"V{tag}[{t},{b.id}]", -INF, INF, group=group)
                   for b in topo.branches] for t in range(T)], dtype=np.int64).reshape(T, L)
    Q = np.array([[model.add_var(f"Q{tag}[{t},{s.id}]", -INF, INF, group=group)
                   for s in spec.storages] for t in range(T)], dtype=np.int64).reshape(T, GS)
    r = np.array([[model.add_var(f"r{tag}[{t},{m}]", -INF, INF, group=group)
                   for m in energies] for t in range(T)], dtype=np.int64).reshape(T, M)

    def flow(t: int, coefs: np.ndarray) -> LinExpr:
        nz = np.flatnonzero(coefs)
        return LinExpr({int(V[t, l]): float(coefs[l]) for l in nz})

    cap_rows = {g: topo.capacity_row(g) for g in topo.devices}
    rows: dict[str, list[list[int]]] = {k: [] for k in ROW_CLASSES}
    purchase, revenue, emissions = LinExpr(), LinExpr(), LinExpr()
    for t in range(T):
        rr = {k: [] for k in ROW_CLASSES}
        for k, p in enumerate(topo.out_ports):
            rr["alpha"].append(model.add_constr(flow(t, topo.Z[k]), "==", 0.0,
                                                f"alpha{tag}[{t},{topo.ports[p].id}]", group))
        for k, s in enumerate(spec.storages):
            e = flow(t, cap_rows[s.id] * dt)
            e.add_term(int(Q[t, k]), 1.0)
            e.add_term(int(Q[(t - 1) % T, k]), -1.0)
            rr["beta"].append(model.add_constr(e, "==", 0.0, f"beta{tag}[{t},{s.id}]", group))
        for k, s in enumerate(spec.storages):
            rr["gamma_lo"].append(model.add_constr(LinExpr({int(Q[t, k]): -1.0}), "<=", 0.0,
                                                   f"gamma_lo{tag}[{t},{s.id}]", group))
            rr["gamma_hi"].append(model.add_constr(LinExpr({int(Q[t, k]): 1.0}), "<=",
                                                   terms.storage_energy[s.id],
                                                   f"gamma_hi{tag}[{t},{s.id}]", group))
        for c in spec.converters:
            rr["zeta"].append(model.add_constr(flow(t, cap_rows[c.id]), "<=", terms.converter[c.id],
                                               f"zeta{tag}[{t},{c.id}]", group))
        for s in spec.storages:
            rr["kappa_lo"].append(model.add_constr(flow(t, -cap_rows[s.id]), "<=",
                                                   terms.storage_power[s.id],
                                                   f"kappa_lo{tag}[{t},{s.id}]", group))
            rr["kappa_hi"].append(model.add_constr(flow(t, cap_rows[s.id]), "<=",
                                                   terms.storage_power[s.id],
                                                   f"kappa_hi{tag}[{t},{s.id}]", group))
        for i, m in enumerate(energies):
            rr["rho"].append(model.add_constr(flow(t, topo.U[i]), "<=",
                                              terms.grid[m] * float(day.availability[i, t]),
                                              f"rho{tag}[{t},{m}]", group))
        for i, m in enumerate(energies):
            e = flow(t, topo.W[i])
            e.add_term(int(r[t, i]), -1.0)
            rr["mu"].append(model.add_constr(e, "==", float(day.demand[i, t]),
                                             f"mu{tag}[{t},{m}]", group))
        for i, m in enumerate(energies):
            rr["phi_lo"].append(model.add_constr(LinExpr({int(r[t, i]): -1.0}), "<=", 0.0,
                                                 f"phi_lo{tag}[{t},{m}]", group))
            cap = terms.grid[m] if spec.exportable(m) else 0.0
            rr["phi_hi"].append(model.add_constr(LinExpr({int(r[t, i]): 1.0}), "<=", cap,
                                                 f"phi_hi{tag}[{t},{m}]", group))
        for l, b in enumerate(topo.branches):
            rr["sigma"].append(model.add_constr(LinExpr({int(V[t, l]): -topo.K[l]}) if topo.K[l]
                                                else LinExpr(), "<=", 0.0,
                                                f"sigma{tag}[{t},{b.id}]", group))
        for k in ROW_CLASSES:
            rows[k].append(rr[k])
        for i, m in enumerate(energies):
            imp = flow(t, topo.U[i])
            purchase.iadd(imp, float(day.price[i, t]) * dt)
            emissions.iadd(imp, float(day.emissions[i, t]) * dt)
            revenue.add_term(int(r[t, i]), float(day.feedin[i, t]) * dt)
    cost = purchase - revenue
    row_arrays = {k: np.array(v, dtype=np.int64).reshape(T, -1) for k, v in rows.items()}
    return DayBlock(day, V, Q, r, row_arrays, cost, emissions, purchase, revenue)


@dataclass
class OperationLP:
    model: Model
    block: DayBlock


def build_operation_lp(topo: HubTopology, day: DayData, plan: InvestmentPlan) -> OperationLP:
    """Fixed-plan operator LP for one day, minimising the raw day cost."""
    model = Model(f"operation[s={day.s},y={day.y}]")
    block = add_day_block(model, topo, day, PlanTerms.constant(topo, plan))
    model.set_objective(block.cost)
    return OperationLP(model, block)


# ---------------------------------------------------------------------------
# duals
# ---------------------------------------------------------------------------


@dataclass
class DualSolution:
    """Named duals of one day, each an array ``[t, k]`` (sign convention: -dz/db)."""

    alpha: np.ndarray
    beta: np.ndarray
    gamma_lo: np.ndarray
    gamma_hi: np.ndarray
    zeta: np.ndarray
    kappa_lo: np.ndarray
    kappa_hi: np.ndarray
    rho: np.ndarray
    mu: np.ndarray
    phi_lo: np.ndarray
    phi_hi: np.ndarray
    sigma: np.ndarray

    def min_signed(self) -> float:
        vals = [float(getattr(self, k).min(initial=0.0)) for k in SIGNED]
        return min(vals)

    def max_abs(self) -> float:
        return max(float(np.abs(getattr(self, k)).max(initial=0.0)) for k in ROW_CLASSES)


def extract_duals(sol: LpSolution, block: DayBlock) -> DualSolution:
    if not sol.optimal:
        raise ValueError(f"cannot extract duals from a {sol.status} solution")
    y = sol.duals
    return DualSolution(**{k: -y[block.rows[k]] for k in ROW_CLASSES})


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


@dataclass
class CostBreakdown:
    investment: float
    operate: np.ndarray  # per year, sum f P (annualised)
    revenue: np.ndarray
    emissions: np.ndarray
    tax: np.ndarray
    discount: np.ndarray

    @property
    def net_operate(self) -> np.ndarray:
        return self.operate - self.revenue

    @property
    def npv_operate(self) -> float:
        return float(np.sum(self.net_operate * self.discount))

    @property
    def npv_tax(self) -> float:
        return float(np.sum(self.tax * self.discount))

    @property
    def total(self) -> float:
        """Investment plus discounted net operating cost (taxes excluded)."""
        return self.investment + self.npv_operate

    @property
    def total_with_tax(self) -> float:
        return self.total + self.npv_tax

    @property
    def max_emissions(self) -> float:
        return float(np.max(self.emissions)) if self.emissions.size else 0.0

    def as_dict(self) -> dict:
        return {"investment": self.investment, "operate": self.operate.tolist(),
                "revenue": self.revenue.tolist(), "emissions": self.emissions.tolist(),
                "tax": self.tax.tolist(), "discount": self.discount.tolist(),
                "npv_operate": self.npv_operate, "total": self.total}


@dataclass
class OperationalSolution:
    """Dispatch arrays indexed ``[y, s, t, k]``."""

    V: np.ndarray
    Q: np.ndarray
    r: np.ndarray
    P: np.ndarray
    day_cost: np.ndarray  # [y, s] raw day C - R
    day_emissions: np.ndarray  # [y, s]


@dataclass
class PlanEvaluation:
    plan: InvestmentPlan
    feasible: bool
    breakdown: CostBreakdown | None = None
    operation: OperationalSolution | None = None
    infeasible_day: tuple[int, int] | None = None
    reason: str = ""

    @property
    def total(self) -> float:
        return self.breakdown.total if self.breakdown else float("inf")

    @property
    def max_emissions(self) -> float:
        return self.breakdown.max_emissions if self.breakdown else float("inf")


def _annual(scen: ScenarioSet, per_day: np.ndarray) -> np.ndarray:
    """Annualise ``per_day[y, s]`` with weights 365 * pi_s."""
    w = np.array([DAYS_PER_YEAR * float(p) for p in scen.probabilities])
    return per_day @ w


def check_scenarios(topo: HubTopology, scen: ScenarioSet) -> list[str]:
    """Problems that make every plan infeasible regardless of capacity."""
    problems = []
    for i, m in enumerate(scen.energies):
        if m not in topo.energies:
            continue
        if not topo.spec.energy(m).demanded and np.any(scen.demand[i] != 0):
            problems.append(f"energy {m!r} has demand but is not declared demanded")
        if np.any((scen.availability[i] < 0) | (scen.availability[i] > 1)):
            problems.append(f"energy {m!r}: availability outside [0, 1]")
    return problems


def evaluate_plan(topo: HubTopology, scen: ScenarioSet, plan: InvestmentPlan,
                  optimistic: bool = False, tax_rate: float = 0.0,
                  emission_cap: float | None = None) -> PlanEvaluation:
    """Price a fixed plan.

    Without ``emission_cap`` each day is an independent cost-minimising
    operator LP.  ``optimistic`` breaks cost ties toward lower emissions (a
    second LP minimising emissions at optimal cost).  ``tax_rate`` adds
    ``rate * E`` to each day's operator objective, with the annual tax floored
    at zero in the breakdown.  With ``emission_cap`` the plan is operated
    cooperatively: one LP over all days with the annual cap enforced.
    """
    scen = scen.with_energies(topo.energies) if scen.energies != topo.energies else scen
    problems = check_scenarios(topo, scen)
    if problems:
        raise ValueError("; ".join(problems))
    if emission_cap is not None:
        return _evaluate_joint(topo, scen, plan, emission_cap)
    Y, S, T = scen.Y, scen.S, scen.T
    L, M, GS = topo.n_branches, len(topo.energies), len(topo.spec.storages)
    V = np.zeros((Y, S, T, L))
    Q = np.zeros((Y, S, T, GS))
    r = np.zeros((Y, S, T, M))
    P = np.zeros((Y, S, T, M))
    purchase = np.zeros((Y, S))
    revenue = np.zeros((Y, S))
    emis = np.zeros((Y, S))
    for day in scen.days():
        op = build_operation_lp(topo, day, plan)
        if tax_rate:
            op.model.set_objective(op.block.cost + op.block.emissions * tax_rate)
        sol = solve_lp(op.model)
        if sol.status == "infeasible":
            return PlanEvaluation(plan, False, infeasible_day=(day.s, day.y),
                                  reason=f"network infeasible on day s={day.s}, year y={day.y}")
        if not sol.optimal:
            return PlanEvaluation(plan, False, infeasible_day=(day.s, day.y),
                                  reason=f"operator LP {sol.status} on day s={day.s}, year y={day.y}")
        x = sol.x
        if optimistic:
            x = _tie_break(op, sol)
        b = op.block
        V[day.y, day.s] = x[b.V]
        Q[day.y, day.s] = x[b.Q]
        r[day.y, day.s] = x[b.r]
        P[day.y, day.s] = x[b.V] @ topo.U.T
        purchase[day.y, day.s] = b.purchase.value(x)
        revenue[day.y, day.s] = b.revenue.value(x)
        emis[day.y, day.s] = b.emissions.value(x)
    return _assemble(topo, scen, plan, V, Q, r, P, purchase, revenue, emis, tax_rate)


def optimal_face(model: Model, sol: LpSolution, tol: float = 1e-9) -> Model:
    """Copy of ``model`` restricted to its optimal face.

    Rows with a nonzero dual become equalities and variables with a nonzero
    reduced cost are fixed; by complementary slackness a feasible point of the
    result is optimal for ``model`` and vice versa.
    """
    face = model.copy()
    scale = max(1.0, float(np.abs(sol.duals).max(initial=0.0)))
    for i in np.flatnonzero(np.abs(sol.duals) > tol * scale):
        face.senses[i] = "=="
    if sol.reduced_costs is not None:
        for j in np.flatnonzero(np.abs(sol.reduced_costs) > tol * scale):
            face.lb[j] = face.ub[j] = float(sol.x[j])
    face._cache.clear()
    return face


def _tie_break(op: OperationLP, sol: LpSolution) -> np.ndarray:
    """Among cost-optimal dispatches, pick one with minimum emissions."""
    face = optimal_face(op.model, sol)
    face.set_objective(op.block.emissions)
    tb = solve_lp(face)
    return tb.x if tb.optimal else sol.x


def _assemble(topo, scen, plan, V, Q, r, P, purchase, revenue, emis, tax_rate) -> PlanEvaluation:
    Y = scen.Y
    operate = _annual(scen, purchase)
    rev = _annual(scen, revenue)
    em = _annual(scen, emis)
    tax = np.maximum(tax_rate * em, 0.0) if tax_rate else np.zeros(Y)
    disc = np.array([scen.discount(y) for y in range(Y)])
    bd = CostBreakdown(plan.invest_cost(topo.spec), operate, rev, em, tax, disc)
    op = OperationalSolution(V, Q, r, P, purchase - revenue, emis)
    return PlanEvaluation(plan, True, bd, op)


def _evaluate_joint(topo, scen, plan, cap) -> PlanEvaluation:
    model = Model("cooperative-operation")
    terms = PlanTerms.constant(topo, plan)
    blocks = {}
    obj = LinExpr()
    for day in scen.days():
        b = add_day_block(model, topo, day, terms, tag=f"[{day.s},{day.y}]")
        blocks[(day.s, day.y)] = b
        obj.iadd(b.cost, day.weight * scen.discount(day.y))
    for y in range(scen.Y):
        e = LinExpr()
        for s in range(scen.S):
            e.iadd(blocks[(s, y)].emissions, DAYS_PER_YEAR * float(scen.probabilities[s]))
        model.add_constr(e, "<=", cap, f"cap[{y}]")
    model.set_objective(obj)
    sol = solve_lp(model)
    if not sol.optimal:
        return PlanEvaluation(plan, False, reason=f"cooperative operation LP {sol.status}")
    x = sol.x
    Y, S, T = scen.Y, scen.S, scen.T
    V = np.zeros((Y, S, T, topo.n_branches))
    Q = np.zeros((Y, S, T, len(topo.spec.storages)))
    r = np.zeros((Y, S, T, len(topo.energies)))
    P = np.zeros_like(r)
    purchase = np.zeros((Y, S))
    revenue = np.zeros((Y, S))
    emis = np.zeros((Y, S))
    for (s, y), b in blocks.items():
        V[y, s], Q[y, s], r[y, s] = x[b.V], x[b.Q], x[b.r]
        P[y, s] = x[b.V] @ topo.U.T
        purchase[y, s] = b.purchase.value(x)
        revenue[y, s] = b.revenue.value(x)
        emis[y, s] = b.emissions.value(x)
    return _assemble(topo, scen, plan, V, Q, r, P, purchase, revenue, emis, 0.0)


def dispatch_csv(topo: HubTopology, op: OperationalSolution) -> str:
    """Rows ``year,day,hour,kind,id,value`` (one-based indices)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["year", "day", "hour", "kind", "id", "value"])
    Y, S, T = op.V.shape[:3]
    for y in range(Y):
        for s in range(S):
            for t in range(T):
                for l, b in enumerate(topo.branches):
                    w.writerow([y + 1, s + 1, t + 1, "branch", b.id, repr(_clean(op.V[y, s, t, l]))])
                for k, st in enumerate(topo.spec.storages):
                    w.writerow([y + 1, s + 1, t + 1, "storage", st.id, repr(_clean(op.Q[y, s, t, k]))])
                for i, m in enumerate(topo.energies):
                    w.writerow([y + 1, s + 1, t + 1, "export", m, repr(_clean(op.r[y, s, t, i]))])
    return buf.getvalue()


def _clean(v: float) -> float:
    """Round away solver noise so dumps are stable across backends."""
    v = float(round(v, 9))
    return 0.0 if v == 0 else v
