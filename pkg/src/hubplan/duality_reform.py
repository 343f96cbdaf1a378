"""Dual of the day LP, binary-counting plans and the strong-duality block.

The operator's dual for one day has one variable per row class of
:mod:`hubplan.operation_model` and one feasibility row per primal variable:

* per storage and hour (state of charge):
  ``beta_t - beta_{t+1} + gamma_hi - gamma_lo = 0`` (cyclic in t)
* per energy and hour (export):
  ``phi_hi - phi_lo - h dt - mu = 0``
* per branch and hour (flow):
  ``sum_m U_ml (f dt + rho) + W_ml mu + sum_storage (JA)_gl (dt beta + kappa_hi - kappa_lo)
  + sum_conv (JA)_gl zeta + sum_p Z_pl alpha - K_l sigma = 0``

The dual objective is
``sum_t [ -sum_conv D I zeta - sum_storage (Qmax gamma_hi + Dmax (kappa_lo + kappa_hi))
- sum_m (L mu + Pmax (B rho + phi_hi)) ]``
(the ``phi_hi`` term only for exportable energies).

Plans are written in binary digits, ``k = sum_n 2^n x_n``, which turns every
plan-times-dual product into binary-times-continuous products.  Those are
linearised with three envelope rows per product since all affected duals are
sign-constrained.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .engine import BINARY, INF, INTEGER, LinExpr, Model
from .hub_model import HubSpec, HubTopology
from .operation_model import (DayBlock, DualSolution, InvestmentPlan, PlanTerms, ROW_CLASSES,
                              SIGNED)
from .scenarios import DayData, ScenarioSet

FEAS_TOL = 1e-9
BIND_TOL = 1e-4


# ---------------------------------------------------------------------------
# binary counting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BitExpansion:
    """``value = step * sum_n 2^n x_n`` with ``n_bits`` digits."""

    target: str
    step: float
    n_bits: int

    @property
    def max_steps(self) -> int:
        return 2 ** self.n_bits - 1

    @property
    def max_value(self) -> float:
        return self.max_steps * self.step

    def encode(self, steps: int) -> list[int]:
        """Digits LSB first."""
        if not 0 <= steps <= self.max_steps:
            raise ValueError(f"{self.target}: {steps} steps outside [0, {self.max_steps}]")
        return [(steps >> n) & 1 for n in range(self.n_bits)]

    def encode_msb(self, steps: int) -> list[int]:
        return self.encode(steps)[::-1]

    def realize(self, bits) -> float:
        return self.step * sum(int(b) << n for n, b in enumerate(bits))

    def snap(self, value: float) -> int:
        """Largest representable step count not above ``value``."""
        k = int(np.floor(value / self.step + 1e-9))
        return min(max(k, 0), self.max_steps)


def binary_digits(value: int, n_bits: int) -> list[int]:
    """MSB-first digits of a non-negative integer."""
    return BitExpansion("int", 1.0, n_bits).encode_msb(value)


def discretize_plan(spec: HubSpec) -> dict[tuple[str, str], BitExpansion]:
    """One expansion per plan slot, in the canonical slot order."""
    steps = ([g.step for g in spec.grid] + [s.energy_step for s in spec.storages]
             + [s.power_step for s in spec.storages] + [1.0] * len(spec.converters))
    slots = InvestmentPlan.slots(spec)
    bits = InvestmentPlan.slot_bits(spec)
    return {slot: BitExpansion(f"{slot[0]}:{slot[1]}", st, b)
            for slot, st, b in zip(slots, steps, bits)}


@dataclass
class PlanVars:
    """Plan decision variables inside a model."""

    spec: HubSpec
    slots: list[tuple[str, str]]
    expansions: dict[tuple[str, str], BitExpansion]
    steps: dict[tuple[str, str], int]  # integer step-count var per slot
    bits: dict[tuple[str, str], list[int]]  # bit vars per slot, LSB first
    invest: LinExpr
    terms: PlanTerms

    def assignment(self, plan: InvestmentPlan) -> dict[int, float]:
        out: dict[int, float] = {}
        for slot, v in zip(self.slots, plan.vector(self.spec)):
            out[self.steps[slot]] = float(v)
            for var, b in zip(self.bits[slot], self.expansions[slot].encode(v)):
                out[var] = float(b)
        return out

    def plan_from(self, x: np.ndarray) -> InvestmentPlan:
        return InvestmentPlan.from_vector(self.spec, [int(round(x[self.steps[s]])) for s in self.slots])

    def integer_ids(self) -> list[int]:
        return [self.steps[s] for s in self.slots] + [b for s in self.slots for b in self.bits[s]]


def add_plan(model: Model, topo: HubTopology, group: str = "plan") -> PlanVars:
    """Integer step counts linked to their binary digits, plus cost and capacity expressions."""
    spec = topo.spec
    exps = discretize_plan(spec)
    slots = list(exps)
    steps, bits = {}, {}
    for slot in slots:
        e = exps[slot]
        k = model.add_var(f"k[{slot[0]}:{slot[1]}]", 0.0, e.max_steps, INTEGER, group)
        xs = [model.add_var(f"x[{slot[0]}:{slot[1]}:{n}]", 0.0, 1.0, BINARY, group)
              for n in range(e.n_bits)]
        link = LinExpr({k: 1.0})
        for n, x in enumerate(xs):
            link.add_term(x, -float(2 ** n))
        model.add_constr(link, "==", 0.0, f"link[{slot[0]}:{slot[1]}]", "link")
        steps[slot], bits[slot] = k, xs
    invest = LinExpr()
    grid = {m: LinExpr() for m in topo.energies}
    for g in spec.grid:
        grid[g.energy] = LinExpr({steps[("grid", g.energy)]: g.step})
        invest.add_term(steps[("grid", g.energy)], g.cap_cost * g.step)
    converter, s_pow, s_en = {}, {}, {}
    for c in spec.converters:
        converter[c.id] = LinExpr({steps[("units", c.id)]: c.unit_rating})
        invest.add_term(steps[("units", c.id)], c.unit_cost)
    for s in spec.storages:
        s_en[s.id] = LinExpr({steps[("storage_energy", s.id)]: s.energy_step})
        s_pow[s.id] = LinExpr({steps[("storage_power", s.id)]: s.power_step})
        invest.add_term(steps[("storage_energy", s.id)], s.energy_cost * s.energy_step)
        invest.add_term(steps[("storage_power", s.id)], s.power_cost * s.power_step)
    return PlanVars(spec, slots, exps, steps, bits, invest, PlanTerms(grid, converter, s_pow, s_en))


# ---------------------------------------------------------------------------
# big-M products
# ---------------------------------------------------------------------------


@dataclass
class LinearizedProduct:
    x: int  # binary
    d: int  # continuous
    w: int  # auxiliary, w = x * d
    M: float
    rows: list[int]
    signed: bool  # d >= 0 (3 rows) or sign-free (4 rows)


def linearize_product(model: Model, x: int, d: int, M: float, name: str,
                      signed: bool = True, group: str = "product") -> LinearizedProduct:
    """Auxiliary ``w`` equal to ``x * d`` for binary ``x`` and ``|d| <= M``.

    For ``d >= 0``: ``w <= M x``, ``w <= d``, ``w >= d - M (1 - x)``, ``w >= 0``
    (bound).  For sign-free ``d`` the four-row envelope with ``w >= -M x``.
    """
    if not M > 0:
        raise ValueError("big-M must be positive")
    w = model.add_var(f"w[{name}]", 0.0 if signed else -INF, INF, group=group)
    rows = [model.add_constr(LinExpr({w: 1.0, x: -M}), "<=", 0.0, f"env_up[{name}]", group)]
    if signed:
        rows.append(model.add_constr(LinExpr({w: 1.0, d: -1.0}), "<=", 0.0, f"env_d[{name}]", group))
    else:
        rows.append(model.add_constr(LinExpr({w: 1.0, d: -1.0, x: M}), "<=", M, f"env_d[{name}]", group))
        rows.append(model.add_constr(LinExpr({w: 1.0, x: M}), ">=", 0.0, f"env_neg[{name}]", group))
    rows.append(model.add_constr(LinExpr({w: 1.0, d: -1.0, x: -M}), ">=", -M, f"env_lo[{name}]", group))
    return LinearizedProduct(x, d, w, M, rows, signed)


@dataclass
class BigMReport:
    trips: list[str] = field(default_factory=list)
    max_error: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.trips


def validate_products(x: np.ndarray, products: list[LinearizedProduct], names: list[str],
                      tol: float = BIND_TOL, feastol: float = FEAS_TOL) -> BigMReport:
    """Flag products whose dual sits at the implicit cap ``M`` or whose aux is inexact."""
    rep = BigMReport()
    for p in products:
        xv, dv, wv = x[p.x], x[p.d], x[p.w]
        err = abs(wv - round(xv) * dv)
        rep.max_error = max(rep.max_error, err)
        if err > 4 * feastol * p.M + 1e-7:
            rep.trips.append(f"{names[p.w]}: |w - x d| = {err:.3g}")
        if abs(dv) >= (1 - tol) * p.M or abs(wv) >= (1 - tol) * p.M:
            rep.trips.append(f"big-M binding at {names[p.w]} (d={dv:.6g}, M={p.M:g}); "
                             f"escalate M x10 and re-solve")
    return rep


def default_big_m(scen: ScenarioSet, carbon_price: float = 0.0, factor: float = 10.0) -> float:
    """``factor * max(|f| + |h| + carbon * |e|) * dt`` over all energies, hours, days, years."""
    term = np.abs(scen.price) + np.abs(scen.feedin) + abs(carbon_price) * np.abs(scen.emissions)
    return float(factor * max(1.0, float(term.max(initial=0.0))) * scen.dt)


# ---------------------------------------------------------------------------
# dual block
# ---------------------------------------------------------------------------


@dataclass
class DualBlock:
    day: DayData
    vars: dict[str, np.ndarray]  # class -> [t, k] var ids
    rows: dict[str, np.ndarray]  # "q", "r", "v" -> [t, k] row ids
    objective: LinExpr  # linearised dual objective
    products: list[LinearizedProduct]


def _dual_sizes(topo: HubTopology) -> dict[str, int]:
    spec = topo.spec
    GS, GC, M = len(spec.storages), len(spec.converters), len(topo.energies)
    return {"alpha": len(topo.out_ports), "beta": GS, "gamma_lo": GS, "gamma_hi": GS, "zeta": GC,
            "kappa_lo": GS, "kappa_hi": GS, "rho": M, "mu": M, "phi_lo": M, "phi_hi": M,
            "sigma": topo.n_branches}


def add_dual_block(model: Model, topo: HubTopology, day: DayData, plan: PlanVars | InvestmentPlan,
                   big_m: float = 1e3, tag: str = "", group: str = "dual") -> DualBlock:
    """Dual variables, dual feasibility rows and the (linearised) dual objective.

    ``plan`` is either plan variables (products are linearised) or a fixed
    plan (the objective is then linear in the duals).
    """
    spec = topo.spec
    T, dt = day.n_hours, day.dt
    sizes = _dual_sizes(topo)
    V: dict[str, np.ndarray] = {}
    for k in ROW_CLASSES:
        lb = 0.0 if k in SIGNED else -INF
        V[k] = np.array([[model.add_var(f"{k}{tag}[{t},{j}]", lb, INF, group=group)
                          for j in range(sizes[k])] for t in range(T)],
                        dtype=np.int64).reshape(T, sizes[k])
    GS = len(spec.storages)
    JA = topo.J @ topo.A  # devices x branches
    JA_conv, JA_st = JA[:len(spec.converters)], JA[len(spec.converters):]
    rows = {"q": [], "r": [], "v": []}
    for t in range(T):
        rq, rr, rv = [], [], []
        for g in range(GS):
            e = LinExpr({int(V["beta"][t, g]): 1.0})
            e.add_term(int(V["beta"][(t + 1) % T, g]), -1.0)
            e.add_term(int(V["gamma_hi"][t, g]), 1.0)
            e.add_term(int(V["gamma_lo"][t, g]), -1.0)
            rq.append(model.add_constr(e, "==", 0.0, f"dq{tag}[{t},{g}]", group))
        for i in range(len(topo.energies)):
            e = LinExpr({int(V["phi_hi"][t, i]): 1.0, int(V["phi_lo"][t, i]): -1.0,
                         int(V["mu"][t, i]): -1.0})
            rr.append(model.add_constr(e, "==", float(day.feedin[i, t]) * dt, f"dr{tag}[{t},{i}]", group))
        for l in range(topo.n_branches):
            e = LinExpr()
            const = 0.0
            for i in range(len(topo.energies)):
                if topo.U[i, l]:
                    const += topo.U[i, l] * float(day.price[i, t]) * dt
                    e.add_term(int(V["rho"][t, i]), topo.U[i, l])
                if topo.W[i, l]:
                    e.add_term(int(V["mu"][t, i]), topo.W[i, l])
            for g in range(GS):
                a = JA_st[g, l]
                if a:
                    e.add_term(int(V["beta"][t, g]), a * dt)
                    e.add_term(int(V["kappa_hi"][t, g]), a)
                    e.add_term(int(V["kappa_lo"][t, g]), -a)
            for g in range(len(spec.converters)):
                a = JA_conv[g, l]
                if a:
                    e.add_term(int(V["zeta"][t, g]), a)
            for k in np.flatnonzero(topo.Z[:, l]):
                e.add_term(int(V["alpha"][t, k]), float(topo.Z[k, l]))
            if topo.K[l]:
                e.add_term(int(V["sigma"][t, l]), -topo.K[l])
            rv.append(model.add_constr(e, "==", -const, f"dv{tag}[{t},{l}]", group))
        rows["q"].append(rq)
        rows["r"].append(rr)
        rows["v"].append(rv)

    obj = LinExpr()
    products: list[LinearizedProduct] = []
    for t in range(T):
        for i in range(len(topo.energies)):
            obj.add_term(int(V["mu"][t, i]), -float(day.demand[i, t]))
    # plan-dependent terms: sum over (coefficient, plan slot, dual var)
    triples = []  # (slot, per-step coefficient, dual var id, name)
    for t in range(T):
        for gi, c in enumerate(spec.converters):
            triples.append((("units", c.id), c.unit_rating, int(V["zeta"][t, gi]), f"zeta{tag}[{t},{c.id}]"))
        for gi, s in enumerate(spec.storages):
            triples.append((("storage_energy", s.id), s.energy_step, int(V["gamma_hi"][t, gi]),
                            f"gamma_hi{tag}[{t},{s.id}]"))
            triples.append((("storage_power", s.id), s.power_step, int(V["kappa_lo"][t, gi]),
                            f"kappa_lo{tag}[{t},{s.id}]"))
            triples.append((("storage_power", s.id), s.power_step, int(V["kappa_hi"][t, gi]),
                            f"kappa_hi{tag}[{t},{s.id}]"))
        for g in spec.grid:
            i = topo.energy_index(g.energy)
            b = float(day.availability[i, t])
            if b:
                triples.append((("grid", g.energy), g.step * b, int(V["rho"][t, i]),
                                f"rho{tag}[{t},{g.energy}]"))
            if g.exportable:
                triples.append((("grid", g.energy), g.step, int(V["phi_hi"][t, i]),
                                f"phi_hi{tag}[{t},{g.energy}]"))
    if isinstance(plan, InvestmentPlan):
        vec = dict(zip(InvestmentPlan.slots(spec), plan.vector(spec)))
        for slot, coef, d, _ in triples:
            if vec[slot]:
                obj.add_term(d, -coef * vec[slot])
    else:
        for slot, coef, d, name in triples:
            for n, x in enumerate(plan.bits[slot]):
                p = linearize_product(model, x, d, big_m, f"{name}*{slot[1]}:{n}")
                products.append(p)
                obj.add_term(p.w, -coef * 2 ** n)
    row_arrays = {k: np.array(v, dtype=np.int64).reshape(T, -1) for k, v in rows.items()}
    return DualBlock(day, V, row_arrays, obj, products)


def add_strong_duality(model: Model, primal: DayBlock, dual: DualBlock, tag: str = "") -> int:
    """Primal day cost equals the dual objective."""
    return model.add_constr(primal.cost - dual.objective, "==", 0.0, f"strong_duality{tag}", "sd")


def dual_values(x: np.ndarray, block: DualBlock) -> DualSolution:
    return DualSolution(**{k: x[block.vars[k]] for k in ROW_CLASSES})


# ---------------------------------------------------------------------------
# explicit checks (independent of any Model)
# ---------------------------------------------------------------------------


def dual_residuals(topo: HubTopology, day: DayData, d: DualSolution) -> dict[str, np.ndarray]:
    """Residuals of the three dual feasibility families, computed from the matrices."""
    T, dt = day.n_hours, day.dt
    spec = topo.spec
    GC = len(spec.converters)
    JA = topo.J @ topo.A
    q = d.beta - np.roll(d.beta, -1, axis=0) + d.gamma_hi - d.gamma_lo
    r = d.phi_hi - d.phi_lo - day.feedin.T * dt - d.mu
    v = np.zeros((T, topo.n_branches))
    for t in range(T):
        v[t] = (topo.U.T @ (day.price[:, t] * dt + d.rho[t]) + topo.W.T @ d.mu[t]
                + JA[GC:].T @ (dt * d.beta[t] + d.kappa_hi[t] - d.kappa_lo[t])
                + JA[:GC].T @ d.zeta[t] + topo.Z.T @ d.alpha[t] - topo.K * d.sigma[t])
    return {"q": q, "r": r, "v": v}


def dual_objective(topo: HubTopology, day: DayData, plan: InvestmentPlan, d: DualSolution) -> float:
    """Dual objective of one day at a fixed plan."""
    spec = topo.spec
    total = 0.0
    for t in range(day.n_hours):
        for gi, c in enumerate(spec.converters):
            total -= plan.converter_mw(spec, c.id) * d.zeta[t, gi]
        for gi, s in enumerate(spec.storages):
            total -= plan.storage_mwh(spec, s.id) * d.gamma_hi[t, gi]
            total -= plan.storage_mw(spec, s.id) * (d.kappa_lo[t, gi] + d.kappa_hi[t, gi])
        for i, m in enumerate(topo.energies):
            pmax = plan.grid_mw(spec, m)
            total -= day.demand[i, t] * d.mu[t, i]
            total -= pmax * day.availability[i, t] * d.rho[t, i]
            if spec.exportable(m):
                total -= pmax * d.phi_hi[t, i]
    return float(total)


def certify_plan_duals(topo: HubTopology, day: DayData, plan: InvestmentPlan) -> float:
    """Smallest achievable max over plan-multiplied duals among the day's optimal duals.

    A strong-duality block with big-M below this value cannot admit ``plan``.
    """
    from .engine import solve_lp
    from .operation_model import build_operation_lp

    op = build_operation_lp(topo, day, plan)
    sol = solve_lp(op.model)
    if not sol.optimal:
        raise ValueError(f"operator LP is {sol.status}")
    m = Model("dual-certificate")
    blk = add_dual_block(m, topo, day, plan)
    m.add_constr(blk.objective, ">=", sol.objective - 1e-9 * max(1.0, abs(sol.objective)), "dual_opt")
    cap = m.add_var("cap", 0.0, INF)
    spec = topo.spec
    tracked = [("zeta", range(len(spec.converters))), ("gamma_hi", range(len(spec.storages))),
               ("kappa_lo", range(len(spec.storages))), ("kappa_hi", range(len(spec.storages)))]
    ids = [int(blk.vars[k][t, j]) for k, js in tracked for t in range(day.n_hours) for j in js]
    for g in spec.grid:
        i = topo.energy_index(g.energy)
        ids += [int(blk.vars["rho"][t, i]) for t in range(day.n_hours)]
        if g.exportable:
            ids += [int(blk.vars["phi_hi"][t, i]) for t in range(day.n_hours)]
    for v in ids:
        m.add_constr(LinExpr({v: 1.0, cap: -1.0}), "<=", 0.0)
    m.set_objective(LinExpr({cap: 1.0}))
    res = solve_lp(m)
    if not res.optimal:
        raise ValueError(f"dual certificate LP is {res.status}")
    return float(res.objective)
