import time

import numpy as np
import pytest

from hubplan.duality_reform import (BitExpansion, add_dual_block, add_plan, add_strong_duality,
                                    binary_digits, certify_plan_duals, default_big_m,
                                    discretize_plan, dual_objective, dual_residuals, dual_values,
                                    linearize_product, validate_products)
from hubplan.engine import BINARY, LinExpr, Model, solve_lp, solve_milp
from hubplan.fixtures import random_instance
from hubplan.hub_model import build_topology
from hubplan.operation_model import InvestmentPlan, build_operation_lp, extract_duals


def test_681_in_ten_bits():
    assert binary_digits(681, 10) == [1, 0, 1, 0, 1, 0, 1, 0, 0, 1]
    e = BitExpansion("x", 1.0, 10)
    assert e.realize(e.encode(681)) == 681
    assert sum(b << n for n, b in enumerate(e.encode(681))) == 681


def test_bit_expansion_range_and_snapping():
    e = BitExpansion("grid:elec", 0.25, 4)
    assert e.max_steps == 15 and e.max_value == 3.75
    with pytest.raises(ValueError):
        e.encode(16)
    assert e.snap(1.3) == 5
    assert e.snap(100.0) == 15
    assert e.snap(-1.0) == 0
    for k in range(16):
        assert e.realize(e.encode(k)) == pytest.approx(0.25 * k)


def test_plan_vars_link_steps_to_bits(desk):
    spec, topo, _ = desk
    m = Model()
    pv = add_plan(m, topo)
    assert list(pv.expansions) == list(discretize_plan(spec))
    plan = InvestmentPlan(grid={"elec": 13, "gas": 6}, units={"EB": 2, "AB": 3})
    x = np.zeros(m.num_vars)
    for var, val in pv.assignment(plan).items():
        x[var] = val
    assert m.max_violation(x) == 0
    assert pv.plan_from(x) == plan
    assert pv.invest.value(x) == pytest.approx(plan.invest_cost(spec))
    # a step count that disagrees with its bits violates a link row
    x[pv.steps[("grid", "elec")]] = 12
    assert m.max_violation(x) > 0


@pytest.mark.parametrize("signed", [True, False])
def test_envelope_is_exact_at_binary_points(signed):
    rng = np.random.default_rng(0)
    M = 10.0
    for _ in range(20):
        xv = float(rng.integers(0, 2))
        dv = float(rng.uniform(0 if signed else -M, M))
        for sense in (1.0, -1.0):
            m = Model()
            x = m.add_var("x", xv, xv, BINARY)
            d = m.add_var("d", dv, dv)
            p = linearize_product(m, x, d, M, "p", signed=signed)
            assert len(p.rows) == (3 if signed else 4)
            m.set_objective(LinExpr({p.w: sense}))
            sol = solve_lp(m)
            assert sol.optimal
            assert sol.x[p.w] == pytest.approx(xv * dv, abs=1e-9)


def test_product_validator():
    m = Model()
    x = m.add_var("x", kind=BINARY)
    d = m.add_var("d")
    p = linearize_product(m, x, d, 100.0, "p")
    ok = np.array([1.0, 40.0, 40.0])
    assert validate_products(ok, [p], m.var_names).ok
    binding = np.array([1.0, 100.0, 100.0])
    rep = validate_products(binding, [p], m.var_names)
    assert not rep.ok and "big-M binding" in rep.trips[0]
    inexact = np.array([1.0, 40.0, 39.0])
    rep = validate_products(inexact, [p], m.var_names)
    assert rep.max_error == pytest.approx(1.0) and not rep.ok


def test_default_big_m(desk):
    _, _, scen = desk
    assert default_big_m(scen) == pytest.approx(10 * 100.0)
    # gas: 50 + 1000 * 0.181 beats elec: 100 + 1000 * 0.1
    assert default_big_m(scen, carbon_price=1000.0) == pytest.approx(10 * (50.0 + 181.0))


def _fixed_plan_cases(n, seed):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        spec, scen = random_instance(rng)
        topo = build_topology(spec)
        scen = scen.with_energies(topo.energies)
        vec = [int(rng.integers(0, 2 ** b)) for b in InvestmentPlan.slot_bits(spec)]
        plan = InvestmentPlan.from_vector(spec, vec)
        day = scen.day(0, 0)
        op = build_operation_lp(topo, day, plan)
        sol = solve_lp(op.model)
        if sol.optimal:
            out.append((topo, day, plan, op, sol))
    return out


def test_duals_satisfy_dual_rows_and_close_the_gap():
    for topo, day, plan, op, sol in _fixed_plan_cases(20, seed=11):
        d = extract_duals(sol, op.block)
        res = dual_residuals(topo, day, d)
        assert set(res) == {"q", "r", "v"}
        for v in res.values():
            assert np.abs(v).max(initial=0.0) < 1e-7
        assert d.min_signed() >= -1e-7
        dobj = dual_objective(topo, day, plan, d)
        assert dobj == pytest.approx(sol.objective, rel=1e-6, abs=1e-6)


def test_dual_lp_optimum_equals_primal(desk):
    spec, topo, scen = desk
    day = scen.day(0, 0)
    for plan in (InvestmentPlan(grid={"gas": 5}, units={"AB": 1}),
                 InvestmentPlan(grid={"elec": 4, "gas": 1}, units={"EB": 1, "AB": 1})):
        primal = solve_lp(build_operation_lp(topo, day, plan).model)
        m = Model()
        blk = add_dual_block(m, topo, day, plan)
        m.set_objective(blk.objective * -1.0)
        dual = solve_lp(m)
        assert dual.optimal
        assert -dual.objective == pytest.approx(primal.objective, rel=1e-9)
        assert certify_plan_duals(topo, day, plan) < 1e3


def test_strong_duality_row_with_plan_variables(desk):
    spec, topo, scen = desk
    from hubplan.operation_model import add_day_block
    day = scen.day(0, 0)
    m = Model()
    pv = add_plan(m, topo)
    primal = add_day_block(m, topo, day, pv.terms)
    dual = add_dual_block(m, topo, day, pv, big_m=1e3)
    add_strong_duality(m, primal, dual)
    plan = InvestmentPlan(grid={"elec": 4, "gas": 1}, units={"EB": 1, "AB": 1})
    for var, val in pv.assignment(plan).items():
        m.lb[var] = m.ub[var] = val
    m.set_objective(primal.emissions)
    sol = solve_milp(m)
    assert sol.status == "optimal"
    # the lower level is pinned to operator-optimal dispatch: cost 180 per day
    assert primal.cost.value(sol.x) == pytest.approx(180.0)
    d = dual_values(sol.x, dual)
    assert dual_objective(topo, day, plan, d) == pytest.approx(180.0, rel=1e-7)
    rep = validate_products(sol.x, dual.products, m.var_names)
    assert rep.ok


def test_strong_duality_suite_runtime():
    t0 = time.perf_counter()
    cases = _fixed_plan_cases(20, seed=2)
    for topo, day, plan, op, sol in cases:
        d = extract_duals(sol, op.block)
        assert dual_objective(topo, day, plan, d) == pytest.approx(sol.objective, rel=1e-6, abs=1e-6)
    assert time.perf_counter() - t0 < 10.0
