import numpy as np
import pytest

from hubplan.engine import solve_lp
from hubplan.fixtures import random_instance
from hubplan.hub_model import build_topology
from hubplan.operation_model import (InvestmentPlan, build_operation_lp, check_scenarios,
                                     dispatch_csv, evaluate_plan, extract_duals)
from hubplan.scenarios import grow_years

AB_ONLY = InvestmentPlan(grid={"gas": 5}, units={"AB": 1})
EB_ONLY = InvestmentPlan(grid={"elec": 4}, units={"EB": 1})
MIXED = InvestmentPlan(grid={"elec": 4, "gas": 1}, units={"EB": 1, "AB": 1})


@pytest.mark.parametrize("plan, total, emissions", [
    (AB_ONLY, 800 + 365 * 2 * 50 / 0.9, 365 * 2 * 0.181 / 0.9),
    (EB_ONLY, 1000 + 365 * 2 * 100, 365 * 2 * 0.1),
    (MIXED, 1800 + 365 * (2 * 0.25 * 0.9 * 50 / 0.9 + 2 * 0.775 * 100),
     365 * 2 * (0.25 * 0.181 + 0.775 * 0.1)),
])
def test_desk_plan_costs(desk, plan, total, emissions):
    _, topo, scen = desk
    ev = evaluate_plan(topo, scen, plan, optimistic=True)
    assert ev.feasible
    assert ev.total == pytest.approx(total, rel=1e-9)
    assert ev.max_emissions == pytest.approx(emissions, rel=1e-9)


def test_desk_known_values(desk):
    _, topo, scen = desk
    assert evaluate_plan(topo, scen, AB_ONLY).total == pytest.approx(41355.5556, abs=1e-4)
    assert evaluate_plan(topo, scen, EB_ONLY).total == pytest.approx(74000.0)
    assert evaluate_plan(topo, scen, MIXED).total == pytest.approx(67500.0)
    assert evaluate_plan(topo, scen, MIXED).max_emissions == pytest.approx(89.6075)


def test_heat_bus_price_is_gas_over_efficiency(desk):
    _, topo, scen = desk
    op = build_operation_lp(topo, scen.day(0, 0), AB_ONLY)
    sol = solve_lp(op.model)
    d = extract_duals(sol, op.block)
    heat = topo.energy_index("heat")
    np.testing.assert_allclose(d.mu[:, heat], -50 / 0.9, rtol=1e-12)
    assert d.min_signed() >= -1e-9


def test_undersized_plan_is_infeasible(desk):
    _, topo, scen = desk
    ev = evaluate_plan(topo, scen, InvestmentPlan(grid={"gas": 1}, units={"AB": 1}))
    assert not ev.feasible
    assert ev.infeasible_day == (0, 0)
    assert "infeasible" in ev.reason
    assert ev.total == float("inf")


def test_optimistic_ties_prefer_lower_emissions(desk):
    spec, topo, scen = desk
    # make both boilers cost the same per MWh of heat; emissions differ
    tied = scen.with_energies(topo.energies)
    tied.price[topo.energy_index("gas")] = 90.0
    plan = InvestmentPlan(grid={"elec": 4, "gas": 5}, units={"EB": 1, "AB": 1})
    ev = evaluate_plan(topo, tied, plan, optimistic=True)
    assert ev.max_emissions == pytest.approx(365 * 2 * 0.1)


def test_cooperative_cap_shifts_dispatch(desk):
    _, topo, scen = desk
    plan = InvestmentPlan(grid={"elec": 4, "gas": 5}, units={"EB": 1, "AB": 1})
    free = evaluate_plan(topo, scen, plan)
    capped = evaluate_plan(topo, scen, plan, emission_cap=100.0)
    assert free.max_emissions > 100
    assert capped.feasible
    assert capped.max_emissions == pytest.approx(100.0, abs=1e-6)
    assert capped.total > free.total
    assert not evaluate_plan(topo, scen, plan, emission_cap=50.0).feasible


def test_discounting_and_years(desk):
    _, topo, scen = desk
    grown = grow_years(scen, 0.0, 0.0, 3)
    from dataclasses import replace
    grown = replace(grown, discount_rate=0.1)
    ev = evaluate_plan(topo, grown, EB_ONLY)
    factor = sum(1.1 ** -(y + 1) for y in range(3))
    assert ev.total == pytest.approx(1000 + 73000 * factor)


def test_scenario_problems_are_rejected(desk):
    _, topo, scen = desk
    bad = scen.with_energies(topo.energies)
    bad.demand[topo.energy_index("gas")] = 0.5
    assert check_scenarios(topo, bad) == ["energy 'gas' has demand but is not declared demanded"]
    with pytest.raises(ValueError):
        evaluate_plan(topo, bad, AB_ONLY)


def test_dispatch_csv_balances(desk):
    _, topo, scen = desk
    ev = evaluate_plan(topo, scen, MIXED, optimistic=True)
    text = dispatch_csv(topo, ev.operation)
    rows = [line.split(",") for line in text.strip().splitlines()]
    assert rows[0] == ["year", "day", "hour", "kind", "id", "value"]
    flows = {(r[2], r[4]): float(r[5]) for r in rows[1:] if r[3] == "branch"}
    for hour in ("1", "2"):
        into_heat = flows[(hour, "EB.out.heat->bus:heat")] + flows[(hour, "AB.out.heat->bus:heat")]
        assert into_heat == pytest.approx(flows[(hour, "bus:heat->out:heat")])
        assert flows[(hour, "bus:heat->out:heat")] == pytest.approx(1.0)


def test_random_plans_price_consistently(rng):
    for _ in range(10):
        spec, scen = random_instance(rng)
        topo = build_topology(spec)
        plan = InvestmentPlan.from_vector(spec, [2 ** b - 1 for b in InvestmentPlan.slot_bits(spec)])
        ev = evaluate_plan(topo, scen, plan)
        assert ev.feasible, ev.reason
        opt = evaluate_plan(topo, scen, plan, optimistic=True)
        assert opt.total == pytest.approx(ev.total, rel=1e-9, abs=1e-6)
        assert opt.max_emissions <= ev.max_emissions + 1e-7
