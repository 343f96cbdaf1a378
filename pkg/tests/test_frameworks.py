import itertools
import math

import numpy as np
import pytest

from hubplan.fixtures import random_instance, random_scenarios
from hubplan.frameworks import (EconomicConfig, build_cooperative, jump_structure,
                                minimum_emissions, result_from_dict, solve_f1, solve_f1_benders,
                                solve_f2, solve_f3, solve_framework)
from hubplan.engine import solve_milp
from hubplan.hub_model import build_topology
from hubplan.operation_model import InvestmentPlan, evaluate_plan

from oracles import bilevel_by_enumeration

AB_ONLY = InvestmentPlan(grid={"gas": 5}, units={"AB": 1})
EB_ONLY = InvestmentPlan(grid={"elec": 4}, units={"EB": 1})
# the cap-100 tax must make EB-only at least as cheap as AB-only
INDIFFERENCE = (74000.0 - (800 + 365 * 2 * 50 / 0.9)) / (365 * 2 * (0.181 / 0.9 - 0.1))


def cooperative_by_enumeration(topo, scen, cap):
    """Grid capacity is free on DESK-A and a cooperative operator never loses
    from more of it, so only the unit counts need enumerating."""
    best = (math.inf, None)
    for eb, ab in itertools.product(range(4), range(4)):
        plan = InvestmentPlan(grid={"elec": 15, "gas": 15}, units={"EB": eb, "AB": ab})
        ev = evaluate_plan(topo, scen, plan, emission_cap=cap)
        if ev.feasible and ev.total < best[0]:
            best = (ev.total, plan)
    return best


@pytest.fixture(scope="module")
def at_100(desk):
    _, topo, scen = desk
    econ = EconomicConfig(emission_cap=100.0)
    return {f: solve_framework(f, topo, scen, econ) for f in ("F1", "F2", "F3", "F4", "F1-benders")}


def test_f1_uncapped(desk):
    spec, topo, scen = desk
    res = solve_f1(topo, scen)
    assert res.status == "optimal" and res.verified
    assert res.total == pytest.approx(41355.5556, abs=1e-4)
    assert res.achieved_emissions == pytest.approx(146.8111, abs=1e-4)
    assert res.plan.units == {"AB": 1}


@pytest.mark.parametrize("cap", [100.0, 80.0, 73.0])
def test_f1_matches_enumeration(desk, cap):
    _, topo, scen = desk
    res = solve_f1(topo, scen, EconomicConfig(emission_cap=cap))
    want, _ = cooperative_by_enumeration(topo, scen, cap)
    assert res.total == pytest.approx(want, rel=1e-9)
    assert res.achieved_emissions <= cap + 1e-6


def test_f1_at_100(at_100):
    res = at_100["F1"]
    assert res.total == pytest.approx(62931.868, abs=1e-3)
    assert res.achieved_emissions == pytest.approx(100.0, abs=1e-6)


def test_f1_infeasible_cap_reports_floor(desk):
    _, topo, scen = desk
    res = solve_f1(topo, scen, EconomicConfig(emission_cap=60.0))
    assert res.status == "infeasible" and res.plan is None
    assert "minimum achievable 73 t/yr" in res.message
    floor, plan = minimum_emissions(topo, scen)
    assert floor == pytest.approx(73.0)
    assert plan.units.get("EB", 0) >= 1


def test_benders_matches_monolithic(desk, at_100):
    _, topo, scen = desk
    free = solve_f1_benders(topo, scen)
    assert free.total == pytest.approx(solve_f1(topo, scen).total, rel=1e-6)
    assert free.iterations <= 50
    capped = at_100["F1-benders"]
    assert capped.total == pytest.approx(at_100["F1"].total, rel=1e-6)
    assert capped.iterations <= 50
    assert capped.achieved_emissions <= 100.0 + 1e-6


@pytest.mark.parametrize("seed", [1, 2])
def test_benders_on_random_hubs(seed):
    rng = np.random.default_rng(seed)
    spec, scen = random_instance(rng, T=2, storage=False)
    topo = build_topology(spec)
    mono = solve_f1(topo, scen)
    bend = solve_f1_benders(topo, scen)
    assert bend.total == pytest.approx(mono.total, rel=1e-6)


def test_f3_at_100(desk, at_100):
    _, topo, scen = desk
    res = at_100["F3"]
    want, plan = bilevel_by_enumeration(topo, scen, 100.0)
    assert want == pytest.approx(67500.0)
    assert res.total == pytest.approx(want, rel=1e-6)
    assert res.plan.units == {"EB": 1, "AB": 1}
    assert res.achieved_emissions == pytest.approx(89.6075)
    assert res.verified


def test_f3_recovers_from_small_big_m(desk):
    _, topo, scen = desk
    res = solve_f3(topo, scen, EconomicConfig(emission_cap=100.0, big_m=20.0))
    assert res.big_m_trips, "an M of 20 is below the heat-bus price and must trip"
    assert res.big_m >= 200.0
    assert res.total == pytest.approx(67500.0)


def test_f2_at_100(at_100):
    res = at_100["F2"]
    assert res.achieved_emissions <= 100.0 + 1e-6
    assert res.total == pytest.approx(74000.0)
    assert INDIFFERENCE == pytest.approx(442.27, abs=5e-3)
    assert INDIFFERENCE <= res.carbon_price <= INDIFFERENCE + 0.5
    assert res.price_bracket <= 0.5
    assert not res.monotone_violations
    ordered = sorted(res.probes, key=lambda p: p.price)
    assert all(b.emissions <= a.emissions + 1e-9 for a, b in zip(ordered, ordered[1:]))


def test_f2_tax_is_reported_separately(desk):
    _, topo, scen = desk
    res = solve_f2(topo, scen, EconomicConfig(carbon_price=500.0))
    bd = res.evaluation.breakdown
    assert res.total == pytest.approx(74000.0)
    assert bd.npv_tax == pytest.approx(500.0 * 73.0)
    assert res.objective == pytest.approx(74000.0 + 500.0 * 73.0)


def test_f4_at_100(at_100):
    res = at_100["F4"]
    assert res.total == pytest.approx(74000.0)
    assert INDIFFERENCE <= res.carbon_price <= INDIFFERENCE + 0.5
    jumps = jump_structure(res)
    assert [round(e, 4) for _, e, _ in jumps] == [146.8111, 73.0]


def test_ordering_at_100(at_100):
    t = {k: r.total for k, r in at_100.items()}
    assert t["F1"] <= t["F3"] <= t["F4"]
    assert t["F1"] <= t["F2"]


def test_tax_epigraph_bounded_with_negative_emissions():
    rng = np.random.default_rng(4)
    spec, _ = random_instance(rng, T=3)
    topo = build_topology(spec)
    scen = random_scenarios(rng, topo.energies, T=3, negative_emissions=True,
                            demanded=[e.id for e in spec.energies if e.demanded])
    scen.emissions[topo.energy_index("elec"), 0, 0, 0] = -0.05
    built = build_cooperative(topo, scen, None, tax_rate=1e6)
    sol = solve_milp(built.model)
    assert sol.status == "optimal"
    assert math.isfinite(sol.objective)
    res = solve_f2(topo, scen, EconomicConfig(carbon_price=1e6))
    assert res.status == "optimal"
    assert min(res.evaluation.breakdown.tax) >= 0.0


def test_result_dict_round_trip(desk, at_100):
    _, topo, scen = desk
    for res in at_100.values():
        again = result_from_dict(res.as_dict(), topo, scen)
        assert again.as_dict() == res.as_dict()


def test_unknown_framework(desk):
    _, topo, scen = desk
    with pytest.raises(ValueError, match="unknown framework"):
        solve_framework("F9", topo, scen)


def test_config_validation():
    with pytest.raises(ValueError):
        EconomicConfig(emission_cap=math.inf)
    with pytest.raises(ValueError):
        EconomicConfig(price_tol=0)
    with pytest.raises(ValueError):
        EconomicConfig(carbon_price=-1)
