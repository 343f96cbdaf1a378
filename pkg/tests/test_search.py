
import numpy as np
import pytest

from hubplan.fixtures import random_instance
from hubplan.frameworks import EconomicConfig
from hubplan.hub_model import build_topology
from hubplan.operation_model import InvestmentPlan, evaluate_plan
from hubplan.search import (FRONTIER_HEADER, Neighborhood, ParetoPoint, combined_csv,
                            frontier_csv, neighbor_search, pareto_sweep, pick_warm_start,
                            share_bounds, targets_for)

AB_ONLY = InvestmentPlan(grid={"gas": 5}, units={"AB": 1})
EB_ONLY = InvestmentPlan(grid={"elec": 4}, units={"EB": 1})
MIXED = InvestmentPlan(grid={"elec": 4, "gas": 1}, units={"EB": 1, "AB": 1})


def test_desk_trace_reaches_mixed_plan(desk):
    spec, topo, scen = desk
    res = neighbor_search(topo, scen, EB_ONLY, emission_cap=100.0, order=2)
    assert res.start_cost == pytest.approx(74000.0)
    assert res.cost == pytest.approx(67500.0)
    assert res.improved
    assert res.moves == [(MIXED.describe(spec), pytest.approx(67500.0), pytest.approx(89.6075))]


def test_single_slot_moves_cannot_escape(desk):
    # adding a boiler and a gas step are two slots; one alone gains nothing
    _, topo, scen = desk
    res = neighbor_search(topo, scen, EB_ONLY, emission_cap=100.0, order=1)
    assert res.cost == pytest.approx(74000.0)
    assert not res.improved


def test_infeasible_incumbent_is_returned_unchanged(desk):
    _, topo, scen = desk
    res = neighbor_search(topo, scen, AB_ONLY, emission_cap=100.0)
    assert res.plan == AB_ONLY and res.moves == []
    assert "above the emissions cap" in res.note


def test_neighborhood_validation():
    with pytest.raises(ValueError):
        Neighborhood(order=3)
    with pytest.raises(ValueError):
        Neighborhood(step=0)


def test_randomized_invocations_never_worsen():
    rng = np.random.default_rng(2024)
    runs = 0
    while runs < 100:
        spec, scen = random_instance(rng, T=2, storage=False, n_converters=int(rng.integers(1, 3)))
        topo = build_topology(spec)
        vec = [int(rng.integers(0, 2 ** b)) for b in InvestmentPlan.slot_bits(spec)]
        start = InvestmentPlan.from_vector(spec, vec)
        ev = evaluate_plan(topo, scen, start, optimistic=True)
        if not ev.feasible:
            continue
        cap = None if rng.random() < 0.2 else ev.max_emissions * float(rng.uniform(1.0, 1.5))
        mode = "operator" if rng.random() < 0.7 else "cooperative"
        res = neighbor_search(topo, scen, start, emission_cap=cap, order=int(rng.integers(1, 3)),
                              mode=mode, max_moves=20)
        assert res.cost <= res.start_cost + 1e-7 * max(1.0, abs(res.start_cost))
        if cap is not None:
            assert res.evaluation.max_emissions <= cap + 1e-9 * max(1.0, cap)
        # the returned plan re-prices to what the search reported
        check = evaluate_plan(topo, scen, res.plan, optimistic=(mode == "operator"),
                              emission_cap=cap if mode == "cooperative" else None)
        assert check.total == pytest.approx(res.cost, rel=1e-9, abs=1e-6)
        runs += 1


def test_pick_warm_start_reprices_at_the_carbon_price(desk):
    _, topo, scen = desk
    pool = [AB_ONLY, EB_ONLY, MIXED]
    assert pick_warm_start(pool, topo, scen, 0.0) == AB_ONLY
    # AB-only pays tax on 146.8 t, EB-only on 73 t: they tie near 442.27
    assert pick_warm_start(pool, topo, scen, 440.0) == AB_ONLY
    assert pick_warm_start(pool, topo, scen, 445.0) == EB_ONLY
    assert pick_warm_start([AB_ONLY, MIXED], topo, scen, 460.0) == MIXED
    with pytest.raises(ValueError):
        pick_warm_start([], topo, scen)
    with pytest.raises(ValueError):
        pick_warm_start([InvestmentPlan()], topo, scen)


def test_targets_for():
    assert targets_for(120.0, 4) == [120.0, 90.0, 60.0, 30.0]
    assert targets_for(50.0, 1) == [50.0]
    with pytest.raises(ValueError):
        targets_for(50.0, 0)


class _Res:
    def __init__(self, plan, total):
        self.plan, self.total = plan, total


def test_share_bounds_moves_incumbents_up_and_bounds_down():
    pts = [ParetoPoint(100.0, _Res("p100", 50.0), 50.0, 40.0),
           ParetoPoint(80.0, _Res("p80", 45.0), 45.0, 30.0),
           ParetoPoint(60.0, _Res("p60", 70.0), 70.0, 20.0)]
    share_bounds(pts)
    assert (pts[0].upper, pts[0].source) == (45.0, "inherited-from-tighter")
    assert (pts[1].lower, pts[1].source) == (40.0, "bound-from-looser")
    assert pts[2].lower == 40.0
    assert all(p.lower <= p.upper for p in pts)
    with pytest.raises(ValueError):
        ParetoPoint(1.0, None, 0.0, 0.0, source="guessed")


def test_pareto_sweep_resolution_two(desk):
    _, topo, scen = desk
    pts = pareto_sweep("F1", topo, scen, 2)
    assert [p.target for p in pts] == pytest.approx([146.8111, 73.4056], abs=1e-3)
    assert pts[0].upper == pytest.approx(41355.5556, abs=1e-3)
    assert pts[1].result.achieved_emissions <= pts[1].target + 1e-6
    assert pts[0].upper <= pts[1].upper
    csv_text = frontier_csv(pts)
    lines = csv_text.splitlines()
    assert lines[0] == ",".join(FRONTIER_HEADER) and len(lines) == 3
    again = pareto_sweep("F1", topo, scen, 2, parallelism=2)
    assert frontier_csv(again) == csv_text


def test_combined_csv_aligns_targets(desk):
    _, topo, scen = desk
    f1 = pareto_sweep("F1", topo, scen, 1, EconomicConfig())
    f3 = pareto_sweep("F3", topo, scen, 1, EconomicConfig())
    text = combined_csv({"F1": f1, "F3": f3}).splitlines()
    assert text[0] == "target_tCO2e,F1_total_cost,F3_total_cost"
    assert len(text) == 2
    _, a, b = text[1].split(",")
    assert float(a) <= float(b) + 1e-6
