"""Independent reference answers computed by brute force."""

import itertools
import math

from hubplan.operation_model import InvestmentPlan, evaluate_plan

_GRID_CACHE = {}


def plan_grid(topo, scen):
    """Every plan on the bit grid, priced by the optimistic operator: ``[(plan, total, E)]``."""
    key = (id(topo), id(scen))
    if key not in _GRID_CACHE:
        spec = topo.spec
        ranges = [range(2 ** b) for b in InvestmentPlan.slot_bits(spec)]
        rows = []
        for vec in itertools.product(*ranges):
            plan = InvestmentPlan.from_vector(spec, vec)
            ev = evaluate_plan(topo, scen, plan, optimistic=True)
            if ev.feasible:
                rows.append((plan, ev.total, ev.max_emissions))
        _GRID_CACHE[key] = rows
    return _GRID_CACHE[key]


def bilevel_by_enumeration(topo, scen, cap):
    """Cheapest plan whose operator dispatch meets ``cap``; ``(total, plan)``."""
    best = (math.inf, None)
    for plan, total, em in plan_grid(topo, scen):
        if (cap is None or em <= cap + 1e-9) and total < best[0]:
            best = (total, plan)
    return best
