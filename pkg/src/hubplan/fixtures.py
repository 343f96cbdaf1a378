"""Reference hubs and random instance generators.

``desk_a`` is the two-converter heat hub used throughout the tests::

    elec grid (100 /MWh, 0.1 t/MWh) --> EB  (eta 1.0, 1 MW/unit, 1000 per unit) --+
    gas grid  ( 50 /MWh, 0.181 t/MWh) --> AB (eta 0.9, 2 MW/unit,  800 per unit) --+--> heat 1 MW

Two hourly periods, one representative day, one year, no discounting, free
grid capacity on a 0.25 MW x 4-bit grid.  Electricity may be exported at a
zero tariff, which only adds a spill path.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .hub_model import Converter, EnergyType, GridConnection, HubSpec, Storage
from .scenarios import KINDS, ScenarioSet, single_day


def desk_a_spec(converter_bits: int = 2) -> HubSpec:
    return HubSpec(
        name="desk-a",
        energies=(EnergyType("elec"), EnergyType("gas"), EnergyType("heat", demanded=True)),
        grid=(GridConnection("elec", 0.0, 0.25, 4, exportable=True),
              GridConnection("gas", 0.0, 0.25, 4)),
        converters=(Converter("EB", "elec", (("heat", 1.0),), 1.0, 1000.0, converter_bits),
                    Converter("AB", "gas", (("heat", 0.9),), 2.0, 800.0, converter_bits)),
    )


def desk_a_scenarios(demand: float = 1.0) -> ScenarioSet:
    return single_day(
        ["elec", "gas", "heat"], T=2, dt=1.0,
        price={"elec": 100.0, "gas": 50.0},
        emissions={"elec": 0.1, "gas": 0.181},
        demand={"heat": demand},
    )


def desk_a():
    """``(spec, scenarios)`` for DESK-A."""
    return desk_a_spec(), desk_a_scenarios()


def five_energy_spec() -> HubSpec:
    """Seven converters and four storages over electricity, PV, gas, heat and cooling."""
    return HubSpec(
        name="five-energy",
        energies=(EnergyType("elec", demanded=True), EnergyType("pv", bus="elec"),
                  EnergyType("gas"), EnergyType("heat", demanded=True),
                  EnergyType("cool", demanded=True)),
        grid=(GridConnection("elec", 2000.0, 0.5, 6, exportable=True),
              GridConnection("pv", 8000.0, 0.25, 6),
              GridConnection("gas", 1000.0, 0.5, 6),
              GridConnection("heat", 1500.0, 0.5, 6)),
        converters=(
            Converter("AB", "gas", (("heat", 0.9),), 1.0, 300_000.0, 3),
            Converter("CERG", "elec", (("cool", 4.0),), 0.5, 400_000.0, 3),
            Converter("CHP", "gas", (("elec", 0.35), ("heat", 0.45)), 1.0, 1_500_000.0, 3),
            Converter("EB", "elec", (("heat", 0.98),), 1.0, 200_000.0, 3),
            Converter("HP", "elec", (("heat", 3.5),), 0.5, 600_000.0, 3),
            Converter("PTG", "elec", (("gas", 0.6),), 0.5, 1_000_000.0, 3),
            Converter("WARG", "heat", (("cool", 0.7),), 1.0, 350_000.0, 3),
        ),
        storages=(
            Storage("ES", "elec", 0.95, 0.95, 500_000.0, 1_000_000.0, 0.25, 0.5, 4, 4),
            Storage("GS", "gas", 0.99, 0.99, 50_000.0, 20_000.0, 0.5, 1.0, 4, 4),
            Storage("HS", "heat", 0.95, 0.9, 50_000.0, 60_000.0, 0.5, 1.0, 4, 4),
            Storage("CS", "cool", 0.95, 0.9, 50_000.0, 60_000.0, 0.5, 1.0, 4, 4),
        ),
    )


def random_spec(rng: np.random.Generator, n_converters: int | None = None,
                storage: bool | None = None, bits: int = 2) -> HubSpec:
    """A small random heat/electricity hub that always has a feasible plan.

    Heat is always demanded and an electric boiler always exists, so enough
    units and grid capacity can meet any demand the generator produces.
    """
    n_converters = int(rng.integers(1, 3)) if n_converters is None else n_converters
    storage = bool(rng.random() < 0.5) if storage is None else storage
    elec_demanded = bool(rng.random() < 0.5)
    energies = (EnergyType("elec", demanded=elec_demanded), EnergyType("gas"),
                EnergyType("heat", demanded=True))
    grid = (GridConnection("elec", float(rng.choice([0.0, 5.0, 20.0])), 0.5, 3,
                           exportable=bool(rng.random() < 0.5)),
            GridConnection("gas", float(rng.choice([0.0, 5.0])), 0.5, 3))
    pool = [
        Converter("EB", "elec", (("heat", 1.0),), 1.0, float(rng.integers(200, 1200)), bits),
        Converter("AB", "gas", (("heat", round(float(rng.uniform(0.7, 0.95)), 3)),), 1.0,
                  float(rng.integers(200, 1200)), bits),
        Converter("CHP", "gas", (("elec", 0.35), ("heat", 0.45)), 1.0,
                  float(rng.integers(400, 2000)), bits),
        Converter("HP", "elec", (("heat", 3.0),), 0.5, float(rng.integers(500, 2500)), bits),
    ]
    chosen = [pool[0]] + [pool[i] for i in rng.permutation(np.arange(1, 4))[:max(0, n_converters - 1)]]
    storages = ()
    if storage:
        storages = (Storage("HS", "heat", 0.95, 0.9, float(rng.integers(10, 200)),
                            float(rng.integers(10, 200)), 0.5, 0.5, 2, 2),)
    return HubSpec("random", energies, grid, tuple(chosen), storages)


def random_scenarios(rng: np.random.Generator, energies, T: int = 3, S: int = 1, Y: int = 1,
                     demand_scale: float = 1.0, negative_emissions: bool = False,
                     discount_rate: float = 0.0,
                     demanded=("heat", "elec")) -> ScenarioSet:
    """Random prices, emissions and demands (for ``demanded`` energies) with exact probabilities."""
    M = len(energies)
    shape = (M, S, T, Y)
    price = np.zeros(shape)
    feedin = np.zeros(shape)
    emissions = np.zeros(shape)
    demand = np.zeros(shape)
    for i, m in enumerate(energies):
        if m == "elec":
            price[i] = rng.uniform(40, 140, shape[1:]).round(1)
            feedin[i] = (price[i] * rng.uniform(0.2, 0.6)).round(1)
            lo = -0.05 if negative_emissions else 0.02
            emissions[i] = rng.uniform(lo, 0.2, shape[1:]).round(3)
        elif m == "gas":
            price[i] = rng.uniform(30, 70, shape[1:]).round(1)
            emissions[i] = 0.181
        if m not in demanded:
            continue
        if m == "heat":
            demand[i] = rng.uniform(0.2, 1.0, shape[1:]).round(2) * demand_scale
        if m == "elec":
            demand[i] = rng.uniform(0.0, 0.4, shape[1:]).round(2) * demand_scale
    counts = rng.integers(1, 5, S)
    probs = [Fraction(int(c), int(counts.sum())) for c in counts]
    arrays = dict(price=price, feedin=feedin, emissions=emissions,
                  availability=np.ones(shape), demand=demand)
    assert set(arrays) == set(KINDS)
    return ScenarioSet(list(energies), **arrays, probabilities=probs, source_days=list(range(S)),
                       dt=1.0, discount_rate=discount_rate)


def random_instance(rng: np.random.Generator, T: int = 3, S: int = 1, Y: int = 1,
                    **spec_kw):
    """``(spec, scenarios)`` with demands only on the spec's demanded energies."""
    spec = random_spec(rng, **spec_kw)
    demanded = [e.id for e in spec.energies if e.demanded]
    scen = random_scenarios(rng, spec.energy_ids, T=T, S=S, Y=Y, demanded=demanded)
    return spec, scen


def spec_with_dims(M: int, G_C: int, G_S: int, N_A: int, N_B: int, N_C: int, N_D: int) -> HubSpec:
    """A hub with exactly the requested set sizes and uniform bit counts.

    Every energy has an exportable grid connection and energy 0 is demanded;
    converters map energy k to energy k+1 (cyclically), storages sit on
    energies round-robin.
    """
    if M < 1:
        raise ValueError("M must be >= 1")
    names = [f"e{k}" for k in range(M)]
    energies = tuple(EnergyType(n, demanded=(k == 0)) for k, n in enumerate(names))
    grid = tuple(GridConnection(n, 1.0, 0.5, N_A, exportable=True) for n in names)
    converters = tuple(
        Converter(f"C{k}", names[k % M], ((names[(k + 1) % M], 0.9),), 1.0, 10.0, N_D)
        for k in range(G_C))
    storages = tuple(
        Storage(f"S{k}", names[k % M], 0.9, 0.9, 1.0, 1.0, 0.5, 0.5, N_C, N_B)
        for k in range(G_S))
    return HubSpec("dims", energies, grid, converters, storages)
