from fractions import Fraction

import numpy as np
import pytest

from hubplan.fixtures import desk_a_scenarios
from hubplan.scenarios import (KINDS, ScenarioSet, SeriesError, YearSeries, expand_to_year,
                               grow_years, load_series, read_series_csv, reduce_days,
                               scenarios_from_csv, scenarios_to_csv, series_to_csv, write_series)


def two_type_year(n_first=200, T=24, seed=0):
    """365 days drawn from two exact profiles, first ``n_first`` days of type A shuffled in."""
    rng = np.random.default_rng(seed)
    hours = np.arange(T)
    a = {"price": 50 + 30 * np.sin(hours / T * 2 * np.pi), "demand": 1 + 0.5 * np.cos(hours / 4)}
    b = {"price": 120 - 10 * np.cos(hours / T * 2 * np.pi), "demand": 3 + 0.2 * np.sin(hours / 3)}
    kinds = np.array([0] * n_first + [1] * (365 - n_first))
    rng.shuffle(kinds)
    arrays = {k: np.zeros((2, 365, T)) for k in KINDS}
    arrays["availability"][:] = 1.0
    for d, kind in enumerate(kinds):
        prof = (a, b)[kind]
        arrays["price"][0, d] = prof["price"]
        arrays["demand"][1, d] = prof["demand"]
        arrays["emissions"][0, d] = 0.1 + 0.05 * kind
    return YearSeries(["elec", "heat"], **arrays), kinds


def test_two_day_types_reduce_to_exact_probabilities():
    series, kinds = two_type_year()
    scen = reduce_days(series, k=2, seed=0)
    assert sum(scen.probabilities) == 1
    by_type = {int(kinds[d]): p for d, p in zip(scen.source_days, scen.probabilities)}
    assert by_type == {0: Fraction(200, 365), 1: Fraction(165, 365)}
    # medoids are members of their cluster and reproduce the type profiles exactly
    for s, d in enumerate(scen.source_days):
        np.testing.assert_array_equal(scen.price[:, s, :, 0], series.price[:, d, :])


def test_reduction_is_deterministic_for_a_seed():
    series, _ = two_type_year(seed=3)
    a, b = reduce_days(series, k=2, seed=7), reduce_days(series, k=2, seed=7)
    assert a.source_days == b.source_days and a.probabilities == b.probabilities


def test_reduction_rejects_bad_k():
    series, _ = two_type_year()
    with pytest.raises(SeriesError):
        reduce_days(series, k=0)
    with pytest.raises(SeriesError, match="distinct days"):
        reduce_days(series, k=3)


@pytest.mark.parametrize("k", [1, 3, 5])
def test_probabilities_sum_to_one_on_noisy_years(k):
    rng = np.random.default_rng(k)
    arrays = {kd: rng.uniform(0, 1, (2, 365, 6)) for kd in KINDS}
    scen = reduce_days(YearSeries(["elec", "heat"], **arrays), k=k, seed=0)
    assert sum(scen.probabilities, Fraction(0)) == 1
    assert all(p.denominator in (1, 5, 73, 365) for p in scen.probabilities)
    assert len(set(scen.source_days)) == k


def test_expand_then_reduce_recovers_representatives():
    series, _ = two_type_year()
    scen = reduce_days(series, k=2)
    year = expand_to_year(scen)
    assert year.n_days == 365
    again = reduce_days(year, k=2)
    assert sorted(again.probabilities) == sorted(scen.probabilities)


def test_growth_compounds_prices_and_demand():
    base = desk_a_scenarios()
    grown = grow_years(base, 0.02, 0.04, 3)
    assert grown.Y == 3
    np.testing.assert_allclose(grown.price[0, 0, 0], 100 * 1.02 ** np.arange(3))
    np.testing.assert_allclose(grown.demand[2, 0, 0], 1.04 ** np.arange(3))
    np.testing.assert_allclose(grown.emissions[0, 0, 0], [0.1] * 3)


def test_probabilities_must_sum_to_one():
    base = desk_a_scenarios()
    with pytest.raises(SeriesError):
        ScenarioSet(base.energies, base.price, base.feedin, base.emissions, base.availability,
                    base.demand, probabilities=[Fraction(1, 2)], source_days=[0])


def test_series_csv_round_trip(tmp_path):
    series, _ = two_type_year(T=4)
    paths = write_series(series, tmp_path)
    again = load_series(paths)
    for k in KINDS:
        np.testing.assert_array_equal(again.kind(k), series.kind(k))


def test_missing_hours_are_reported():
    series, _ = two_type_year(T=4)
    text = series_to_csv(series, "elec").splitlines()
    del text[5]  # day 2, hour 1
    with pytest.raises(SeriesError, match="missing hours: day 2 hour 1"):
        read_series_csv("\n".join(text), "elec.csv")


def test_csv_field_errors_carry_line_numbers():
    bad = "day,hour,price,feedin,emissions,availability,demand\n1,1,10,0,0,1,x\n1,2,10,0,0,1\n"
    with pytest.raises(SeriesError) as exc:
        read_series_csv(bad, "e.csv", expected_days=None)
    assert exc.value.problems == ["e.csv: line 2: non-numeric field",
                                  "e.csv: line 3: expected 7 fields, got 6"]


def test_year_series_value_checks():
    arrays = {k: np.zeros((1, 2, 2)) for k in KINDS}
    arrays["availability"][0, 0, 0] = 1.5
    arrays["demand"][0, 1, 1] = -1
    with pytest.raises(SeriesError) as exc:
        YearSeries(["elec"], **arrays)
    assert "availability must lie in [0, 1]" in exc.value.problems
    assert "demand must be >= 0" in exc.value.problems


def test_scenario_csv_round_trip():
    series, _ = two_type_year(T=3)
    scen = reduce_days(series, k=2)
    again = scenarios_from_csv(scenarios_to_csv(scen))
    assert again.probabilities == scen.probabilities
    assert again.source_days == scen.source_days
    for k in KINDS:
        np.testing.assert_array_equal(getattr(again, k), getattr(scen, k))
