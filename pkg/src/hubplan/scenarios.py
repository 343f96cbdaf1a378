"""Time series, representative days and multi-year growth.

A :class:`YearSeries` holds hourly prices, feed-in tariffs, marginal emissions,
availability and demand for every energy over a year of days.
:func:`reduce_days` clusters the days with k-means on Z-scored features and
keeps the medoid of each cluster, so every representative day is a real day
and discrete availability flags keep legal values.  Probabilities are exact
fractions of the day count.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

KINDS = ("price", "feedin", "emissions", "availability", "demand")
CSV_HEADER = ["day", "hour", *KINDS]
DAYS_PER_YEAR = 365


class SeriesError(ValueError):
    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass
class YearSeries:
    """Arrays indexed ``[energy, day, hour]``."""

    energies: list[str]
    price: np.ndarray
    feedin: np.ndarray
    emissions: np.ndarray
    availability: np.ndarray
    demand: np.ndarray
    dt: float = 1.0
    binary_availability: frozenset[str] = frozenset()

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise SeriesError(problems)

    @property
    def n_days(self) -> int:
        return self.price.shape[1]

    @property
    def n_hours(self) -> int:
        return self.price.shape[2]

    def problems(self) -> list[str]:
        out = []
        shape = (len(self.energies), *self.price.shape[1:]) if self.price.ndim == 3 else None
        if shape is None:
            return ["series arrays must be 3-dimensional (energy, day, hour)"]
        if shape[1] == 0 or shape[2] == 0:
            out.append("empty series")
        for k in KINDS:
            a = getattr(self, k)
            if a.shape != shape:
                out.append(f"{k}: shape {a.shape} differs from {shape}")
            elif not np.all(np.isfinite(a)):
                out.append(f"{k}: non-finite values")
        if out:
            return out
        if not self.dt > 0:
            out.append("dt must be > 0")
        if np.any(self.availability < 0) or np.any(self.availability > 1):
            out.append("availability must lie in [0, 1]")
        for m in self.binary_availability:
            i = self.energies.index(m)
            if not np.all(np.isin(self.availability[i], (0.0, 1.0))):
                out.append(f"{m}: availability must be 0 or 1")
        if np.any(self.demand < 0):
            out.append("demand must be >= 0")
        return out

    def kind(self, k: str) -> np.ndarray:
        return getattr(self, k)


@dataclass
class DayData:
    """Parameters of one representative day in one year, indexed ``[energy, hour]``."""

    s: int
    y: int
    price: np.ndarray
    feedin: np.ndarray
    emissions: np.ndarray
    availability: np.ndarray
    demand: np.ndarray
    dt: float
    probability: Fraction

    @property
    def n_hours(self) -> int:
        return self.price.shape[1]

    @property
    def weight(self) -> float:
        """Days per year this representative stands for (365 * pi)."""
        return DAYS_PER_YEAR * float(self.probability)


@dataclass
class ScenarioSet:
    """Representative days over years; arrays indexed ``[energy, s, hour, year]``."""

    energies: list[str]
    price: np.ndarray
    feedin: np.ndarray
    emissions: np.ndarray
    availability: np.ndarray
    demand: np.ndarray
    probabilities: list[Fraction]
    source_days: list[int]
    dt: float = 1.0
    discount_rate: float = 0.0

    def __post_init__(self):
        if sum(self.probabilities, Fraction(0)) != 1:
            raise SeriesError(["probabilities must sum to exactly 1"])
        if any(p <= 0 for p in self.probabilities):
            raise SeriesError(["probabilities must be > 0"])
        if self.discount_rate <= -1:
            raise SeriesError(["discount rate must be > -1"])

    @property
    def S(self) -> int:
        return self.price.shape[1]

    @property
    def T(self) -> int:
        return self.price.shape[2]

    @property
    def Y(self) -> int:
        return self.price.shape[3]

    def day(self, s: int, y: int) -> DayData:
        """Day ``s`` of year ``y`` (both zero-based)."""
        return DayData(s, y, *(getattr(self, k)[:, s, :, y] for k in KINDS),
                       dt=self.dt, probability=self.probabilities[s])

    def days(self):
        for y in range(self.Y):
            for s in range(self.S):
                yield self.day(s, y)

    def discount(self, y: int) -> float:
        """Present-value factor for zero-based year ``y`` (paid at the end of year y+1)."""
        return 1.0 / (1.0 + self.discount_rate) ** (y + 1)

    def with_energies(self, energies: Sequence[str]) -> "ScenarioSet":
        """Reorder (and zero-fill missing) energies to match a hub."""
        idx = {m: i for i, m in enumerate(self.energies)}
        shape = (len(energies), self.S, self.T, self.Y)
        arrays = {}
        for k in KINDS:
            a = np.zeros(shape)
            src = getattr(self, k)
            for j, m in enumerate(energies):
                if m in idx:
                    a[j] = src[idx[m]]
                elif k == "availability":
                    a[j] = 1.0
            arrays[k] = a
        return replace(self, energies=list(energies), **arrays)


# ---------------------------------------------------------------------------
# reduction
# ---------------------------------------------------------------------------


def day_features(series: YearSeries) -> np.ndarray:
    """Per-day feature rows: every (kind, energy) hourly profile, Z-scored."""
    blocks = []
    for k in KINDS:
        a = series.kind(k)
        for i in range(len(series.energies)):
            x = a[i]
            sd = x.std()
            blocks.append((x - x.mean()) / sd if sd > 0 else np.zeros_like(x))
    return np.hstack(blocks)


def reduce_days(series: YearSeries, k: int = 10, seed: int = 0,
                discount_rate: float = 0.0, n_init: int = 50) -> ScenarioSet:
    """Cluster the days of ``series`` into ``k`` medoid representatives (single year)."""
    from sklearn.cluster import KMeans

    D = series.n_days
    if not 1 <= k <= D:
        raise SeriesError([f"k must be in [1, {D}], got {k}"])
    X = day_features(series)
    distinct = np.unique(X, axis=0).shape[0]
    if k > distinct:
        raise SeriesError([f"k={k} exceeds the number of distinct days ({distinct})"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        km = KMeans(n_clusters=k, init="k-means++", n_init=n_init, random_state=seed).fit(X)
    labels = km.labels_
    medoids, sizes = [], []
    for c in range(k):
        members = np.flatnonzero(labels == c)
        dist = np.linalg.norm(X[members] - km.cluster_centers_[c], axis=1)
        best = dist.min()
        medoids.append(int(members[np.flatnonzero(dist <= best + 1e-12)[0]]))
        sizes.append(len(members))
    order = np.argsort(medoids, kind="stable")
    medoids = [medoids[i] for i in order]
    sizes = [sizes[i] for i in order]
    arrays = {kd: series.kind(kd)[:, medoids, :][..., None].copy() for kd in KINDS}
    return ScenarioSet(series.energies, **arrays, probabilities=[Fraction(n, D) for n in sizes],
                       source_days=medoids, dt=series.dt, discount_rate=discount_rate)


def grow_years(base: ScenarioSet, fuel_growth: float, demand_growth: float, Y: int) -> ScenarioSet:
    """Replicate a single-year set over ``Y`` years with compound price and demand growth."""
    if Y < 1:
        raise SeriesError(["Y must be >= 1"])
    if fuel_growth <= -1 or demand_growth <= -1:
        raise SeriesError(["growth rates must be > -1"])
    fuel = (1.0 + fuel_growth) ** np.arange(Y)
    dem = (1.0 + demand_growth) ** np.arange(Y)
    first = {k: getattr(base, k)[..., :1] for k in KINDS}
    arrays = {
        "price": first["price"] * fuel,
        "feedin": first["feedin"] * fuel,
        "emissions": np.repeat(first["emissions"], Y, axis=3),
        "availability": np.repeat(first["availability"], Y, axis=3),
        "demand": first["demand"] * dem,
    }
    return replace(base, **arrays)


def expand_to_year(scen: ScenarioSet, days: int = DAYS_PER_YEAR) -> YearSeries:
    """Rebuild a year from year 1 of ``scen`` by repeating each representative pi*days times."""
    counts = [p * days for p in scen.probabilities]
    if any(c.denominator != 1 for c in counts):
        raise SeriesError(["probabilities are not multiples of 1/days"])
    idx = np.repeat(np.arange(scen.S), [int(c) for c in counts])
    arrays = {k: getattr(scen, k)[..., 0][:, idx, :] for k in KINDS}
    return YearSeries(list(scen.energies), **arrays, dt=scen.dt)


def single_day(energies: Sequence[str], T: int, dt: float = 1.0, discount_rate: float = 0.0,
               **profiles: Mapping[str, Sequence[float] | float]) -> ScenarioSet:
    """One representative day with probability 1, from per-kind ``{energy: profile}`` maps.

    Unset availability defaults to 1; other unset values to 0.
    """
    M = len(energies)
    arrays = {}
    for k in KINDS:
        a = np.full((M, 1, T, 1), 1.0 if k == "availability" else 0.0)
        for m, v in (profiles.get(k) or {}).items():
            a[energies.index(m), 0, :, 0] = np.broadcast_to(np.asarray(v, float), (T,))
        arrays[k] = a
    return ScenarioSet(list(energies), **arrays, probabilities=[Fraction(1)], source_days=[0],
                       dt=dt, discount_rate=discount_rate)


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def read_series_csv(text: str, source: str = "<csv>", expected_days: int | None = DAYS_PER_YEAR):
    """Parse one energy's CSV; returns ``{kind: array[day, hour]}``."""
    problems: list[str] = []
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise SeriesError([f"{source}: empty file"])
    if [h.strip() for h in header] != CSV_HEADER:
        raise SeriesError([f"{source}: line 1: header must be {','.join(CSV_HEADER)}"])
    rows: dict[tuple[int, int], list[float]] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(CSV_HEADER):
            problems.append(f"{source}: line {lineno}: expected {len(CSV_HEADER)} fields, got {len(row)}")
            continue
        try:
            day, hour = int(row[0]), int(row[1])
            vals = [float(c) for c in row[2:]]
        except ValueError:
            problems.append(f"{source}: line {lineno}: non-numeric field")
            continue
        if day < 1 or hour < 1:
            problems.append(f"{source}: line {lineno}: day and hour start at 1")
            continue
        if (day, hour) in rows:
            problems.append(f"{source}: line {lineno}: duplicate day {day} hour {hour}")
            continue
        rows[(day, hour)] = vals
    if not rows and not problems:
        problems.append(f"{source}: no data rows")
    if problems:
        raise SeriesError(problems)
    D = max(d for d, _ in rows)
    T = max(h for _, h in rows)
    if expected_days is not None and D != expected_days:
        problems.append(f"{source}: expected {expected_days} days, found {D}")
    missing = [(d, h) for d in range(1, D + 1) for h in range(1, T + 1) if (d, h) not in rows]
    if missing:
        shown = ", ".join(f"day {d} hour {h}" for d, h in missing[:5])
        more = f" and {len(missing) - 5} more" if len(missing) > 5 else ""
        problems.append(f"{source}: missing hours: {shown}{more}")
    if problems:
        raise SeriesError(problems)
    out = {k: np.empty((D, T)) for k in KINDS}
    for (d, h), vals in rows.items():
        for k, v in zip(KINDS, vals):
            out[k][d - 1, h - 1] = v
    return out


def load_series(paths: Mapping[str, str | Path], dt: float = 1.0,
                expected_days: int | None = DAYS_PER_YEAR,
                binary_availability: Sequence[str] = ()) -> YearSeries:
    energies = list(paths)
    parsed = []
    problems = []
    for m in energies:
        p = Path(paths[m])
        try:
            parsed.append(read_series_csv(p.read_text(encoding="utf-8"), str(p), expected_days))
        except SeriesError as exc:
            problems += exc.problems
        except OSError as exc:
            problems.append(f"{p}: {exc.strerror}")
    if problems:
        raise SeriesError(problems)
    shapes = {parsed[i]["price"].shape for i in range(len(energies))}
    if len(shapes) > 1:
        raise SeriesError([f"energies disagree on (days, hours): {sorted(shapes)}"])
    arrays = {k: np.stack([p[k] for p in parsed]) for k in KINDS}
    return YearSeries(energies, **arrays, dt=dt, binary_availability=frozenset(binary_availability))


def series_to_csv(series: YearSeries, energy: str) -> str:
    i = series.energies.index(energy)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for d in range(series.n_days):
        for h in range(series.n_hours):
            w.writerow([d + 1, h + 1, *(repr(float(series.kind(k)[i, d, h])) for k in KINDS)])
    return buf.getvalue()


def write_series(series: YearSeries, directory) -> dict[str, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out = {}
    for m in series.energies:
        p = directory / f"{m}.csv"
        p.write_text(series_to_csv(series, m), encoding="utf-8")
        out[m] = p
    return out


SCENARIO_HEADER = ["scenario", "source_day", "probability", "hour", "energy", *KINDS]


def scenarios_to_csv(scen: ScenarioSet) -> str:
    """Year-1 representative days; probabilities written as exact fractions."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SCENARIO_HEADER)
    for s in range(scen.S):
        for t in range(scen.T):
            for i, m in enumerate(scen.energies):
                w.writerow([s + 1, scen.source_days[s] + 1, str(scen.probabilities[s]), t + 1, m,
                            *(repr(float(getattr(scen, k)[i, s, t, 0])) for k in KINDS)])
    return buf.getvalue()


def scenarios_from_csv(text: str, dt: float = 1.0, discount_rate: float = 0.0) -> ScenarioSet:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != SCENARIO_HEADER:
        raise SeriesError([f"scenario CSV header must be {','.join(SCENARIO_HEADER)}"])
    rows = list(reader)
    if not rows:
        raise SeriesError(["scenario CSV has no rows"])
    energies = list(dict.fromkeys(r["energy"] for r in rows))
    S = max(int(r["scenario"]) for r in rows)
    T = max(int(r["hour"]) for r in rows)
    arrays = {k: np.full((len(energies), S, T, 1), np.nan) for k in KINDS}
    probs: dict[int, Fraction] = {}
    src: dict[int, int] = {}
    for r in rows:
        s, t, i = int(r["scenario"]) - 1, int(r["hour"]) - 1, energies.index(r["energy"])
        probs[s] = Fraction(r["probability"])
        src[s] = int(r["source_day"]) - 1
        for k in KINDS:
            arrays[k][i, s, t, 0] = float(r[k])
    if any(np.isnan(a).any() for a in arrays.values()) or len(probs) != S:
        raise SeriesError(["scenario CSV is missing (scenario, hour, energy) rows"])
    return ScenarioSet(energies, **arrays, probabilities=[probs[s] for s in range(S)],
                       source_days=[src[s] for s in range(S)], dt=dt, discount_rate=discount_rate)
