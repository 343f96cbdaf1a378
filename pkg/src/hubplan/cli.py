"""Command-line front end.

Subcommands: ``validate``, ``reduce-days``, ``solve``, ``pareto``, ``report``.
Exit codes: 0 success, 1 data or validation error, 2 usage error, 3 solver
budget exhausted (bounds are still written).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import threading
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from . import __version__
from .engine import count_complexity
from .frameworks import (FRAMEWORKS, EconomicConfig, FrameworkError, FrameworkResult,
                         result_from_dict, solve_f1, solve_framework)
from .hub_model import HubSpecError, build_topology, load_hub, validate_topology
from .operation_model import check_scenarios, dispatch_csv, evaluate_plan
from .scenarios import (DAYS_PER_YEAR, SeriesError, grow_years, load_series, reduce_days,
                        scenarios_from_csv, scenarios_to_csv)
from .search import combined_csv, frontier_csv, pareto_sweep

log = logging.getLogger("hubplan")

EXIT_OK, EXIT_DATA, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3
SOLVERS = FRAMEWORKS + ("F1-benders",)


class UsageError(Exception):
    pass


class DataError(Exception):
    def __init__(self, problems):
        super().__init__("; ".join(problems))
        self.problems = list(problems)


# ---------------------------------------------------------------------------
# manifest
# ---------------------------------------------------------------------------

MANIFEST_KEYS = {"hub", "scenarios", "series", "reduce", "dt", "expected_days", "discount_rate",
                 "years", "growth", "framework", "frameworks", "emission_cap", "reduction_pct",
                 "resolution", "tolerances", "budgets", "big_m", "heuristic", "seed", "output",
                 "parallelism", "carbon_price"}


@dataclass
class RunManifest:
    hub: Path
    scenarios: Path | None = None
    series: dict[str, Path] = field(default_factory=dict)
    reduce_k: int = 10
    dt: float = 1.0
    expected_days: int | None = DAYS_PER_YEAR
    discount_rate: float = 0.0
    years: int = 1
    fuel_growth: float = 0.0
    demand_growth: float = 0.0
    frameworks: list[str] = field(default_factory=lambda: ["F1"])
    emission_cap: float | None = None
    reduction_pct: float | None = None
    carbon_price: float | None = None
    resolution: int = 1
    gap_tol: float = 1e-6
    price_tol: float = 0.5
    time_limit: float = math.inf
    node_limit: int = 100_000
    big_m: float | None = None
    heuristic: bool = True
    seed: int = 0
    output: Path = Path("out")
    parallelism: int = 1

    def econ(self, cap: float | None) -> EconomicConfig:
        return EconomicConfig(emission_cap=cap, carbon_price=self.carbon_price,
                              price_tol=self.price_tol, gap_tol=self.gap_tol,
                              time_limit=self.time_limit, node_limit=self.node_limit,
                              big_m=self.big_m, heuristic=self.heuristic)

    def as_dict(self) -> dict:
        return {"hub": str(self.hub), "scenarios": str(self.scenarios) if self.scenarios else None,
                "series": {k: str(v) for k, v in self.series.items()}, "reduce_k": self.reduce_k,
                "dt": self.dt, "discount_rate": self.discount_rate, "years": self.years,
                "fuel_growth": self.fuel_growth, "demand_growth": self.demand_growth,
                "frameworks": self.frameworks, "emission_cap": self.emission_cap,
                "reduction_pct": self.reduction_pct, "carbon_price": self.carbon_price,
                "resolution": self.resolution, "gap_tol": self.gap_tol, "price_tol": self.price_tol,
                "seed": self.seed, "parallelism": self.parallelism}


def _num(v, name, lo=None, kind=float):
    try:
        x = kind(v)
    except (TypeError, ValueError):
        raise UsageError(f"manifest: {name} must be a number, got {v!r}")
    if lo is not None and x < lo:
        raise UsageError(f"manifest: {name} must be >= {lo}")
    return x


def load_manifest(path: Path, overrides: dict | None = None) -> RunManifest:
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except OSError as exc:
        raise DataError([f"{path}: {exc.strerror}"])
    except yaml.YAMLError as exc:
        raise DataError([f"{path}: {exc}"])
    if not isinstance(raw, dict):
        raise UsageError(f"{path}: manifest must be a mapping")
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    unknown = set(raw) - MANIFEST_KEYS
    if unknown:
        raise UsageError(f"{path}: unknown manifest keys {sorted(unknown)}")
    base = path.parent

    def rel(p):
        q = Path(p)
        return q if q.is_absolute() else base / q

    if "hub" not in raw:
        raise UsageError(f"{path}: 'hub' is required")
    m = RunManifest(hub=rel(raw["hub"]))
    if raw.get("scenarios"):
        m.scenarios = rel(raw["scenarios"])
    if raw.get("series"):
        if not isinstance(raw["series"], dict):
            raise UsageError("manifest: series must map energy -> csv path")
        m.series = {str(k): rel(v) for k, v in raw["series"].items()}
    if m.scenarios is None and not m.series:
        raise UsageError(f"{path}: one of 'scenarios' or 'series' is required")
    red = raw.get("reduce") or {}
    m.reduce_k = _num(red.get("k", 10), "reduce.k", 1, int)
    m.dt = _num(raw.get("dt", 1.0), "dt", 0)
    if "expected_days" in raw:
        m.expected_days = None if raw["expected_days"] is None else _num(raw["expected_days"], "expected_days", 1, int)
    m.discount_rate = _num(raw.get("discount_rate", 0.0), "discount_rate")
    m.years = _num(raw.get("years", 1), "years", 1, int)
    growth = raw.get("growth") or {}
    m.fuel_growth = _num(growth.get("fuel", 0.0), "growth.fuel")
    m.demand_growth = _num(growth.get("demand", 0.0), "growth.demand")
    fws = raw.get("frameworks", raw.get("framework", "F1"))
    fws = [fws] if isinstance(fws, str) else list(fws)
    for f in fws:
        if f not in SOLVERS:
            raise UsageError(f"invalid framework id {f!r}; expected one of {', '.join(SOLVERS)}")
    m.frameworks = fws
    if raw.get("emission_cap") is not None:
        m.emission_cap = _num(raw["emission_cap"], "emission_cap")
    if raw.get("reduction_pct") is not None:
        m.reduction_pct = _num(raw["reduction_pct"], "reduction_pct", 0)
        if m.emission_cap is not None:
            raise UsageError("manifest: give emission_cap or reduction_pct, not both")
    if raw.get("carbon_price") is not None:
        m.carbon_price = _num(raw["carbon_price"], "carbon_price", 0)
    m.resolution = _num(raw.get("resolution", 1), "resolution", 1, int)
    tol = raw.get("tolerances") or {}
    m.gap_tol = _num(tol.get("gap", 1e-6), "tolerances.gap", 0)
    m.price_tol = _num(tol.get("price", 0.5), "tolerances.price", 0)
    if not m.price_tol > 0:
        raise UsageError("manifest: tolerances.price must be > 0")
    bud = raw.get("budgets") or {}
    m.time_limit = _num(bud.get("time_limit", math.inf), "budgets.time_limit", 0)
    m.node_limit = _num(bud.get("node_limit", 100_000), "budgets.node_limit", 1, int)
    if raw.get("big_m") is not None:
        m.big_m = _num(raw["big_m"], "big_m", 0)
    m.heuristic = bool(raw.get("heuristic", True))
    m.seed = _num(raw.get("seed", 0), "seed", 0, int)
    m.output = rel(raw.get("output", "out"))
    m.parallelism = _num(raw.get("parallelism", 1), "parallelism", 1, int)
    return m


def load_inputs(m: RunManifest):
    """Hub topology and scenario set named by a manifest."""
    try:
        spec = load_hub(m.hub)
        topo = build_topology(spec)
    except HubSpecError as exc:
        raise DataError(exc.problems)
    except OSError as exc:
        raise DataError([f"{m.hub}: {exc.strerror}"])
    problems = validate_topology(topo)
    if problems:
        raise DataError(problems)
    try:
        if m.scenarios is not None:
            scen = scenarios_from_csv(m.scenarios.read_text(encoding="utf-8"), m.dt, m.discount_rate)
        else:
            series = load_series(m.series, m.dt, m.expected_days)
            scen = reduce_days(series, m.reduce_k, m.seed, m.discount_rate)
    except SeriesError as exc:
        raise DataError(exc.problems)
    except OSError as exc:
        raise DataError([str(exc)])
    if m.years > 1 or m.fuel_growth or m.demand_growth:
        scen = grow_years(scen, m.fuel_growth, m.demand_growth, m.years)
    scen = scen.with_energies(topo.energies)
    problems = check_scenarios(topo, scen)
    if problems:
        raise DataError(problems)
    return topo, scen


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

_write_lock = threading.Lock()


def _write(path: Path, text: str) -> None:
    with _write_lock:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")


def _money(v: float) -> str:
    return f"{v:,.1f}" if math.isfinite(v) else "n/a"


def summary_text(res: FrameworkResult, topo, scen, manifest: RunManifest | None = None) -> str:
    spec = topo.spec
    lines = [f"framework: {res.framework}", f"status: {res.status}"]
    if manifest is not None:
        lines.append(f"seed: {manifest.seed}")
    if res.emission_cap is not None:
        lines.append(f"emission cap: {res.emission_cap:,.4f} t/yr")
    if res.plan is None:
        lines.append(f"no plan: {res.message}")
        return "\n".join(lines) + "\n"
    lines += [
        f"plan: {res.plan.describe(spec)}",
        f"total cost: {_money(res.total)} ¥",
        f"investment: {_money(res.investment)} ¥",
        f"net operating cost (NPV): {_money(res.net_operate)} ¥",
        f"max annual emissions: {res.achieved_emissions:,.4f} t",
    ]
    if res.carbon_price is not None:
        label = "tax rate" if res.framework == "F2" else "carbon price"
        lines.append(f"{label}: {res.carbon_price:,.4f} ¥/t")
    lines.append(f"gap: {res.gap:.3g}" if math.isfinite(res.gap) else "gap: n/a")
    lines.append(f"verified: {'yes' if res.verified else 'no'}")
    if res.message:
        lines.append(f"note: {res.message}")
    dims = topo.dims()
    dims.update(S=scen.S, T=scen.T, Y=scen.Y)
    cx = count_complexity(dims)
    lines.append(f"complexity, strong-duality model formula: integer {cx.integer}, binary {cx.binary}, "
                 f"continuous {cx.continuous}, constraints {cx.constraints}")
    if res.complexity is not None:
        c = res.complexity
        lines.append(f"complexity, built model (per-period groups): integer {c.integer}, binary {c.binary}, "
                     f"continuous {c.continuous}, constraints {c.constraints}")
    return "\n".join(lines) + "\n"


def cost_table(rows: list[tuple[str, FrameworkResult]]) -> str:
    """Plain-text cost breakdown: target, total, investment, net operational."""
    head = f"{'target':>14} {'total':>16} {'investment':>16} {'net operational':>16}"
    out = [head, "-" * len(head)]
    for label, r in rows:
        out.append(f"{label:>14} {_money(r.total):>16} {_money(r.investment):>16} "
                   f"{_money(r.net_operate):>16}")
    return "\n".join(out) + "\n"


def _cap_for(m: RunManifest, topo, scen) -> float | None:
    if m.reduction_pct is None:
        return m.emission_cap
    base = solve_f1(topo, scen, m.econ(None))
    if base.plan is None:
        raise FrameworkError(f"baseline failed: {base.status}")
    return base.achieved_emissions * (1.0 - m.reduction_pct / 100.0)


def _budget_hit(res: FrameworkResult) -> bool:
    return res.status.startswith(("node_limit", "time_limit", "iteration_limit"))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_validate(args) -> int:
    problems = []
    try:
        spec = load_hub(args.hub)
        topo = build_topology(spec)
        problems += validate_topology(topo)
    except HubSpecError as exc:
        problems += exc.problems
        topo = None
    except OSError as exc:
        problems.append(f"{args.hub}: {exc.strerror}")
        topo = None
    series = _parse_series(args.series)
    if series:
        try:
            ys = load_series(series, args.dt, None if args.expected_days == 0 else args.expected_days)
            problems += ys.problems()
        except SeriesError as exc:
            problems += exc.problems
    if args.scenarios:
        try:
            scen = scenarios_from_csv(Path(args.scenarios).read_text(encoding="utf-8"), args.dt)
            if topo is not None:
                problems += check_scenarios(topo, scen.with_energies(topo.energies))
        except (SeriesError, OSError) as exc:
            problems += getattr(exc, "problems", [str(exc)])
    for p in problems:
        print(p)
    if not problems:
        print("ok")
    return EXIT_DATA if problems else EXIT_OK


def _parse_series(items) -> dict[str, Path]:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"--series expects ENERGY=PATH, got {item!r}")
        k, v = item.split("=", 1)
        out[k] = Path(v)
    return out


def cmd_reduce_days(args) -> int:
    series = _parse_series(args.series)
    if not series:
        raise UsageError("reduce-days needs at least one --series ENERGY=PATH")
    try:
        ys = load_series(series, args.dt, None if args.expected_days == 0 else args.expected_days)
        scen = reduce_days(ys, args.k, args.seed)
    except SeriesError as exc:
        raise DataError(exc.problems)
    _write(Path(args.out), scenarios_to_csv(scen))
    for s in range(scen.S):
        print(f"day {scen.source_days[s] + 1}: probability {scen.probabilities[s]}")
    return EXIT_OK


def cmd_solve(args) -> int:
    m = load_manifest(Path(args.manifest))
    if args.output:
        m.output = Path(args.output)
    topo, scen = load_inputs(m)
    if len(m.frameworks) != 1:
        raise UsageError("solve takes exactly one framework")
    cap = _cap_for(m, topo, scen)
    res = solve_framework(m.frameworks[0], topo, scen, m.econ(cap))
    write_result(m.output, res, topo, scen, m)
    print(summary_text(res, topo, scen, m), end="")
    if res.plan is None:
        return EXIT_BUDGET if _budget_hit(res) else EXIT_DATA
    return EXIT_BUDGET if _budget_hit(res) else EXIT_OK


def write_result(out: Path, res: FrameworkResult, topo, scen, m: RunManifest | None = None) -> None:
    doc = res.as_dict()
    doc["wall_time"] = None  # keep outputs byte-identical across runs
    if m is not None:
        doc["manifest"] = m.as_dict()
    _write(out / "result.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")
    _write(out / "summary.txt", summary_text(res, topo, scen, m))
    if res.plan is not None:
        if res.framework == "F1":
            ev = evaluate_plan(topo, scen, res.plan, emission_cap=res.emission_cap)
        elif res.framework == "F2":
            ev = evaluate_plan(topo, scen, res.plan, optimistic=True, tax_rate=res.carbon_price or 0.0)
        else:
            ev = evaluate_plan(topo, scen, res.plan, optimistic=True)
        if ev.feasible:
            _write(out / "dispatch.csv", dispatch_csv(topo, ev.operation))


def read_result(path: Path, topo, scen) -> FrameworkResult:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    doc.pop("manifest", None)
    return result_from_dict(doc, topo, scen)


def cmd_pareto(args) -> int:
    m = load_manifest(Path(args.manifest))
    if args.output:
        m.output = Path(args.output)
    if args.resolution is not None:
        m.resolution = args.resolution
    topo, scen = load_inputs(m)
    frontiers = {}
    budget = False
    for fw in m.frameworks:
        pts = pareto_sweep(fw, topo, scen, m.resolution, m.econ(None), m.parallelism)
        frontiers[fw] = pts
        _write(m.output / f"frontier_{fw}.csv", frontier_csv(pts))
        budget |= any(p.result is not None and _budget_hit(p.result) for p in pts)
        rows = [(f"{p.target:,.2f}", p.result) for p in pts if p.result is not None]
        print(f"{fw}:")
        print(cost_table(rows), end="")
    if len(frontiers) > 1:
        _write(m.output / "frontier_combined.csv", combined_csv(frontiers))
    return EXIT_BUDGET if budget else EXIT_OK


def cmd_report(args) -> int:
    m = load_manifest(Path(args.manifest))
    topo, scen = load_inputs(m)
    rows = []
    for p in args.results:
        res = read_result(Path(p), topo, scen)
        label = f"{res.emission_cap:,.2f}" if res.emission_cap is not None else "baseline"
        rows.append((label, res))
    print(cost_table(rows), end="")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hubplan", description="Low-carbon energy hub planning.",
                allow_abbrev=False)
    p.add_argument("--version", action="version", version=f"hubplan {__version__}")
    p.add_argument("--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    v = sub.add_parser("validate", help="check a hub file and time series", allow_abbrev=False)
    v.add_argument("--hub", required=True)
    v.add_argument("--series", action="append", metavar="ENERGY=PATH")
    v.add_argument("--scenarios")
    v.add_argument("--dt", type=float, default=1.0)
    v.add_argument("--expected-days", type=int, default=DAYS_PER_YEAR,
                   help="required day count per series (0 disables the check)")
    v.set_defaults(func=cmd_validate)

    r = sub.add_parser("reduce-days", help="cluster a year into representative days", allow_abbrev=False)
    r.add_argument("--series", action="append", metavar="ENERGY=PATH", required=True)
    r.add_argument("--k", type=int, default=10)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--dt", type=float, default=1.0)
    r.add_argument("--expected-days", type=int, default=DAYS_PER_YEAR)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_reduce_days)

    s = sub.add_parser("solve", help="solve one framework", allow_abbrev=False)
    s.add_argument("--manifest", required=True)
    s.add_argument("--output")
    s.set_defaults(func=cmd_solve)

    pa = sub.add_parser("pareto", help="sweep emission targets", allow_abbrev=False)
    pa.add_argument("--manifest", required=True)
    pa.add_argument("--output")
    pa.add_argument("--resolution", type=int)
    pa.set_defaults(func=cmd_pareto)

    rp = sub.add_parser("report", help="cost breakdown table from result files", allow_abbrev=False)
    rp.add_argument("--manifest", required=True)
    rp.add_argument("results", nargs="+")
    rp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        for p in exc.problems:
            print(p, file=sys.stderr)
        return EXIT_DATA
    except FrameworkError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
