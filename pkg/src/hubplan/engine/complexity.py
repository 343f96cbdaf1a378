"""Size accounting for the single-level planning models.

``count_complexity`` evaluates the closed-form size expressions in terms of
set cardinalities.  ``tally_model`` counts what was actually built, using the
variable and row group labels set by the formulation code.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .model import BINARY, CONTINUOUS, INTEGER, Model

DIM_KEYS = ("S", "T", "Y", "L", "M", "P_out", "G_C", "G_S", "N_A", "N_B", "N_C", "N_D")

# per-period blocks whose sizes scale with S*T*Y
PER_PERIOD_GROUPS = ("primal", "dual", "product")


@dataclass(frozen=True)
class ComplexityCounts:
    integer: int
    binary: int
    continuous: int
    constraints: int

    def __post_init__(self):
        for k in ("integer", "binary", "continuous", "constraints"):
            if getattr(self, k) < 0:
                raise ValueError(f"{k} count is negative")

    def as_dict(self) -> dict[str, int]:
        return {"integer": self.integer, "binary": self.binary,
                "continuous": self.continuous, "constraints": self.constraints}


def count_complexity(dims: Mapping[str, int]) -> ComplexityCounts:
    """Closed-form variable and constraint counts.

    ``dims`` keys: S, T, Y, L, M, P_out, G_C, G_S, N_A, N_B, N_C, N_D.  Missing
    keys count as zero.
    """
    d = {k: int(dims.get(k, 0)) for k in DIM_KEYS}
    bad = [k for k, v in d.items() if v < 0]
    if bad:
        raise ValueError(f"negative dimensions: {bad}")
    unknown = set(dims) - set(DIM_KEYS)
    if unknown:
        raise ValueError(f"unknown dimension keys: {sorted(unknown)}")
    S, T, Y, L, M = d["S"], d["T"], d["Y"], d["L"], d["M"]
    P, GC, GS = d["P_out"], d["G_C"], d["G_S"]
    NA, NB, NC, ND = d["N_A"], d["N_B"], d["N_C"], d["N_D"]
    sty = S * T * Y
    base = 2 * L + 6 * GS + 5 * M + P + GC
    return ComplexityCounts(
        integer=M + 2 * GS + GC,
        binary=NA * M + GS * (NB + NC) + ND * GC,
        continuous=sty * (base + 2 * M * NA + 2 * GS * (NB + NC) + GC * ND),
        constraints=sty * (base + 6 * M * NA + 6 * GS * (NB + NC) + 3 * GC * ND),
    )


def tally_model(model: Model, groups=PER_PERIOD_GROUPS) -> ComplexityCounts:
    """Count integer and binary variables model-wide, continuous variables
    and rows only within ``groups``."""
    vars_by, rows_by = model.count_groups()
    integer = sum(v[INTEGER] for v in vars_by.values())
    binary = sum(v[BINARY] for v in vars_by.values())
    continuous = sum(vars_by.get(g, {}).get(CONTINUOUS, 0) for g in groups)
    constraints = sum(rows_by.get(g, 0) for g in groups)
    return ComplexityCounts(integer, binary, continuous, constraints)
