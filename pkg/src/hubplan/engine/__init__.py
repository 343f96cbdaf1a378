"""Self-contained LP/MILP engine used by the planning frameworks."""

from ._kernels import BACKEND
from .model import (BINARY, CONTINUOUS, INF, INTEGER, Basis, LinExpr, LpSolution, MilpSolution,
                    Model, expr_sum, var)
from .simplex import SimplexError, farkas_gap, solve_lp, standard_form

__all__ = [
    "BACKEND", "BINARY", "CONTINUOUS", "INF", "INTEGER", "Basis", "LinExpr", "LpSolution",
    "MilpSolution", "Model", "SimplexError", "expr_sum", "farkas_gap", "solve_lp",
    "standard_form", "var",
]

from .milp import MilpOptions, enumerate_binary, solve_milp  # noqa: E402

__all__ += ["MilpOptions", "enumerate_binary", "solve_milp"]

from .complexity import ComplexityCounts, count_complexity, tally_model  # noqa: E402
from .lpfile import format_lp, write_lp  # noqa: E402

__all__ += ["ComplexityCounts", "count_complexity", "tally_model", "format_lp", "write_lp"]
