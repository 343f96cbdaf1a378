"""Model container for linear and mixed-integer programs.

Variables and rows are appended imperatively; ``Model.arrays()`` assembles the
dense matrices the simplex works on.  Everything is minimisation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

INF = np.inf

CONTINUOUS = "C"
BINARY = "B"
INTEGER = "I"
_KINDS = (CONTINUOUS, BINARY, INTEGER)
_SENSES = ("<=", ">=", "==")


class LinExpr:
    """Sparse affine expression ``sum(coef * var) + constant`` over variable ids."""

    __slots__ = ("terms", "constant")

    def __init__(self, terms: Mapping[int, float] | None = None, constant: float = 0.0):
        self.terms: dict[int, float] = dict(terms) if terms else {}
        self.constant = float(constant)

    @classmethod
    def of(cls, value) -> "LinExpr":
        if isinstance(value, LinExpr):
            return value
        return cls(constant=float(value))

    def copy(self) -> "LinExpr":
        return LinExpr(self.terms, self.constant)

    def add_term(self, var: int, coef: float) -> "LinExpr":
        if coef != 0.0:
            self.terms[var] = self.terms.get(var, 0.0) + coef
        return self

    def iadd(self, other, scale: float = 1.0) -> "LinExpr":
        if isinstance(other, LinExpr):
            for v, c in other.terms.items():
                self.add_term(v, scale * c)
            self.constant += scale * other.constant
        else:
            self.constant += scale * float(other)
        return self

    def __add__(self, other):
        return self.copy().iadd(other)

    __radd__ = __add__

    def __sub__(self, other):
        return self.copy().iadd(other, -1.0)

    def __rsub__(self, other):
        return LinExpr.of(other).copy().iadd(self, -1.0)

    def __mul__(self, k: float):
        return LinExpr({v: c * k for v, c in self.terms.items()}, self.constant * k)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def value(self, x: np.ndarray) -> float:
        return self.constant + sum(c * x[v] for v, c in self.terms.items())

    def __repr__(self) -> str:
        parts = [f"{c:+g}*x{v}" for v, c in sorted(self.terms.items())]
        return f"LinExpr({' '.join(parts)} {self.constant:+g})"


def var(index: int, coef: float = 1.0) -> LinExpr:
    return LinExpr({index: coef})


class Model:
    """A linear model under construction.

    Variables are integer ids in creation order.  Rows keep an optional group
    label so formulation code can tally blocks (see ``count_groups``).
    """

    def __init__(self, name: str = "model"):
        self.name = name
        self.var_names: list[str] = []
        self.lb: list[float] = []
        self.ub: list[float] = []
        self.kinds: list[str] = []
        self.var_group: list[str | None] = []
        self.row_cols: list[np.ndarray] = []
        self.row_vals: list[np.ndarray] = []
        self.senses: list[str] = []
        self.rhs: list[float] = []
        self.row_names: list[str] = []
        self.row_group: list[str | None] = []
        self.objective = LinExpr()
        self._cache: dict = {}

    # -- construction -----------------------------------------------------
    @property
    def num_vars(self) -> int:
        return len(self.var_names)

    @property
    def num_rows(self) -> int:
        return len(self.senses)

    def add_var(self, name: str = "", lb: float = 0.0, ub: float = INF,
                kind: str = CONTINUOUS, group: str | None = None) -> int:
        if kind not in _KINDS:
            raise ValueError(f"unknown variable kind {kind!r}")
        if kind == BINARY:
            lb, ub = max(0.0, lb), min(1.0, ub)
        if lb > ub:
            raise ValueError(f"variable {name!r}: lb {lb} > ub {ub}")
        self._cache.clear()
        self.var_names.append(name or f"x{len(self.var_names)}")
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        self.kinds.append(kind)
        self.var_group.append(group)
        return len(self.var_names) - 1

    def add_constr(self, lhs, sense: str, rhs=0.0, name: str = "",
                   group: str | None = None) -> int:
        """Add ``lhs sense rhs``; either side may be a LinExpr or a number."""
        if sense not in _SENSES:
            raise ValueError(f"unknown sense {sense!r}")
        expr = LinExpr.of(lhs) - LinExpr.of(rhs)
        cols = np.fromiter(expr.terms.keys(), dtype=np.int64, count=len(expr.terms))
        vals = np.fromiter(expr.terms.values(), dtype=float, count=len(expr.terms))
        if cols.size and (cols.min() < 0 or cols.max() >= self.num_vars):
            raise ValueError(f"row {name!r} references an undeclared variable")
        if not np.all(np.isfinite(vals)) or not np.isfinite(expr.constant):
            raise ValueError(f"row {name!r} has non-finite coefficients")
        self._cache.clear()
        self.row_cols.append(cols)
        self.row_vals.append(vals)
        self.senses.append(sense)
        self.rhs.append(-expr.constant)
        self.row_names.append(name or f"r{len(self.senses)}")
        self.row_group.append(group)
        return len(self.senses) - 1

    def set_objective(self, expr) -> None:
        self._cache.clear()
        self.objective = LinExpr.of(expr).copy()

    # -- views --------------------------------------------------------------
    def integer_mask(self) -> np.ndarray:
        return np.array([k != CONTINUOUS for k in self.kinds], dtype=bool)

    def arrays(self):
        """Dense ``(A, senses, b, c, c0, lb, ub)``."""
        if "arrays" not in self._cache:
            m, n = self.num_rows, self.num_vars
            A = np.zeros((m, n))
            for i, (cols, vals) in enumerate(zip(self.row_cols, self.row_vals)):
                np.add.at(A[i], cols, vals)
            c = np.zeros(n)
            for v, coef in self.objective.terms.items():
                c[v] += coef
            self._cache["arrays"] = (
                A,
                np.array(self.senses, dtype=object),
                np.array(self.rhs, dtype=float),
                c,
                self.objective.constant,
                np.array(self.lb, dtype=float),
                np.array(self.ub, dtype=float),
            )
        return self._cache["arrays"]

    def row_activity(self, x: np.ndarray) -> np.ndarray:
        A = self.arrays()[0]
        return A @ x

    def max_violation(self, x: np.ndarray, scaled: bool = True) -> float:
        """Largest bound or row violation at ``x`` (rows scaled to max-abs 1)."""
        A, senses, b, _, _, lb, ub = self.arrays()
        viol = 0.0
        if x.size:
            viol = max(float(np.max(lb - x, initial=0.0)), float(np.max(x - ub, initial=0.0)))
        if A.shape[0]:
            act = A @ x
            scale = np.ones_like(b)
            if scaled:
                scale = np.maximum(np.abs(A).max(axis=1, initial=0.0), 1e-300)
                scale[scale == 1e-300] = 1.0
            le = senses == "<="
            ge = senses == ">="
            eq = senses == "=="
            r = np.zeros_like(b)
            r[le] = np.maximum(act[le] - b[le], 0.0)
            r[ge] = np.maximum(b[ge] - act[ge], 0.0)
            r[eq] = np.abs(act[eq] - b[eq])
            viol = max(viol, float(np.max(r / scale, initial=0.0)))
        return viol

    def objective_value(self, x: np.ndarray) -> float:
        return self.objective.value(x)

    def count_groups(self) -> tuple[dict[str, dict[str, int]], dict[str, int]]:
        """Per-group variable tallies by kind, and per-group row counts."""
        vars_by: dict[str, dict[str, int]] = {}
        for g, k in zip(self.var_group, self.kinds):
            key = g or ""
            vars_by.setdefault(key, {CONTINUOUS: 0, BINARY: 0, INTEGER: 0})[k] += 1
        rows_by: dict[str, int] = {}
        for g in self.row_group:
            rows_by[g or ""] = rows_by.get(g or "", 0) + 1
        return vars_by, rows_by

    def copy(self) -> "Model":
        other = Model(self.name)
        for attr in ("var_names", "lb", "ub", "kinds", "var_group", "row_cols", "row_vals",
                     "senses", "rhs", "row_names", "row_group"):
            setattr(other, attr, list(getattr(self, attr)))
        other.objective = self.objective.copy()
        return other


@dataclass
class Basis:
    """Simplex basis over ``[structural | slack]`` columns."""

    basic: np.ndarray
    status: np.ndarray


@dataclass
class LpSolution:
    status: str
    x: np.ndarray | None = None
    objective: float = float("nan")
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    basis: Basis | None = None
    farkas: np.ndarray | None = None
    ray: np.ndarray | None = None
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


@dataclass
class MilpSolution:
    status: str
    x: np.ndarray | None = None
    objective: float = float("inf")
    bound: float = -float("inf")
    nodes: int = 0
    trajectory: list[tuple[int, float, float]] = field(default_factory=list)
    warm_start_log: list[str] = field(default_factory=list)
    heuristic_calls: int = 0
    heuristic_improvements: int = 0
    hook_rejections: list[str] = field(default_factory=list)

    @property
    def gap(self) -> float:
        if self.x is None or not np.isfinite(self.objective):
            return float("inf")
        return max(0.0, (self.objective - self.bound) / max(1.0, abs(self.objective)))

    @property
    def has_solution(self) -> bool:
        return self.x is not None


def expr_sum(items: Iterable[LinExpr]) -> LinExpr:
    out = LinExpr()
    for it in items:
        out.iadd(it)
    return out
