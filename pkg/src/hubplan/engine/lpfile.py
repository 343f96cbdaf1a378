"""Plain-text model dump in a CPLEX-LP-like layout.

Grammar (one item per line, names have whitespace replaced by ``_``)::

    \\ <comment>
    Minimize
     obj: <terms> [<constant>]
    Subject To
     <row name>: <terms> <= | >= | = <rhs>
    Bounds
     <lb> <= <var> <= <ub>        (infinite sides written as -inf / inf)
     <var> free
     <var> = <value>              (fixed)
    Generals
     <var> ...
    Binaries
     <var> ...
    End

``<terms>`` is a sequence of ``+c name`` / ``-c name`` with coefficients in
``repr`` precision, so a dump can be diffed across runs.
"""

from __future__ import annotations

import io
import math
from pathlib import Path

from .model import BINARY, INTEGER, Model


def _name(s: str) -> str:
    return "_".join(s.split()) or "_"


def _num(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(float(v))


def _terms(pairs, names) -> str:
    out = []
    for j, c in pairs:
        sign = "-" if c < 0 else "+"
        out.append(f"{sign}{_num(abs(c))} {names[j]}")
    return " ".join(out) if out else "0"


def format_lp(model: Model) -> str:
    names = [_name(n) for n in model.var_names]
    buf = io.StringIO()
    buf.write(f"\\ {_name(model.name)}: {model.num_vars} variables, {model.num_rows} rows\n")
    buf.write("Minimize\n")
    obj = _terms(sorted(model.objective.terms.items()), names)
    if model.objective.constant:
        obj += f" {'+' if model.objective.constant >= 0 else '-'}{_num(abs(model.objective.constant))}"
    buf.write(f" obj: {obj}\n")
    buf.write("Subject To\n")
    sense_txt = {"<=": "<=", ">=": ">=", "==": "="}
    for i in range(model.num_rows):
        pairs = zip(model.row_cols[i].tolist(), model.row_vals[i].tolist())
        buf.write(f" {_name(model.row_names[i])}: {_terms(pairs, names)} "
                  f"{sense_txt[model.senses[i]]} {_num(model.rhs[i])}\n")
    buf.write("Bounds\n")
    for j, nm in enumerate(names):
        lo, hi = model.lb[j], model.ub[j]
        if lo == hi:
            buf.write(f" {nm} = {_num(lo)}\n")
        elif math.isinf(lo) and math.isinf(hi):
            buf.write(f" {nm} free\n")
        else:
            buf.write(f" {_num(lo)} <= {nm} <= {_num(hi)}\n")
    for title, kind in (("Generals", INTEGER), ("Binaries", BINARY)):
        chosen = [nm for nm, k in zip(names, model.kinds) if k == kind]
        if chosen:
            buf.write(f"{title}\n")
            for nm in chosen:
                buf.write(f" {nm}\n")
    buf.write("End\n")
    return buf.getvalue()


def write_lp(model: Model, path) -> Path:
    path = Path(path)
    path.write_text(format_lp(model))
    return path
