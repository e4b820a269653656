"""Writers for the CPLEX LP and free MPS text formats.

Names are mapped to identifiers legal in both formats: characters outside
``[A-Za-z0-9_.()]`` become ``_`` and a leading digit or period is prefixed
with ``_``.  Collisions created by the mapping get a numeric suffix, so the
mapping is always injective.
"""

from __future__ import annotations

import math
import re
from pathlib import Path

from .model import MilpModel, Sense, VarKind

_ILLEGAL = re.compile(r"[^A-Za-z0-9_.()]")
_TERMS_PER_LINE = 6


def safe_names(names: list[str]) -> list[str]:
    out = []
    seen: set[str] = set()
    for raw in names:
        name = _ILLEGAL.sub("_", raw) or "_"
        if name[0].isdigit() or name[0] == "." or name[0] in "eE" and len(name) > 1 and name[1].isdigit():
            name = "_" + name
        base, k = name, 1
        while name in seen:
            name = f"{base}_{k}"
            k += 1
        seen.add(name)
        out.append(name)
    return out


def _num(v: float) -> str:
    if v == 0:
        return "0"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(float(v))


def _lp_terms(coeffs: dict[int, float], vnames: list[str]) -> list[str]:
    terms = []
    for vid in sorted(coeffs):
        coef = coeffs[vid]
        sign = "-" if coef < 0 else "+"
        terms.append(f"{sign} {_num(abs(coef))} {vnames[vid]}")
    return terms


def _wrap(prefix: str, terms: list[str]) -> list[str]:
    lines = []
    for i in range(0, len(terms), _TERMS_PER_LINE):
        chunk = " ".join(terms[i : i + _TERMS_PER_LINE])
        lines.append((prefix if i == 0 else "   ") + chunk)
    return lines or [prefix.rstrip()]


def to_lp(model: MilpModel) -> str:
    vnames = safe_names([v.name for v in model.variables])
    cnames = safe_names([c.name for c in model.constraints])
    lines = [f"\\ Problem name: {model.name}", "Minimize"]
    obj_terms = _lp_terms(model.objective.coeffs, vnames)
    const = model.objective.constant
    if const != 0 or not obj_terms:
        obj_terms.append(f"{'-' if const < 0 else '+'} {_num(abs(const))}")
    lines += _wrap(" obj: ", obj_terms)
    lines.append("Subject To")
    ops = {Sense.LE: "<=", Sense.GE: ">=", Sense.EQ: "="}
    for c, cname in zip(model.constraints, cnames):
        terms = _lp_terms(c.coeffs, vnames)
        if not terms:
            terms = [f"0 {vnames[0]}"]
        block = _wrap(f" {cname}: ", terms)
        block[-1] += f" {ops[c.sense]} {_num(c.rhs)}"
        lines += block
    lines.append("Bounds")
    for v, name in zip(model.variables, vnames):
        lb, ub = v.lb, v.ub
        if v.kind is VarKind.BINARY and lb == 0 and ub == 1:
            continue
        if lb == ub:
            lines.append(f" {name} = {_num(lb)}")
        elif math.isinf(lb) and math.isinf(ub):
            lines.append(f" {name} free")
        elif lb == 0 and math.isinf(ub) and v.kind is VarKind.CONTINUOUS:
            continue
        else:
            lines.append(f" {_num(lb)} <= {name} <= {_num(ub)}")
    generals = [n for v, n in zip(model.variables, vnames) if v.kind is VarKind.INTEGER]
    binaries = [n for v, n in zip(model.variables, vnames) if v.kind is VarKind.BINARY]
    if generals:
        lines.append("Generals")
        lines += [" " + n for n in generals]
    if binaries:
        lines.append("Binaries")
        lines += [" " + n for n in binaries]
    lines.append("End")
    return "\n".join(lines) + "\n"


def to_mps(model: MilpModel) -> str:
    vnames = safe_names([v.name for v in model.variables])
    cnames = safe_names([c.name for c in model.constraints] + ["obj"])
    obj_name = cnames.pop()
    lines = [f"NAME {safe_names([model.name])[0]}", "ROWS", f" N {obj_name}"]
    tag = {Sense.LE: "L", Sense.GE: "G", Sense.EQ: "E"}
    for c, cname in zip(model.constraints, cnames):
        lines.append(f" {tag[c.sense]} {cname}")

    # column-major view of the rows
    cols: list[list[tuple[str, float]]] = [[] for _ in model.variables]
    for vid, coef in sorted(model.objective.coeffs.items()):
        if coef != 0:
            cols[vid].append((obj_name, coef))
    for c, cname in zip(model.constraints, cnames):
        for vid, coef in sorted(c.coeffs.items()):
            if coef != 0:
                cols[vid].append((cname, coef))

    lines.append("COLUMNS")
    in_int = False
    marker = 0
    for v, name in zip(model.variables, vnames):
        want_int = v.kind is not VarKind.CONTINUOUS
        if want_int and not in_int:
            lines.append(f" MARKER{marker} 'MARKER' 'INTORG'")
            in_int = True
        elif not want_int and in_int:
            lines.append(f" MARKER{marker} 'MARKER' 'INTEND'")
            marker += 1
            in_int = False
        entries = cols[v.id] or [(obj_name, 0.0)]
        for row, coef in entries:
            lines.append(f" {name} {row} {_num(coef)}")
    if in_int:
        lines.append(f" MARKER{marker} 'MARKER' 'INTEND'")

    lines.append("RHS")
    for c, cname in zip(model.constraints, cnames):
        if c.rhs != 0:
            lines.append(f" RHS {cname} {_num(c.rhs)}")
    if model.objective.constant != 0:
        # an objective-row RHS enters the objective with flipped sign
        lines.append(f" RHS {obj_name} {_num(-model.objective.constant)}")

    lines.append("BOUNDS")
    for v, name in zip(model.variables, vnames):
        lb, ub = v.lb, v.ub
        if v.kind is VarKind.BINARY and lb == 0 and ub == 1:
            lines.append(f" BV BND {name}")
        elif lb == ub:
            lines.append(f" FX BND {name} {_num(lb)}")
        elif math.isinf(lb) and math.isinf(ub):
            lines.append(f" FR BND {name}")
        else:
            if math.isinf(lb):
                lines.append(f" MI BND {name}")
            elif lb != 0 or v.kind is not VarKind.CONTINUOUS:
                lines.append(f" LO BND {name} {_num(lb)}")
            if math.isinf(ub):
                if v.kind is not VarKind.CONTINUOUS:
                    lines.append(f" PL BND {name}")
            else:
                lines.append(f" UP BND {name} {_num(ub)}")
    lines.append("ENDATA")
    return "\n".join(lines) + "\n"


def export_model(model: MilpModel, path: str | Path, fmt: str | None = None) -> Path:
    """Write ``model`` as LP or MPS text.  The format defaults to the file suffix."""
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".")).upper()
    if fmt == "LP":
        text = to_lp(model)
    elif fmt == "MPS":
        text = to_mps(model)
    else:
        raise ValueError(f"unsupported export format {fmt!r}; use LP or MPS")
    with open(path, "w", newline="\n") as fh:
        fh.write(text)
    return path
