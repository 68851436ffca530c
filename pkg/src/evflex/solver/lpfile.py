"""CPLEX-style LP text format.

Variables are written as ``x<id>``; rows are named ``<tag>_<row index>``.
The objective constant, which not every reader accepts, is kept in a
comment line that :func:`read_lp_file` understands.
"""
from __future__ import annotations

import math
import re
from pathlib import Path

from .model import EQ, GE, LE, MipModel

_LINE = 78


def _num(v: float) -> str:
    return f"{v:.12g}"


def _terms(cols, vals):
    parts = []
    for j, v in zip(cols, vals):
        if v == 0:
            continue
        sign = "-" if v < 0 else "+"
        parts.append(f"{sign} {_num(abs(v))} x{int(j)}")
    return parts


def _wrap(head: str, parts) -> list:
    lines, cur = [], head
    for p in parts:
        if len(cur) + 1 + len(p) > _LINE and cur.strip():
            lines.append(cur)
            cur = "   "
        cur = f"{cur} {p}" if cur else p
    lines.append(cur)
    return lines


def format_lp(model: MipModel) -> str:
    out = []
    if model.obj_const:
        out.append(f"\\ objective constant: {_num(model.obj_const)}")
    out.append("Minimize")
    objcols = [j for j, v in enumerate(model.obj) if v != 0]
    out += _wrap(" obj:", _terms(objcols, [model.obj[j] for j in objcols]))
    out.append("Subject To")
    for i, r in enumerate(model.rows):
        parts = _terms(r.cols, r.vals) or ["0 x0"]
        parts.append(f"{r.sense} {_num(r.rhs)}")
        out += _wrap(f" {r.tag}_{i}:", parts)
    out.append("Bounds")
    for j in range(model.n_vars):
        lo, hi = model.lo[j], model.hi[j]
        if math.isinf(lo) and math.isinf(hi):
            out.append(f" x{j} free")
        elif math.isinf(hi):
            out.append(f" x{j} >= {_num(lo)}")
        elif math.isinf(lo):
            out.append(f" -inf <= x{j} <= {_num(hi)}")
        else:
            out.append(f" {_num(lo)} <= x{j} <= {_num(hi)}")
    bins = [j for j in range(model.n_vars) if model.binary[j]]
    if bins:
        out.append("Binary")
        out += _wrap("", [f"x{j}" for j in bins])
    out.append("End")
    return "\n".join(out) + "\n"


def export_lp_file(model: MipModel, path) -> None:
    Path(path).write_text(format_lp(model))


_TERM = re.compile(r"([+-])\s*([0-9.eE+-]+)\s+x(\d+)")
_SECTIONS = {"minimize": "obj", "subject to": "rows", "bounds": "bounds",
             "binary": "binary", "end": "end"}


def read_lp_file(path) -> MipModel:
    """Parse a file written by :func:`export_lp_file` back into a MipModel."""
    text = Path(path).read_text()
    const = 0.0
    section = None
    chunks = {"obj": [], "rows": [], "bounds": [], "binary": []}
    for raw in text.splitlines():
        line = raw.strip()
        if line.startswith("\\"):
            m = re.match(r"\\ objective constant:\s*(\S+)", line)
            if m:
                const = float(m.group(1))
            continue
        if line.lower() in _SECTIONS:
            section = _SECTIONS[line.lower()]
            continue
        if not line or section in (None, "end"):
            continue
        if raw.startswith("    ") and chunks[section]:
            chunks[section][-1] += " " + line
        else:
            chunks[section].append(line)

    rows = []
    nvar = 0
    for line in chunks["rows"]:
        name, body = line.split(":", 1)
        m = re.search(r"(<=|>=|=)\s*(\S+)\s*$", body)
        terms = [(int(j), (-1 if s == "-" else 1) * float(v))
                 for s, v, j in _TERM.findall(body[:m.start()])]
        nvar = max([nvar] + [j + 1 for j, _ in terms])
        rows.append((name.strip().rsplit("_", 1)[0], terms, m.group(1), float(m.group(2))))
    obj_terms = []
    for line in chunks["obj"]:
        body = line.split(":", 1)[1] if ":" in line else line
        obj_terms += [(int(j), (-1 if s == "-" else 1) * float(v))
                      for s, v, j in _TERM.findall(body)]
    bounds = {}
    for line in chunks["bounds"]:
        if line.endswith("free"):
            j = int(line.split()[0][1:])
            bounds[j] = (-math.inf, math.inf)
        elif line.startswith("x"):
            var, _, lo = line.split()
            bounds[int(var[1:])] = (float(lo), math.inf)
        else:
            lo, _, var, _, hi = line.split()
            bounds[int(var[1:])] = (float(lo), float(hi))
    bins = {int(tok[1:]) for line in chunks["binary"] for tok in line.split()}
    nvar = max([nvar] + [j + 1 for j in bounds] + [j + 1 for j, _ in obj_terms])

    model = MipModel(obj_const=const)
    for j in range(nvar):
        lo, hi = bounds.get(j, (0.0, math.inf))
        model.add_var(lo, hi, binary=j in bins)
    for j, v in obj_terms:
        model.add_obj(j, v)
    for tag, terms, sense, rhs in rows:
        model.add_row(terms, {"<=": LE, ">=": GE, "=": EQ}[sense], rhs, tag)
    return model
