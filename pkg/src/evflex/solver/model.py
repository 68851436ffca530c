"""Solver-agnostic MILP container (minimization)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

LE, EQ, GE = "<=", "=", ">="
SENSES = (LE, EQ, GE)


@dataclass
class Row:
    cols: np.ndarray
    vals: np.ndarray
    sense: str
    rhs: float
    tag: str = "c"


@dataclass
class MipModel:
    """Variables with bounds and binary flags, sparse rows, linear objective.

    Built incrementally with :meth:`add_var` / :meth:`add_row`; the objective
    may carry a constant term (``obj_const``).
    """

    lo: List[float] = field(default_factory=list)
    hi: List[float] = field(default_factory=list)
    binary: List[bool] = field(default_factory=list)
    obj: List[float] = field(default_factory=list)
    rows: List[Row] = field(default_factory=list)
    names: List[str] = field(default_factory=list)
    obj_const: float = 0.0

    @property
    def n_vars(self) -> int:
        return len(self.lo)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def binaries(self) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.binary, dtype=bool))

    def add_var(self, lo: float = 0.0, hi: float = math.inf, obj: float = 0.0,
                binary: bool = False, name: Optional[str] = None) -> int:
        if binary:
            lo, hi = max(lo, 0.0), min(hi, 1.0)
        if lo > hi:
            raise ValueError(f"empty bounds [{lo}, {hi}]")
        self.lo.append(float(lo))
        self.hi.append(float(hi))
        self.binary.append(bool(binary))
        self.obj.append(float(obj))
        self.names.append(name or f"x{len(self.names)}")
        return len(self.lo) - 1

    def add_row(self, coefs: Dict[int, float] | Sequence[Tuple[int, float]],
                sense: str, rhs: float, tag: str = "c") -> int:
        if sense not in SENSES:
            raise ValueError(f"unknown sense {sense!r}")
        items = coefs.items() if isinstance(coefs, dict) else coefs
        merged: Dict[int, float] = {}
        for j, v in items:
            if not 0 <= j < self.n_vars:
                raise IndexError(f"row references unknown variable {j}")
            merged[j] = merged.get(j, 0.0) + float(v)
        cols = np.fromiter(merged.keys(), dtype=np.int64, count=len(merged))
        vals = np.fromiter(merged.values(), dtype=float, count=len(merged))
        if not np.all(np.isfinite(vals)) or not math.isfinite(rhs):
            raise ValueError("non-finite coefficient")
        self.rows.append(Row(cols, vals, sense, float(rhs), tag))
        return len(self.rows) - 1

    def add_obj(self, j: int, coef: float) -> None:
        self.obj[j] += coef

    def row_matrix(self) -> sp.csr_matrix:
        indptr = [0]
        indices: List[np.ndarray] = []
        data: List[np.ndarray] = []
        for r in self.rows:
            indices.append(r.cols)
            data.append(r.vals)
            indptr.append(indptr[-1] + len(r.cols))
        if self.rows:
            ind = np.concatenate(indices)
            dat = np.concatenate(data)
        else:
            ind = np.zeros(0, dtype=np.int64)
            dat = np.zeros(0)
        return sp.csr_matrix((dat, ind, np.asarray(indptr)),
                             shape=(self.n_rows, self.n_vars))

    def arrays(self):
        """Return (c, A, senses, rhs, lo, hi) with A as CSR."""
        return (np.asarray(self.obj, dtype=float), self.row_matrix(),
                np.array([r.sense for r in self.rows], dtype=object),
                np.array([r.rhs for r in self.rows], dtype=float),
                np.asarray(self.lo, dtype=float), np.asarray(self.hi, dtype=float))

    def objective_value(self, x) -> float:
        return float(np.dot(self.obj, x)) + self.obj_const

    def violations(self, x, tol: float = 1e-7) -> List[Tuple[int, str, float]]:
        """Rows and bounds violated by ``x`` beyond ``tol``: (index, tag, amount)."""
        x = np.asarray(x, dtype=float)
        out = []
        if self.rows:
            act = self.row_matrix() @ x
            for i, r in enumerate(self.rows):
                scale = max(1.0, abs(r.rhs))
                if r.sense == LE:
                    viol = act[i] - r.rhs
                elif r.sense == GE:
                    viol = r.rhs - act[i]
                else:
                    viol = abs(act[i] - r.rhs)
                if viol > tol * scale:
                    out.append((i, r.tag, float(viol)))
        lo, hi = np.asarray(self.lo), np.asarray(self.hi)
        for j in np.flatnonzero((x < lo - tol) | (x > hi + tol)):
            out.append((int(j), "bound", float(max(lo[j] - x[j], x[j] - hi[j]))))
        return out

    def tag_counts(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for r in self.rows:
            counts[r.tag] = counts.get(r.tag, 0) + 1
        return counts


@dataclass(frozen=True)
class SolveOptions:
    feasibility_tol: float = 1e-7
    integrality_tol: float = 1e-6
    rel_gap: float = 1e-6
    node_limit: Optional[int] = None
    time_limit_seconds: Optional[float] = None
    lp_backend: str = "auto"   # "auto", "simplex" or "highs"

    def __post_init__(self):
        for name in ("feasibility_tol", "integrality_tol", "rel_gap"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.lp_backend not in ("auto", "simplex", "highs"):
            raise ValueError(f"unknown LP backend {self.lp_backend!r}")


OPTIMAL = "optimal"
GAP_REACHED = "gap_reached"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
LIMIT = "limit"


@dataclass
class SolveResult:
    status: str
    x: Optional[np.ndarray] = None
    objective: float = math.nan
    best_bound: float = math.nan
    nodes: int = 0
    lp_solves: int = 0

    @property
    def gap(self) -> float:
        if self.x is None:
            return math.inf
        return abs(self.objective - self.best_bound) / max(1.0, abs(self.objective))

    @property
    def has_solution(self) -> bool:
        return self.x is not None


def relaxed(model: MipModel) -> MipModel:
    """Copy of ``model`` with binary flags dropped (bounds kept at [0, 1])."""
    return MipModel(lo=list(model.lo), hi=list(model.hi),
                    binary=[False] * model.n_vars, obj=list(model.obj),
                    rows=list(model.rows), names=list(model.names),
                    obj_const=model.obj_const)
