"""LP relaxations of a MipModel with interchangeable backends."""
from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from ..exceptions import NumericalBreakdown
from .model import (EQ, GE, INFEASIBLE, LE, OPTIMAL, UNBOUNDED, MipModel,
                    SolveOptions, SolveResult)
from .simplex import simplex_solve

# The dense simplex is only used when the tableau stays small.
DENSE_LIMIT = 250


class LPRelaxation:
    """Pre-split constraint data so repeated solves only change bounds."""

    def __init__(self, model: MipModel, opts: SolveOptions = SolveOptions()):
        self.model = model
        self.opts = opts
        c, A, senses, rhs, lo, hi = model.arrays()
        self.c, self.A, self.senses, self.rhs = c, A, senses, rhs
        self.lo, self.hi = lo, hi
        le = senses == LE
        ge = senses == GE
        eq = senses == EQ
        ub_idx = np.flatnonzero(le | ge)
        sign = np.where(ge[ub_idx], -1.0, 1.0)
        self.A_ub = sp.diags(sign) @ A[ub_idx] if ub_idx.size else None
        self.b_ub = sign * rhs[ub_idx] if ub_idx.size else None
        eq_idx = np.flatnonzero(eq)
        self.A_eq = A[eq_idx] if eq_idx.size else None
        self.b_eq = rhs[eq_idx] if eq_idx.size else None
        backend = opts.lp_backend
        if backend == "auto":
            small = model.n_vars <= DENSE_LIMIT and model.n_rows <= DENSE_LIMIT
            backend = "simplex" if small else "highs"
        self.backend = backend
        self._dense = A.toarray() if backend == "simplex" else None
        self.solves = 0

    def solve(self, lo=None, hi=None) -> SolveResult:
        lo = self.lo if lo is None else lo
        hi = self.hi if hi is None else hi
        self.solves += 1
        if np.any(lo > hi):
            return SolveResult(INFEASIBLE, lp_solves=1)
        if self.backend == "simplex":
            res = self._solve_simplex(lo, hi)
        else:
            res = self._solve_highs(lo, hi)
        res.lp_solves = 1
        return res

    def _solve_simplex(self, lo, hi):
        status, x, obj, dual = simplex_solve(
            self.c, self._dense, list(self.senses), self.rhs, lo, hi,
            tol=min(1e-9, self.opts.feasibility_tol))
        if status != OPTIMAL:
            return SolveResult(status)
        const = self.model.obj_const
        return SolveResult(OPTIMAL, x=x, objective=obj + const, best_bound=dual + const)

    def _solve_highs(self, lo, hi):
        bounds = np.column_stack([np.where(np.isfinite(lo), lo, -np.inf),
                                  np.where(np.isfinite(hi), hi, np.inf)])
        tol = self.opts.feasibility_tol
        res = linprog(self.c, A_ub=self.A_ub, b_ub=self.b_ub, A_eq=self.A_eq,
                      b_eq=self.b_eq, bounds=bounds, method="highs-ds",
                      options={"primal_feasibility_tolerance": min(tol, 1e-9),
                               "dual_feasibility_tolerance": min(tol, 1e-9)})
        if res.status == 2:
            return SolveResult(INFEASIBLE)
        if res.status == 3:
            return SolveResult(UNBOUNDED)
        if res.status != 0:
            raise NumericalBreakdown(f"HiGHS failed: {res.message}")
        const = self.model.obj_const
        dual = 0.0
        if self.b_ub is not None:
            dual += float(self.b_ub @ res.ineqlin.marginals)
        if self.b_eq is not None:
            dual += float(self.b_eq @ res.eqlin.marginals)
        for bnd, marg in ((lo, res.lower.marginals), (hi, res.upper.marginals)):
            fin = np.isfinite(bnd)
            dual += float(bnd[fin] @ marg[fin])
        return SolveResult(OPTIMAL, x=np.asarray(res.x), objective=float(res.fun) + const,
                           best_bound=dual + const)


def solve_lp(model: MipModel, opts: SolveOptions = SolveOptions()) -> SolveResult:
    """Solve the LP relaxation of ``model`` (binary flags ignored)."""
    return LPRelaxation(model, opts).solve()
