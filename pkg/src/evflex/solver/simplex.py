"""Dense two-phase primal simplex for small LPs.

General bounds are folded into standard form (shifts, reflections, free-variable
splits and explicit upper-bound rows), so the tableau only ever sees ``y >= 0``.
Dantzig pricing is used until a run of degenerate pivots is seen, after which
Bland's rule takes over for the rest of the phase.
"""
from __future__ import annotations

import math

import numpy as np

from ..exceptions import NumericalBreakdown
from .model import EQ, GE, LE

DEGENERATE_LIMIT = 50


class _Tableau:
    def __init__(self, A, b, cost, basis, tol):
        m, n = A.shape
        self.T = np.hstack([A, b.reshape(-1, 1)])
        self.basis = list(basis)
        self.cost = cost
        self.tol = tol
        self.n = n

    def pivot(self, r, j):
        T = self.T
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        nz = np.flatnonzero(np.abs(col) > 0)
        if nz.size:
            T[nz] -= np.outer(col[nz], T[r])
        self.basis[r] = j

    def run(self, allowed, max_iter):
        """Minimize ``cost`` over the current basis; returns 'optimal' or 'unbounded'."""
        T, tol = self.T, self.tol
        bland = False
        degenerate = 0
        for _ in range(max_iter):
            cb = self.cost[self.basis]
            red = self.cost - cb @ T[:, :self.n]
            red[~allowed] = 0.0
            cand = np.flatnonzero(red < -tol)
            if cand.size == 0:
                return "optimal"
            j = int(cand[0]) if bland else int(cand[np.argmin(red[cand])])
            col = T[:, j]
            pos = np.flatnonzero(col > tol)
            if pos.size == 0:
                return "unbounded"
            ratios = T[pos, -1] / col[pos]
            best = ratios.min()
            ties = pos[ratios <= best + tol]
            # smallest basic variable index breaks ties (Bland's leaving rule)
            r = int(min(ties, key=lambda i: self.basis[i]))
            if best <= tol:
                degenerate += 1
                if degenerate > DEGENERATE_LIMIT:
                    bland = True
            else:
                degenerate = 0
            self.pivot(r, j)
        raise NumericalBreakdown("simplex iteration limit reached")


def _standard_form(c, A, senses, rhs, lo, hi):
    """Rewrite in terms of y >= 0 with x = shift + M @ y."""
    n = len(c)
    cols = []        # (original index, sign)
    shift = np.zeros(n)
    ub_rows = []     # (new column, bound)
    for j in range(n):
        l, u = lo[j], hi[j]
        if math.isfinite(l):
            shift[j] = l
            cols.append((j, 1.0))
            if math.isfinite(u):
                ub_rows.append((len(cols) - 1, u - l))
        elif math.isfinite(u):
            shift[j] = u
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    M = np.zeros((n, len(cols)))
    for k, (j, s) in enumerate(cols):
        M[j, k] = s
    A2 = A @ M
    b2 = rhs - A @ shift
    c2 = c @ M
    const = float(c @ shift)
    if ub_rows:
        U = np.zeros((len(ub_rows), len(cols)))
        for i, (k, _) in enumerate(ub_rows):
            U[i, k] = 1.0
        A2 = np.vstack([A2, U])
        b2 = np.concatenate([b2, [u for _, u in ub_rows]])
        senses = list(senses) + [LE] * len(ub_rows)
    return A2, b2, list(senses), c2, const, shift, M


def simplex_solve(c, A, senses, rhs, lo, hi, tol=1e-9, max_iter=None):
    """Solve ``min c@x`` subject to ``A x (senses) rhs`` and ``lo <= x <= hi``.

    ``A`` is dense.  Returns (status, x, objective, dual_objective) where
    status is 'optimal', 'infeasible' or 'unbounded'.
    """
    c = np.asarray(c, dtype=float)
    A = np.atleast_2d(np.asarray(A, dtype=float)).reshape(len(rhs), len(c))
    A2, b2, senses, c2, const, shift, M = _standard_form(
        c, A, senses, np.asarray(rhs, dtype=float), lo, hi)
    m, ny = A2.shape

    slack_cols = []
    for s in senses:
        slack_cols.append(0.0 if s == EQ else (1.0 if s == LE else -1.0))
    n_slack = sum(1 for s in senses if s != EQ)
    S = np.zeros((m, n_slack))
    k = 0
    slack_of = [-1] * m
    for i, s in enumerate(slack_cols):
        if s != 0.0:
            S[i, k] = s
            slack_of[i] = ny + k
            k += 1
    Astd = np.hstack([A2, S])
    bstd = b2.copy()
    flip = bstd < 0
    Astd[flip] *= -1
    bstd[flip] *= -1

    # Rows whose slack has +1 after flipping start with the slack basic.
    basis = [-1] * m
    for i in range(m):
        if slack_of[i] >= 0 and Astd[i, slack_of[i]] > 0:
            basis[i] = slack_of[i]
    art_rows = [i for i in range(m) if basis[i] < 0]
    nstd = Astd.shape[1]
    Afull = np.hstack([Astd, np.zeros((m, len(art_rows)))])
    for k, i in enumerate(art_rows):
        Afull[i, nstd + k] = 1.0
        basis[i] = nstd + k
    ntot = Afull.shape[1]
    max_iter = max_iter or 50 * (m + ntot + 10)

    is_art = np.zeros(ntot, dtype=bool)
    is_art[nstd:] = True
    tab = _Tableau(Afull.copy(), bstd.copy(), None, basis, tol)
    if art_rows:
        tab.cost = is_art.astype(float)
        tab.run(np.ones(ntot, dtype=bool), max_iter)
        infeas = float(tab.T[:, -1] @ tab.cost[tab.basis])
        if infeas > tol * max(1.0, float(np.abs(bstd).max(initial=0.0))) * 10:
            return "infeasible", None, math.nan, math.nan
        # drive remaining artificials out of the basis, dropping redundant rows
        keep = []
        for r in range(m):
            if is_art[tab.basis[r]]:
                row = tab.T[r, :nstd]
                nz = np.flatnonzero(np.abs(row) > 1e3 * tol)
                if nz.size:
                    tab.pivot(r, int(nz[np.argmax(np.abs(row[nz]))]))
                    keep.append(r)
            else:
                keep.append(r)
        tab.T = tab.T[keep]
        tab.basis = [tab.basis[r] for r in keep]
        Astd = Astd[keep]
        bstd = bstd[keep]
    allowed = ~is_art
    tab.cost = np.concatenate([c2, np.zeros(ntot - ny)])
    status = tab.run(allowed, max_iter)
    if status == "unbounded":
        return "unbounded", None, math.nan, math.nan

    y = np.zeros(ntot)
    y[tab.basis] = tab.T[:, -1]
    y = np.maximum(y[:ny], 0.0)
    x = shift + M @ y
    obj = float(c @ x)

    # dual prices from the final basis: B^T pi = c_B
    B = Astd[:, tab.basis]
    cb = tab.cost[tab.basis]
    try:
        pi = np.linalg.solve(B.T, cb)
        dual = float(pi @ bstd) + const
    except np.linalg.LinAlgError:
        dual = obj
    return "optimal", x, obj, dual
