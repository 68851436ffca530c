"""Branch-and-bound over the binary variables of a MipModel.

Open nodes are kept in a best-bound heap (ties broken by node id, so the
search is reproducible).  Each popped node is dived depth-first along the
rounding direction of its most fractional binary, the sibling going back
to the heap, which finds incumbents early on big-M models whose LP bounds
are weak.
"""
from __future__ import annotations

import heapq
import itertools
import math
import time
from typing import Callable, Dict, Optional

import numpy as np

from .lp import LPRelaxation
from .model import (GAP_REACHED, INFEASIBLE, LIMIT, OPTIMAL, UNBOUNDED,
                    MipModel, SolveOptions, SolveResult)

# Maps an LP point to a full 0/1 assignment of the binaries (index -> value),
# or None when it has no suggestion.
Heuristic = Callable[[np.ndarray], Optional[Dict[int, float]]]


def _most_fractional(x, binaries, tol):
    frac = np.abs(x[binaries] - np.round(x[binaries]))
    if frac.size == 0 or frac.max() <= tol:
        return None
    # argmax returns the first maximum, i.e. the lowest variable index
    return int(binaries[int(np.argmax(frac))])


def branch_and_bound(model: MipModel, opts: SolveOptions = SolveOptions(),
                     heuristic: Optional[Heuristic] = None,
                     heuristic_every: int = 50) -> SolveResult:
    """Minimize ``model`` exactly up to ``opts.rel_gap``.

    Returns status 'optimal' (gap proven), 'gap_reached' (a limit stopped the
    search with an incumbent), 'limit' (no incumbent), 'infeasible' or
    'unbounded'.
    """
    t0 = time.monotonic()
    relax = LPRelaxation(model, opts)
    binaries = model.binaries
    base_lo = relax.lo.copy()
    base_hi = relax.hi.copy()
    itol = opts.integrality_tol

    best_x: Optional[np.ndarray] = None
    best_obj = math.inf
    ids = itertools.count()
    heap = []
    nodes = 0

    def bounds_for(fix):
        lo, hi = base_lo.copy(), base_hi.copy()
        for j, v in fix.items():
            lo[j] = hi[j] = v
        return lo, hi

    def cutoff():
        if best_x is None:
            return math.inf
        return best_obj - opts.rel_gap * max(1.0, abs(best_obj)) * 0.5

    def try_fixing(fix):
        nonlocal best_x, best_obj
        res = relax.solve(*bounds_for(fix))
        if res.status == OPTIMAL and res.objective < best_obj:
            x = res.x.copy()
            x[binaries] = np.round(x[binaries])
            best_x, best_obj = x, res.objective

    def out_of_budget():
        if opts.node_limit is not None and nodes >= opts.node_limit:
            return True
        if opts.time_limit_seconds is not None and time.monotonic() - t0 > opts.time_limit_seconds:
            return True
        return False

    root = relax.solve()
    nodes = 1
    if root.status == INFEASIBLE:
        return SolveResult(INFEASIBLE, nodes=1, lp_solves=relax.solves)
    if root.status == UNBOUNDED:
        return SolveResult(UNBOUNDED, nodes=1, lp_solves=relax.solves)
    heapq.heappush(heap, (root.best_bound, next(ids), {}, root))

    stopped = False
    while heap:
        lower = heap[0][0]
        if best_x is not None and best_obj - lower <= opts.rel_gap * max(1.0, abs(best_obj)):
            break
        if out_of_budget():
            stopped = True
            break
        bound, _, fix, res = heapq.heappop(heap)
        if bound >= cutoff():
            continue
        # dive
        while True:
            if res is None:
                res = relax.solve(*bounds_for(fix))
                nodes += 1
            if res.status != OPTIMAL or res.objective >= cutoff():
                break
            j = _most_fractional(res.x, binaries, itol)
            if j is None:
                if res.objective < best_obj:
                    x = res.x.copy()
                    x[binaries] = np.round(x[binaries])
                    best_x, best_obj = x, res.objective
                break
            if heuristic is not None and (best_x is None or nodes % heuristic_every == 1):
                guess = heuristic(res.x)
                if guess:
                    try_fixing({**guess, **{k: v for k, v in fix.items()}})
                    if res.objective >= cutoff():
                        break
            first = 1.0 if res.x[j] >= 0.5 else 0.0
            other = {**fix, j: 1.0 - first}
            heapq.heappush(heap, (res.objective, next(ids), other, None))
            fix = {**fix, j: first}
            res = None
            if out_of_budget():
                heapq.heappush(heap, (bound, next(ids), fix, None))
                stopped = True
                break
        if stopped:
            break

    lower = min([h[0] for h in heap], default=best_obj)
    lower = min(lower, best_obj)
    if best_x is None:
        if stopped:
            return SolveResult(LIMIT, best_bound=lower, nodes=nodes, lp_solves=relax.solves)
        return SolveResult(INFEASIBLE, nodes=nodes, lp_solves=relax.solves)
    result = SolveResult(OPTIMAL, x=best_x, objective=best_obj, best_bound=lower,
                         nodes=nodes, lp_solves=relax.solves)
    if result.gap > opts.rel_gap:
        result.status = GAP_REACHED
    return result


def enumerate_binaries(model: MipModel, opts: SolveOptions = SolveOptions(),
                       max_binaries: int = 12) -> SolveResult:
    """Exhaustive reference: solve the LP for every 0/1 assignment of the binaries."""
    binaries = model.binaries
    if binaries.size > max_binaries:
        raise ValueError(f"{binaries.size} binaries exceed the enumeration cap")
    relax = LPRelaxation(model, opts)
    best = SolveResult(INFEASIBLE)
    for bits in itertools.product((0.0, 1.0), repeat=binaries.size):
        lo, hi = relax.lo.copy(), relax.hi.copy()
        lo[binaries] = bits
        hi[binaries] = bits
        res = relax.solve(lo, hi)
        if res.status == UNBOUNDED:
            return SolveResult(UNBOUNDED, lp_solves=relax.solves)
        if res.status == OPTIMAL and res.objective < best.objective - 1e-12 or (
                res.status == OPTIMAL and best.x is None):
            best = SolveResult(OPTIMAL, x=res.x, objective=res.objective,
                               best_bound=res.objective)
    best.nodes = 2 ** binaries.size
    best.lp_solves = relax.solves
    return best
