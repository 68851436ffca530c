"""Exact desk-scale MILP solving."""
from .bnb import branch_and_bound, enumerate_binaries
from .lp import LPRelaxation, solve_lp
from .lpfile import export_lp_file, format_lp, read_lp_file
from .model import (EQ, GAP_REACHED, GE, INFEASIBLE, LE, LIMIT, OPTIMAL,
                    UNBOUNDED, MipModel, SolveOptions, SolveResult)
from .simplex import simplex_solve

__all__ = [
    "branch_and_bound", "enumerate_binaries", "LPRelaxation", "solve_lp",
    "export_lp_file", "format_lp", "read_lp_file", "MipModel", "SolveOptions",
    "SolveResult", "simplex_solve", "LE", "EQ", "GE", "OPTIMAL", "GAP_REACHED",
    "INFEASIBLE", "UNBOUNDED", "LIMIT",
]
