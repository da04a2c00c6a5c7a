"""Explicit Bellman function for the dual Haar unconditionality problem,
with independent numerical checks of its defining properties."""
from .bellman import (
    BellmanPoint,
    BellmanResult,
    Branch,
    classify_branch,
    eval_bellman,
    eval_bellman_p2_closed,
    eval_via_infimum,
)
from .special_functions import DomainError, ExponentPair, ScalarParams
from .system_solver import GammaYSolution, SolverError, minimize_L_grid, solve_G, solve_system

__all__ = [
    "BellmanPoint",
    "BellmanResult",
    "Branch",
    "DomainError",
    "ExponentPair",
    "GammaYSolution",
    "ScalarParams",
    "SolverError",
    "classify_branch",
    "eval_bellman",
    "eval_bellman_p2_closed",
    "eval_via_infimum",
    "minimize_L_grid",
    "solve_G",
    "solve_system",
]
