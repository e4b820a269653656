"""Linear model container, built-in branch-and-bound solver and LP/MPS export."""

from .bnb import SolveOptions, SolveResult, Status, relative_gap, solve
from .export import export_model, to_lp, to_mps
from .model import MilpModel, ModelError, Sense, VarKind
from .simplex import LpSolution, solve_lp

__all__ = [
    "MilpModel",
    "ModelError",
    "Sense",
    "VarKind",
    "SolveOptions",
    "SolveResult",
    "Status",
    "relative_gap",
    "solve",
    "solve_lp",
    "LpSolution",
    "export_model",
    "to_lp",
    "to_mps",
]
