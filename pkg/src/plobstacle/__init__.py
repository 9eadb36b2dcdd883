"""Obstacle problem for the evolutionary p-Laplace equation: solver and
numerical verification harness."""

__version__ = "0.1.0"

from .geometry import Grid, NodeClass, build_grid, bump_cutoff, classify_boundary
from .fields import Obstacle, ScalarField, VectorField
from .pflux import PParams
from .solver import SolveResult, SolverConfig, solve, solve_unconstrained

__all__ = [
    "Grid", "NodeClass", "build_grid", "bump_cutoff", "classify_boundary",
    "Obstacle", "ScalarField", "VectorField", "PParams",
    "SolveResult", "SolverConfig", "solve", "solve_unconstrained",
    "__version__",
]
