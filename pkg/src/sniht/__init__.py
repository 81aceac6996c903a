"""Robust joint-sparse recovery from multiple measurement vectors.

Greedy SNIHT(p,q) solvers with mixed-norm data fidelity, heavy-tailed noise
generators, a Monte Carlo harness and a sensor-array DOA application.
"""
from .core import (
    L11,
    L21,
    L22,
    MixedNormIndex,
    RowSparseSignal,
    UnsupportedNormError,
    hard_threshold,
    mixed_norm,
    restrict,
    row_support,
)
from .solver import SolverConfig, SolverState, sniht_solve
from .transforms import apply_psi

__version__ = "0.1.0"

__all__ = [
    "L11",
    "L21",
    "L22",
    "MixedNormIndex",
    "RowSparseSignal",
    "UnsupportedNormError",
    "SolverConfig",
    "SolverState",
    "apply_psi",
    "hard_threshold",
    "mixed_norm",
    "restrict",
    "row_support",
    "sniht_solve",
]
