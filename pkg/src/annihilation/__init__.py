"""Mean-density kinetics of the A + A -> 0 annihilation reaction.

Solves the regularized two-dimensional integro-differential equation

    da/dt = -alpha a^2 + beta * int_0^t a(s)^2 / (t - s + gamma) ds

on a uniform grid with exact product integration of the memory term and an
implicit (quadratic) update per step.
"""

from .errors import (
    AnnihilationError,
    ConfigError,
    FitError,
    GridError,
    SchemeBreakdownError,
)
from .model import DerivedCoeffs, ModelParams, derive_coeffs
from .quadrature import SegmentWeights, memory_sum, segment_integral
from .stepper import (
    QuadraticStep,
    SchemeKind,
    assemble_first_step,
    assemble_general_step,
    solve_positive_root,
    step_residual,
)
from .solver import Trajectory, extend_trajectory, solve_trajectory, value_at
from .analysis import (
    FitResult,
    OrderEstimate,
    RefinementTable,
    order_estimate,
    order_profile,
    power_law_fit,
    refinement_table,
)

__version__ = "0.1.0"

__all__ = [
    "AnnihilationError",
    "ConfigError",
    "DerivedCoeffs",
    "FitError",
    "FitResult",
    "GridError",
    "ModelParams",
    "OrderEstimate",
    "QuadraticStep",
    "RefinementTable",
    "SchemeBreakdownError",
    "SchemeKind",
    "SegmentWeights",
    "Trajectory",
    "assemble_first_step",
    "assemble_general_step",
    "derive_coeffs",
    "extend_trajectory",
    "memory_sum",
    "order_estimate",
    "order_profile",
    "power_law_fit",
    "refinement_table",
    "segment_integral",
    "solve_positive_root",
    "solve_trajectory",
    "step_residual",
    "value_at",
]
