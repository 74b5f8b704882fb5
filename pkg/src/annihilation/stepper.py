"""Per-step quadratic equations for the implicit update of ``a_k``.

Splitting the newest segment ``[t_{k-1}, t_k]`` out of the memory sum leaves
an equation quadratic in ``a_k``:

    A a_k^2 + B a_k + C = 0

with the older segments folded into ``C``. The first step always uses the
one-step (backward Euler) derivative; later steps use either the one-step or
the two-step (BDF2) derivative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import SchemeBreakdownError
from .model import DerivedCoeffs
from .quadrature import SegmentWeights, _midpoint_moments, compensated_sum, memory_sum


class SchemeKind(IntEnum):
    """Order of the backward-difference derivative."""

    BDF1 = 1
    BDF2 = 2

    @classmethod
    def parse(cls, value) -> SchemeKind:
        try:
            return cls(int(value))
        except (TypeError, ValueError):
            raise ValueError(f"scheme order must be 1 or 2, got {value!r}") from None


@dataclass(frozen=True)
class QuadraticStep:
    A: float
    B: float
    C: float
    k: int

    @property
    def discriminant(self) -> float:
        return self.B * self.B - 4.0 * self.A * self.C

    def __call__(self, a: float) -> float:
        return (self.A * a + self.B) * a + self.C


def _newest_segment_factors(delta: float):
    """Coefficients of a_k^2, a_k a_{k-1} and a_{k-1}^2 in the newest segment integral.

    In bracketed form these are

        (1+delta)^2 L - (3/2 + delta)
        2 delta + 1 - 2 (1+delta) delta L
        1/2 - delta + delta^2 L

    with L = ln((1+delta)/delta). They are evaluated through the midpoint
    moments instead, which does not cancel when delta is large.
    """
    log_ratio, excess = _midpoint_moments(1, delta)
    log_ratio, excess = float(log_ratio), float(excess)
    mid = delta + 0.5
    quad = 0.25 * log_ratio + (1.0 + mid) * excess
    cross = 0.5 * log_ratio - 2.0 * mid * excess
    const = 0.25 * log_ratio + (mid - 1.0) * excess
    return quad, cross, const


def bracketed_newest_segment_factors(delta: float):
    """The same three factors written out directly in terms of ln((1+delta)/delta)."""
    log_ratio = math.log1p(1.0 / delta)
    quad = (1.0 + delta) ** 2 * log_ratio - (1.5 + delta)
    cross = 2.0 * delta + 1.0 - 2.0 * (1.0 + delta) * delta * log_ratio
    const = 0.5 - delta + delta * delta * log_ratio
    return quad, cross, const


def _derivative_terms(scheme: SchemeKind, dt: float, history, k: int):
    """(coefficient of a_k, constant) of the backward difference at step k."""
    if scheme == SchemeKind.BDF1 or k == 1:
        return 1.0 / dt, -float(history[k - 1]) / dt
    return 1.5 / dt, -(4.0 * float(history[k - 1]) - float(history[k - 2])) / (2.0 * dt)


def _check_history(scheme: SchemeKind, history, k: int):
    if k < 1:
        raise ValueError(f"step index must be >= 1, got {k}")
    if scheme == SchemeKind.BDF2 and k < 2:
        raise ValueError("the two-step scheme needs a_0 and a_1; use assemble_first_step for k=1")
    if len(history) < k:
        raise ValueError(f"step {k} needs {k} history values, got {len(history)}")


def assemble_first_step(coeffs: DerivedCoeffs, a0: float) -> QuadraticStep:
    """Quadratic for ``a_1`` from ``a_0`` with the one-step derivative."""
    quad, cross, const = _newest_segment_factors(coeffs.delta)
    beta, dt = coeffs.beta, coeffs.dt
    a0 = float(a0)
    return QuadraticStep(
        A=coeffs.alpha - beta * quad,
        B=1.0 / dt - beta * a0 * cross,
        C=-a0 / dt - beta * a0 * a0 * const,
        k=1,
    )


def assemble_general_step(
    coeffs: DerivedCoeffs,
    scheme: SchemeKind,
    history,
    k: int,
    weights: SegmentWeights | None = None,
) -> QuadraticStep:
    """Quadratic for ``a_k`` given ``history = a_0 .. a_{k-1}``.

    ``weights`` may be a prebuilt table covering lags up to ``k``; the driver
    passes one so the logarithms are computed once per run.
    """
    scheme = SchemeKind.parse(scheme)
    _check_history(scheme, history, k)
    history = np.asarray(history, dtype=float)
    if weights is None and coeffs.beta != 0.0:
        weights = SegmentWeights.build(coeffs.delta, k)
    quad, cross, const = _newest_segment_factors(coeffs.delta)
    beta = coeffs.beta
    prev = float(history[k - 1])
    b_deriv, c_deriv = _derivative_terms(scheme, coeffs.dt, history, k)
    older = 0.0
    if beta != 0.0 and k > 1:
        older = compensated_sum(weights.history_terms(history, k, stop=k - 1))
    return QuadraticStep(
        A=coeffs.alpha - beta * quad,
        B=b_deriv - beta * prev * cross,
        C=c_deriv - beta * prev * prev * const - beta * older,
        k=k,
    )


def solve_positive_root(step: QuadraticStep) -> float:
    """Admissible root of ``A x^2 + B x + C = 0``, free of cancellation.

    Raises:
        SchemeBreakdownError: negative discriminant, or no non-negative root.
    """
    A, B, C = step.A, step.B, step.C
    coeffs = (A, B, C)
    if not all(math.isfinite(v) for v in coeffs):
        raise SchemeBreakdownError("non-finite coefficients", step.k, coeffs)
    if A == 0.0:
        if B == 0.0:
            raise SchemeBreakdownError("degenerate equation (A = B = 0)", step.k, coeffs)
        root = -C / B
        if root < 0:
            raise SchemeBreakdownError("linear root is negative", step.k, coeffs)
        return root
    disc = B * B - 4.0 * A * C
    if disc < 0:
        raise SchemeBreakdownError(f"negative discriminant {disc!r}", step.k, coeffs)
    q = -0.5 * (B + math.copysign(math.sqrt(disc), B))
    if q == 0.0:
        # B = 0 and C = 0: double root at zero
        return 0.0
    big, small = q / A, C / q
    if big >= 0 and small >= 0:
        # two admissible roots (only possible when A < 0): keep the branch that
        # tends to the linear solution -C/B as A -> 0
        return small
    root = max(big, small)
    if root < 0:
        raise SchemeBreakdownError("both roots are negative (positivity lost)", step.k, coeffs)
    return root


def step_residual(
    coeffs: DerivedCoeffs,
    scheme: SchemeKind,
    history,
    a_k: float,
    weights: SegmentWeights | None = None,
) -> float:
    """Residual of the un-rearranged step equation at candidate ``a_k``.

    ``k`` is ``len(history)``. The memory term is summed over all ``k``
    segments with the candidate in place, instead of going through the
    quadratic's coefficients.
    """
    scheme = SchemeKind.parse(scheme)
    history = np.asarray(history, dtype=float)
    k = len(history)
    _check_history(scheme, history, k)
    return sum(residual_terms(coeffs, scheme, history, a_k, weights))


def residual_terms(coeffs: DerivedCoeffs, scheme: SchemeKind, history, a_k: float, weights=None):
    """The three additive terms (derivative, reaction, memory) of the step residual."""
    scheme = SchemeKind.parse(scheme)
    history = np.asarray(history, dtype=float)
    k = len(history)
    _check_history(scheme, history, k)
    dt = coeffs.dt
    if scheme == SchemeKind.BDF1:
        deriv = (a_k - history[k - 1]) / dt
    else:
        deriv = (3.0 * a_k - 4.0 * history[k - 1] + history[k - 2]) / (2.0 * dt)
    reaction = coeffs.alpha * a_k * a_k
    memory = -coeffs.beta * memory_sum(k, coeffs.delta, history, a_k, weights)
    return deriv, reaction, memory
