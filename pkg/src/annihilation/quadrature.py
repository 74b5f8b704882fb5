"""Product integration of the squared piecewise-linear history against the kernel.

For step ``k`` and segment ``i`` the exact integral of the squared linear
interpolant of ``a`` over ``[t_i, t_{i+1}]`` against ``1/(t_k - s + gamma)``
is, in the dimensionless variable ``m = k + delta - i``,

    S = [m a_{i+1} - (m-1) a_i]^2 ln(m/(m-1)) - (m + 1/2)(a_{i+1} - a_i)^2
        - 2 a_i (a_{i+1} - a_i)

(the step size cancels). Expanding about the segment midpoint
``M = m - 1/2`` gives the algebraically identical

    S = f^2 L + 2 f d (M L - 1) + d^2 M (M L - 1)

with ``f = (a_i + a_{i+1})/2``, ``d = a_{i+1} - a_i``, ``L = ln(m/(m-1))``.
The second form avoids the O(m^2) cancellation of the first for old segments,
and ``M L - 1`` is evaluated from its series when ``M`` is large.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_SERIES_TERMS = 30


def _validate(k, i, delta):
    if not delta > 0:
        raise ValueError(f"delta must be > 0 (regularized kernel), got {delta!r}")
    if k < 1:
        raise ValueError(f"step index k must be >= 1, got {k!r}")
    if i < 0 or i >= k:
        raise ValueError(f"segment index i={i!r} outside history 0..{k - 1}")


def _midpoint_moments(lag, delta):
    """Return (L, M*L - 1) for integer lag(s) ``k - i``; arrays broadcast."""
    lag = np.asarray(lag, dtype=float)
    shifted = (lag - 1.0) + delta  # m - 1 > 0; keeps all bits of a tiny delta
    log_ratio = np.log1p(1.0 / shifted)
    mid = shifted + 0.5
    # M L - 1 = sum_{n>=1} x^{2n} / (2n + 1), x = 1/(2M)
    x2 = (0.5 / mid) ** 2
    series = np.zeros_like(x2)
    for n in range(_SERIES_TERMS, 0, -1):
        series = x2 * (1.0 / (2 * n + 1) + series)
    direct = mid * log_ratio - 1.0
    excess = np.where(mid >= 1.0, series, direct)
    return log_ratio, excess


def _segment_values(a_lo, a_hi, log_ratio, excess, mid):
    f = 0.5 * (a_lo + a_hi)
    d = a_hi - a_lo
    return f * f * log_ratio + 2.0 * f * d * excess + d * d * mid * excess


@dataclass(frozen=True)
class SegmentWeights:
    """Per-lag weights of the segment integral for a fixed ``delta``.

    Index ``j`` (1 <= j <= n) is the lag ``k - i`` of a segment; index 0 is
    unused. ``log_ratio[j] = ln((j+delta)/(j+delta-1))`` and
    ``excess[j] = (j+delta-1/2) * log_ratio[j] - 1``. Because the weights only
    depend on the lag, one table serves every step of a run.
    """

    delta: float
    log_ratio: np.ndarray
    excess: np.ndarray
    mid: np.ndarray

    @classmethod
    def build(cls, delta: float, n: int) -> SegmentWeights:
        if not delta > 0:
            raise ValueError(f"delta must be > 0, got {delta!r}")
        lag = np.arange(n + 1, dtype=float)
        lag[0] = 1.0  # placeholder; slot 0 is never read
        log_ratio, excess = _midpoint_moments(lag, delta)
        mid = ((lag - 1.0) + delta) + 0.5
        for arr in (log_ratio, excess, mid):
            arr[0] = np.nan
            arr.flags.writeable = False
        return cls(delta=delta, log_ratio=log_ratio, excess=excess, mid=mid)

    def __len__(self):
        return len(self.log_ratio) - 1

    def history_terms(self, history: np.ndarray, k: int, stop: int | None = None) -> np.ndarray:
        """Segment integrals S(k, i) for i = 0 .. stop-1 (default k-1) as an array."""
        stop = k if stop is None else stop
        if k > len(self):
            raise ValueError(f"weights built for lags up to {len(self)}, need {k}")
        a = np.asarray(history, dtype=float)
        if stop == 0:
            return np.zeros(0)
        lags = slice(k, k - stop, -1)
        return _segment_values(
            a[:stop], a[1 : stop + 1], self.log_ratio[lags], self.excess[lags], self.mid[lags]
        )


def segment_integral(k: int, i: int, delta: float, a_i: float, a_ip1: float) -> float:
    """Exact integral of segment ``i`` at step ``k`` (step size factored out)."""
    _validate(k, i, delta)
    log_ratio, excess = _midpoint_moments(k - i, delta)
    mid = ((k - i - 1) + delta) + 0.5
    return float(_segment_values(float(a_i), float(a_ip1), log_ratio, excess, mid))


def segment_integral_expanded(k: int, i: int, delta: float, a_i: float, a_ip1: float) -> float:
    """The same integral in its raw bracketed form, without the midpoint rearrangement.

    Loses accuracy for large ``k - i`` when ``a_i != a_ip1``; kept as a
    cross-check for small lags.
    """
    _validate(k, i, delta)
    m1 = (k - i - 1) + delta
    m = m1 + 1.0
    d = a_ip1 - a_i
    lead = m * a_ip1 - m1 * a_i
    return lead * lead * math.log1p(1.0 / m1) - (m + 0.5) * d * d - 2.0 * a_i * d


def compensated_sum(values) -> float:
    """Exactly rounded sum; independent of order and chunking."""
    return math.fsum(np.asarray(values, dtype=float).tolist())


def memory_sum(
    k: int,
    delta: float,
    history,
    a_k_candidate: float,
    weights: SegmentWeights | None = None,
) -> float:
    """Sum of all k segment integrals with ``a_k`` set to the candidate value."""
    history = np.asarray(history, dtype=float)
    if history.size == 0:
        raise ValueError("history is empty")
    if k < 1 or history.size != k:
        raise ValueError(f"history must hold a_0..a_{k - 1} ({k} values), got {history.size}")
    if weights is None:
        weights = SegmentWeights.build(delta, k)
    elif weights.delta != delta:
        raise ValueError("weights were built for a different delta")
    full = np.append(history, float(a_k_candidate))
    return compensated_sum(weights.history_terms(full, k))
