"""Time marching on the uniform grid t_k = k * dt."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import GridError, SchemeBreakdownError
from .model import ModelParams, derive_coeffs
from .quadrature import SegmentWeights
from .stepper import SchemeKind, assemble_first_step, assemble_general_step, solve_positive_root

ProgressHook = Callable[[int, int], None]

_GRID_ULPS = 8


def grid_index(t: float, dt: float) -> int | None:
    """Index k with k*dt == t up to a few ulps, or None when t is off-grid."""
    ratio = t / dt
    k = round(ratio)
    if abs(ratio - k) <= _GRID_ULPS * np.finfo(float).eps * max(abs(k), 1):
        return int(k)
    return None


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Densities a_0..a_K on the grid t_k = k * dt."""

    dt: float
    values: np.ndarray
    params: ModelParams
    scheme: SchemeKind
    memory: bool = True

    @property
    def n_steps(self) -> int:
        return len(self.values) - 1

    @property
    def t_end(self) -> float:
        return self.n_steps * self.dt

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.values)) * self.dt

    def same_model(self, other: Trajectory) -> bool:
        return (
            self.params == other.params
            and self.scheme == other.scheme
            and self.memory == other.memory
        )


def _step_count(dt: float, t_end: float) -> int:
    if not (dt > 0 and math.isfinite(dt)):
        raise GridError(f"dt must be finite and > 0, got {dt!r}")
    if not t_end >= dt:
        raise GridError(f"t_end={t_end!r} must be >= dt={dt!r}")
    k = grid_index(t_end, dt)
    if k is None:
        raise GridError(f"t_end={t_end!r} is not an integer multiple of dt={dt!r}")
    return k


def _march(coeffs, values, start, stop, scheme, progress, progress_every):
    """Fill values[start..stop] in place; values[:start] is the known history."""
    weights = SegmentWeights.build(coeffs.delta, stop)
    for k in range(start, stop + 1):
        if k == 1:
            step = assemble_first_step(coeffs, values[0])
        else:
            step = assemble_general_step(coeffs, scheme, values[:k], k, weights)
        try:
            values[k] = solve_positive_root(step)
        except SchemeBreakdownError as exc:
            wrapped = SchemeBreakdownError(f"{exc} at t={k * coeffs.dt!r}; try a smaller dt")
            wrapped.k, wrapped.coefficients = exc.k, exc.coefficients
            raise wrapped from exc
        if progress is not None and (k % progress_every == 0 or k == stop):
            progress(k, stop)


def solve_trajectory(
    params: ModelParams,
    dt: float,
    t_end: float,
    scheme: SchemeKind | int = SchemeKind.BDF2,
    *,
    memory: bool = True,
    progress: Optional[ProgressHook] = None,
    progress_every: int = 1000,
) -> Trajectory:
    """Integrate from a(0) = params.a0 to t_end with uniform step dt.

    Each a_k depends on a_0..a_{k-1} only. With ``memory=False`` the history
    integral is dropped (beta = 0), leaving ``da/dt = -alpha a^2``.

    Raises:
        GridError: t_end is not an integer number of steps.
        SchemeBreakdownError: a step has no admissible root.
    """
    scheme = SchemeKind.parse(scheme)
    n = _step_count(dt, t_end)
    coeffs = derive_coeffs(params, dt)
    if not memory:
        coeffs = coeffs.without_memory()
    values = np.empty(n + 1)
    values[0] = params.a0
    _march(coeffs, values, 1, n, scheme, progress, progress_every)
    values.flags.writeable = False
    return Trajectory(dt=dt, values=values, params=params, scheme=scheme, memory=memory)


def extend_trajectory(
    traj: Trajectory,
    t_end: float,
    *,
    progress: Optional[ProgressHook] = None,
    progress_every: int = 1000,
) -> Trajectory:
    """Continue ``traj`` to a later ``t_end``; the existing values are reused unchanged."""
    n = _step_count(traj.dt, t_end)
    if n < traj.n_steps:
        raise GridError(f"t_end={t_end!r} is before the end of the trajectory")
    coeffs = derive_coeffs(traj.params, traj.dt)
    if not traj.memory:
        coeffs = coeffs.without_memory()
    values = np.empty(n + 1)
    values[: traj.n_steps + 1] = traj.values
    _march(coeffs, values, traj.n_steps + 1, n, traj.scheme, progress, progress_every)
    values.flags.writeable = False
    return Trajectory(dt=traj.dt, values=values, params=traj.params, scheme=traj.scheme,
                      memory=traj.memory)


def value_at(traj: Trajectory, t: float, interpolate: bool = False) -> float:
    """Density at time t: the grid value, or the linear interpolant if requested."""
    t_end = traj.t_end
    k = grid_index(t, traj.dt)
    if k is not None and 0 <= k <= traj.n_steps:
        return float(traj.values[k])
    if not 0.0 <= t <= t_end:
        raise GridError(f"t={t!r} outside [0, {t_end!r}]")
    if not interpolate:
        raise GridError(f"t={t!r} is not on the grid dt={traj.dt!r}; pass interpolate=True")
    return float(np.interp(t, traj.times, traj.values))
