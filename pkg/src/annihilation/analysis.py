"""Convergence-order estimates, refinement tables and power-law tail fits."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .errors import FitError, GridError
from .model import ModelParams
from .solver import Trajectory, grid_index, solve_trajectory, value_at
from .stepper import SchemeKind


@dataclass(frozen=True)
class OrderEstimate:
    """Observed order p(t) from three grids with steps dt, dt/2, dt/4.

    ``p`` is NaN and ``defined`` is False when either difference vanishes.
    """

    t: float
    p: float
    triple: tuple[float, float, float]

    @property
    def defined(self) -> bool:
        return math.isfinite(self.p)


def _check_triple(coarse: Trajectory, medium: Trajectory, fine: Trajectory):
    if not (coarse.same_model(medium) and coarse.same_model(fine)):
        raise ValueError("trajectories were computed for different models or schemes")
    if not (
        math.isclose(medium.dt * 2.0, coarse.dt, rel_tol=1e-12)
        and math.isclose(fine.dt * 4.0, coarse.dt, rel_tol=1e-12)
    ):
        raise GridError(
            f"steps {coarse.dt!r}, {medium.dt!r}, {fine.dt!r} are not in ratio 1 : 1/2 : 1/4"
        )


def _observed_order(a_coarse, a_medium, a_fine):
    num = np.abs(np.asarray(a_coarse) - np.asarray(a_medium))
    den = np.abs(np.asarray(a_medium) - np.asarray(a_fine))
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.log2(num / den)
    return np.where(np.isfinite(p), p, np.nan)


def order_estimate(coarse: Trajectory, medium: Trajectory, fine: Trajectory, t: float) -> OrderEstimate:
    """p(t) = log2 |(a_dt - a_dt/2) / (a_dt/2 - a_dt/4)| at a coarse-grid time t."""
    _check_triple(coarse, medium, fine)
    if grid_index(t, coarse.dt) is None:
        raise GridError(f"t={t!r} is not on the coarse grid dt={coarse.dt!r}")
    samples = [value_at(tr, t) for tr in (coarse, medium, fine)]
    p = float(_observed_order(*samples))
    return OrderEstimate(t=t, p=p, triple=(coarse.dt, medium.dt, fine.dt))


def order_profile(coarse: Trajectory, medium: Trajectory, fine: Trajectory):
    """p(t) at every common grid point t_k = k * coarse.dt, k >= 1.

    Returns ``(times, p)``; undefined samples are NaN.
    """
    _check_triple(coarse, medium, fine)
    n = min(coarse.n_steps, medium.n_steps // 2, fine.n_steps // 4)
    k = np.arange(1, n + 1)
    p = _observed_order(coarse.values[k], medium.values[2 * k], fine.values[4 * k])
    return k * coarse.dt, p


@dataclass(frozen=True)
class FitResult:
    """a(t) ~ amplitude / (t - shift) ** exponent on ``window``."""

    amplitude: float
    shift: float
    exponent: float
    window: tuple[float, float]
    max_abs_error: float  # max |log10 a - log10 fit| on the window
    max_rel_error: float  # max |a / fit - 1| on the window
    n_points: int

    def __call__(self, t):
        return self.amplitude / (np.asarray(t, dtype=float) - self.shift) ** self.exponent


def fit_power_law_samples(t, a, window=None, shift_starts=None) -> FitResult:
    """Least-squares fit of log a = log amplitude - exponent * log(t - shift).

    The shift enters nonlinearly, so the fit is restarted from several initial
    shifts (default 0, 0.1, ..., 0.5 below the window start) and the lowest
    cost wins.

    Raises:
        FitError: too few points, no converged start, or a degenerate fit
            (exponent <= 0 or shift pinned at the window start).
    """
    t = np.asarray(t, dtype=float)
    a = np.asarray(a, dtype=float)
    if window is None:
        window = (float(t.min()), float(t.max()))
    t_lo, t_hi = window
    if not t_lo < t_hi:
        raise ValueError(f"empty fit window {window!r}")
    span = t_hi - t_lo
    mask = (t >= t_lo - 1e-9 * span) & (t <= t_hi + 1e-9 * span)
    tw, aw = t[mask], a[mask]
    if tw.size < 10:
        raise FitError(f"need >= 10 samples in window {window!r}, got {tw.size}")
    if np.any(aw <= 0):
        raise FitError("densities must be positive to fit in log space")
    t_min = float(tw.min())
    log_a = np.log(aw)
    shift_max = t_min - 1e-9 * max(abs(t_min), 1.0)
    if shift_starts is None:
        shift_starts = np.round(np.arange(0.0, 0.51, 0.1), 12)
    starts = [s for s in shift_starts if s < shift_max] or [t_min - 0.5 * span]

    def residual(x):
        return log_a - (x[0] - x[2] * np.log(tw - x[1]))

    def jacobian(x):
        lt = np.log(tw - x[1])
        return np.column_stack([-np.ones_like(tw), -x[2] / (tw - x[1]), lt])

    best = None
    for s0 in starts:
        slope, intercept = np.polyfit(np.log(tw - s0), log_a, 1)
        x0 = np.array([intercept, s0, -slope])
        try:
            res = least_squares(
                residual, x0, jac=jacobian,
                bounds=([-np.inf, -np.inf, -np.inf], [np.inf, shift_max, np.inf]),
                x_scale="jac", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000,
            )
        except (ValueError, FloatingPointError):
            continue
        if res.status <= 0 or not np.all(np.isfinite(res.x)):
            continue
        if best is None or res.cost < best.cost:
            best = res
    if best is None:
        raise FitError(f"power-law fit did not converge on window {window!r}")

    log_amp, shift, exponent = (float(v) for v in best.x)
    if not exponent > 1e-9:
        raise FitError(f"degenerate fit: exponent {exponent!r} <= 0 (data not decaying)")
    if best.active_mask[1] != 0:
        raise FitError(f"singular fit: shift {shift!r} pinned at window start {t_min!r}")
    amplitude = math.exp(log_amp)
    model = amplitude / (tw - shift) ** exponent
    return FitResult(
        amplitude=amplitude,
        shift=shift,
        exponent=exponent,
        window=(float(t_lo), float(t_hi)),
        max_abs_error=float(np.max(np.abs(np.log10(aw) - np.log10(model)))),
        max_rel_error=float(np.max(np.abs(aw / model - 1.0))),
        n_points=int(tw.size),
    )


def power_law_fit(traj: Trajectory, window: tuple[float, float]) -> FitResult:
    """Fit the power-law tail of ``traj`` over the grid points inside ``window``."""
    t_lo, t_hi = window
    if t_lo < 0 or t_hi > traj.t_end * (1 + 1e-12):
        raise GridError(f"window {window!r} outside trajectory range [0, {traj.t_end!r}]")
    return fit_power_law_samples(traj.times, traj.values, (t_lo, t_hi))


@dataclass(frozen=True)
class RefinementTable:
    """Densities ``values[r, c]`` at ``times[c]`` computed with step ``dts[r]``."""

    dts: tuple[float, ...]
    times: tuple[float, ...]
    values: np.ndarray = field(repr=False)


def run_ladder(params: ModelParams, dts, t_end: float, scheme=SchemeKind.BDF2, threads: int = 1,
               memory: bool = True) -> list[Trajectory]:
    """One trajectory per step size, optionally in parallel worker processes."""
    dts = [float(dt) for dt in dts]
    scheme = SchemeKind.parse(scheme)
    if threads > 1 and len(dts) > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(dts))) as pool:
            # slowest (finest) runs first for better packing
            order = sorted(range(len(dts)), key=lambda r: dts[r])
            futures = {r: pool.submit(solve_trajectory, params, dts[r], t_end, scheme, memory=memory)
                       for r in order}
            return [futures[r].result() for r in range(len(dts))]
    return [solve_trajectory(params, dt, t_end, scheme, memory=memory) for dt in dts]


def tabulate(trajectories, sample_times) -> RefinementTable:
    """Sample each trajectory at grid times into a RefinementTable."""
    times = tuple(float(t) for t in sample_times)
    values = np.array([[value_at(tr, t) for t in times] for tr in trajectories], dtype=float)
    values = values.reshape(len(trajectories), len(times))
    return RefinementTable(dts=tuple(tr.dt for tr in trajectories), times=times, values=values)


def refinement_table(params: ModelParams, dts, sample_times, scheme=SchemeKind.BDF2,
                     threads: int = 1) -> RefinementTable:
    """a_dt(t) for every step in ``dts`` and time in ``sample_times``.

    Raises:
        GridError: a sample time is not a grid point of some step size.
    """
    dts = [float(dt) for dt in dts]
    times = [float(t) for t in sample_times]
    if not dts or not times:
        return RefinementTable(dts=tuple(dts), times=tuple(times),
                               values=np.empty((len(dts), len(times))))
    for dt in dts:
        for t in times:
            if t < 0 or grid_index(t, dt) is None:
                raise GridError(f"sample time {t!r} is not on the grid dt={dt!r}")
    t_end = max(times)
    trajectories = run_ladder(params, dts, t_end, scheme, threads)
    return tabulate(trajectories, times)
