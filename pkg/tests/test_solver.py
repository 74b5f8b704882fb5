import mpmath
import numpy as np
import pytest

from annihilation import (
    GridError,
    ModelParams,
    SchemeBreakdownError,
    extend_trajectory,
    solve_trajectory,
    value_at,
)
from conftest import LADDER, TABLE1

REFERENCE = ModelParams(0.1, 0.4, 0.001, 5000.0)


def test_coarsest_row_of_refinement_table():
    traj = solve_trajectory(REFERENCE, 0.01, 10.0)
    got = [value_at(traj, t) for t in (0.01, 0.1, 1.0, 10.0)]
    assert got == pytest.approx(TABLE1[0], rel=1e-7)
    assert traj.n_steps == 1000 and traj.values[0] == 5000.0


def _mp_trajectory(dt, n_steps, dps=30):
    """Same discretization evaluated term by term in multiprecision arithmetic."""
    with mpmath.workdps(dps):
        lam, D, ell, a0 = (mpmath.mpf(x) for x in ("0.1", "0.4", "0.001", "5000"))
        dt = mpmath.mpf(dt)
        alpha = 2 * lam * D
        beta = alpha**2 / (8 * mpmath.pi * D)
        delta = ell**2 / D / dt
        a = [a0]
        for k in range(1, n_steps + 1):
            p = a[k - 1]
            if k == 1:
                deriv_b, deriv_c = 1 / dt, -p / dt
            else:
                deriv_b, deriv_c = 3 / (2 * dt), -(4 * p - a[k - 2]) / (2 * dt)
            L = mpmath.log((1 + delta) / delta)
            A = alpha - beta * ((1 + delta) ** 2 * L - (mpmath.mpf(3) / 2 + delta))
            B = deriv_b - beta * p * (2 * delta + 1 - 2 * (1 + delta) * delta * L)
            C = deriv_c - beta * p * p * (mpmath.mpf(1) / 2 - delta + delta**2 * L)
            for i in range(k - 1):
                m = k + delta - i
                d = a[i + 1] - a[i]
                C -= beta * ((m * a[i + 1] - (m - 1) * a[i]) ** 2 * mpmath.log(m / (m - 1))
                             - (m + mpmath.mpf(1) / 2) * d * d - 2 * a[i] * d)
            a.append((-B + mpmath.sqrt(B * B - 4 * A * C)) / (2 * A))
        return [float(x) for x in a]


def test_matches_multiprecision_evaluation():
    ref = _mp_trajectory("0.01", 60)
    traj = solve_trajectory(REFERENCE, 0.01, 0.6)
    np.testing.assert_allclose(traj.values, ref, rtol=1e-13)


def test_no_reaction_keeps_initial_density():
    traj = solve_trajectory(ModelParams(0.0, 0.4, 0.001, 5000.0), 0.01, 1.0)
    assert np.all(traj.values == 5000.0)


def test_bit_identical_reruns():
    a = solve_trajectory(REFERENCE, 0.002, 2.0)
    b = solve_trajectory(REFERENCE, 0.002, 2.0)
    assert a.values.tobytes() == b.values.tobytes()


@pytest.mark.parametrize("scheme", [1, 2])
def test_extension_equals_direct_run(scheme):
    direct = solve_trajectory(REFERENCE, 0.005, 10.0, scheme)
    half = solve_trajectory(REFERENCE, 0.005, 5.0, scheme)
    extended = extend_trajectory(half, 10.0)
    assert extended.values.tobytes() == direct.values.tobytes()
    assert np.array_equal(half.values, direct.values[: half.n_steps + 1])


def test_positivity_and_monotone_decay():
    for dt in (0.01, 0.0025):
        v = solve_trajectory(REFERENCE, dt, 10.0).values
        assert np.all(v > 0)
        assert np.all(np.diff(v) < 0)


def test_refinement_lowers_density_at_late_times(reference_ladder):
    trajs, _ = reference_ladder
    for t in (1.0, 10.0):
        vals = [value_at(tr, t) for tr in trajs]
        assert all(x > y for x, y in zip(vals, vals[1:])), (t, vals)


def test_times_are_index_times_step():
    traj = solve_trajectory(REFERENCE, 0.0003125, 0.01)
    assert np.array_equal(traj.times, np.arange(33) * 0.0003125)
    assert traj.t_end == 32 * 0.0003125


@pytest.mark.parametrize("dt,t_end", [(0.003, 1.0), (0.01, 0.005), (0.0, 1.0), (-0.1, 1.0)])
def test_off_grid_end_time_rejected(dt, t_end):
    with pytest.raises(GridError):
        solve_trajectory(REFERENCE, dt, t_end)


def test_every_ladder_step_fits_the_table_times():
    for dt in LADDER:
        solve_trajectory(REFERENCE, dt, dt)  # no GridError
        for t in (0.01, 0.1, 1.0, 10.0):
            assert abs(t / dt - round(t / dt)) < 1e-9


def test_value_at_modes():
    traj = solve_trajectory(REFERENCE, 0.01, 0.1)
    assert value_at(traj, 0.0) == 5000.0
    assert value_at(traj, 0.03) == traj.values[3]
    with pytest.raises(GridError):
        value_at(traj, 0.015)
    mid = value_at(traj, 0.015, interpolate=True)
    assert min(traj.values[1], traj.values[2]) <= mid <= max(traj.values[1], traj.values[2])
    assert mid == pytest.approx(0.5 * (traj.values[1] + traj.values[2]), rel=1e-12)
    for t in (-0.01, 0.11):
        with pytest.raises(GridError):
            value_at(traj, t, interpolate=True)


def test_progress_hook_reports_steps():
    seen = []
    solve_trajectory(REFERENCE, 0.01, 1.0, progress=lambda k, n: seen.append((k, n)), progress_every=25)
    assert seen == [(25, 100), (50, 100), (75, 100), (100, 100)]


def test_breakdown_aborts_with_step_index():
    # strong memory relative to reaction on a coarse grid: no real root
    with pytest.raises(SchemeBreakdownError) as info:
        solve_trajectory(ModelParams(10.0, 1.0, 1e-3, 1000.0), 0.1, 1.0)
    assert info.value.k == 1
    assert "t=0.1" in str(info.value)


def test_memory_off_uses_plain_ode():
    traj = solve_trajectory(REFERENCE, 0.01, 0.02, scheme=1, memory=False)
    a1 = traj.values[1]
    # backward Euler: a1 = a0 - dt * alpha * a1^2
    assert a1 == pytest.approx(5000.0 - 0.01 * 0.08 * a1 * a1, rel=1e-13)
