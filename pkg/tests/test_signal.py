"""Exact sampler: moments against textbook forms, stream layout, grids."""
import math

import numpy as np
import pytest

from execsignal.signal import (OUState, SignalParams, SignalPath,
                               conditional_mean, joint_moments, sample_paths,
                               simulate_path, step, stream)


def _textbook_moments(gamma, sigma, iota, dt):
    """Independent route: the classical mean-reverting (I, Y) step moments."""
    g, s2 = gamma, sigma * sigma
    e1, e2_ = math.exp(-g * dt), math.exp(-2.0 * g * dt)
    mean_i = iota * e1
    mean_dy = iota * (1.0 - e1) / g
    var_i = s2 * (1.0 - e2_) / (2.0 * g)
    cov = s2 / (2.0 * g * g) * (1.0 - e1) ** 2
    var_dy = s2 / (g * g) * (dt - 2.0 * (1.0 - e1) / g + (1.0 - e2_) / (2.0 * g))
    return mean_i, mean_dy, var_i, cov, var_dy


@pytest.mark.parametrize("dt", [0.05, 0.5, 3.0])
@pytest.mark.parametrize("gamma", [0.1, 1.3])
def test_joint_moments_vs_textbook(gamma, dt):
    p = SignalParams(gamma=gamma, sigma=0.3, iota0=0.0)
    got = joint_moments(p, 0.7, dt)
    want = _textbook_moments(gamma, 0.3, 0.7, dt)
    for g, w in zip(got, want):
        assert g == pytest.approx(w, rel=1e-12)


def test_joint_moments_brownian_limit():
    # gamma -> 0 continuously reaches dY ~ N(iota dt, sigma^2 dt^3 / 3)
    p0 = SignalParams(gamma=0.0, sigma=0.2, iota0=0.0)
    p1 = SignalParams(gamma=1e-9, sigma=0.2, iota0=0.0)
    dt = 0.8
    m0 = joint_moments(p0, 0.5, dt)
    m1 = joint_moments(p1, 0.5, dt)
    assert m0[1] == pytest.approx(0.5 * dt, rel=1e-14)
    assert m0[2] == pytest.approx(0.04 * dt, rel=1e-14)
    assert m0[3] == pytest.approx(0.04 * dt * dt / 2.0, rel=1e-13)
    assert m0[4] == pytest.approx(0.04 * dt ** 3 / 3.0, rel=1e-13)
    for a, b in zip(m0, m1):
        assert a == pytest.approx(b, rel=1e-8)


def test_conditional_mean():
    p = SignalParams(gamma=0.4, sigma=0.1, iota0=0.0)
    assert conditional_mean(p, 2.0, 0.0) == 2.0
    assert conditional_mean(p, 2.0, 1.5) == pytest.approx(2.0 * math.exp(-0.6))
    with pytest.raises(ValueError):
        conditional_mean(p, 1.0, -0.1)


def test_step_deterministic_parts(params):
    s0 = OUState(t=1.0, I=0.4, Y=2.0)
    s1 = step(params, s0, 0.5, (0.0, 0.0))
    mi, mdy, *_ = joint_moments(params, 0.4, 0.5)
    assert s1.t == 1.5
    assert s1.I == pytest.approx(mi, rel=1e-15)
    assert s1.Y == pytest.approx(2.0 + mdy, rel=1e-15)
    p0 = SignalParams(gamma=params.gamma, sigma=0.0, iota0=0.0)
    s2 = step(p0, s0, 0.5, (1.7, -0.3))   # noise ignored when sigma = 0
    assert s2.I == pytest.approx(0.4 * math.exp(-0.05), rel=1e-15)
    with pytest.raises(ValueError):
        step(params, s0, 0.0, (0.0, 0.0))


def test_stream_keying():
    a = stream(1, 2, 3).standard_normal(4)
    b = stream(1, 2, 3).standard_normal(4)
    assert np.array_equal(a, b)
    for other in (stream(1, 2, 4), stream(1, 3, 3), stream(2, 2, 3)):
        assert not np.array_equal(a, other.standard_normal(4))


def test_sample_paths_matches_stepper(params):
    grid = np.array([0.0, 0.3, 1.0, 1.1, 2.5])
    I, Y, Z = sample_paths(params, grid, 3, seed=9)
    assert Z.shape == (3, 4, 0)
    for i in range(3):
        states = simulate_path(params, grid, seed=9, path_index=i)
        assert np.allclose(I[i], [s.I for s in states], rtol=1e-12, atol=1e-14)
        assert np.allclose(Y[i], [s.Y for s in states], rtol=1e-12, atol=1e-14)


def test_sample_paths_first_index(params):
    grid = np.linspace(0.0, 1.0, 5)
    full_i, full_y, _ = sample_paths(params, grid, 6, seed=4)
    tail_i, tail_y, _ = sample_paths(params, grid, 2, seed=4, first_index=4)
    assert np.array_equal(full_i[4:], tail_i)
    assert np.array_equal(full_y[4:], tail_y)


def test_sample_paths_extra_normals_stable(params):
    # requesting extra columns must not change the signal draw
    grid = np.linspace(0.0, 1.0, 4)
    i0, y0, _ = sample_paths(params, grid, 2, seed=5)
    i1, y1, z = sample_paths(params, grid, 2, seed=5, extra_normals=2)
    assert np.array_equal(i0, i1) and np.array_equal(y0, y1)
    assert z.shape == (2, 3, 2)


def test_sigma_zero_paths_are_exact_decay():
    p = SignalParams(gamma=0.7, sigma=0.0, iota0=1.3)
    grid = np.linspace(0.0, 4.0, 9)
    I, Y, _ = sample_paths(p, grid, 2, seed=0)
    assert np.allclose(I, 1.3 * np.exp(-0.7 * grid), rtol=1e-13)
    assert np.allclose(Y, 1.3 * (1 - np.exp(-0.7 * grid)) / 0.7, rtol=1e-13)


def test_terminal_distribution(params):
    n = 20000
    grid = np.linspace(0.0, 10.0, 9)
    I, Y, _ = sample_paths(params, grid, n, seed=3)
    mi, mdy, var_i, cov, var_dy = joint_moments(params, params.iota0, 10.0)
    z_mi = abs(np.mean(I[:, -1]) - mi) / math.sqrt(var_i / n)
    z_my = abs(np.mean(Y[:, -1]) - mdy) / math.sqrt(var_dy / n)
    z_vi = abs(np.var(I[:, -1], ddof=1) - var_i) / (var_i * math.sqrt(2.0 / n))
    z_cv = abs(np.cov(I[:, -1], Y[:, -1], ddof=1)[0, 1] - cov) / math.sqrt(
        var_i * var_dy / n)
    assert max(z_mi, z_my, z_vi, z_cv) < 5.0


def test_grid_validation(params):
    for bad in ([], [0.5, 1.0], [0.0, 1.0, 1.0], [0.0, np.inf]):
        with pytest.raises(ValueError):
            sample_paths(params, bad, 1, seed=0)


def test_params_validation():
    with pytest.raises(ValueError):
        SignalParams(gamma=-0.1, sigma=0.1, iota0=0.0)
    with pytest.raises(ValueError):
        SignalParams(gamma=0.1, sigma=-0.1, iota0=0.0)
    with pytest.raises(ValueError):
        SignalParams(gamma=0.1, sigma=0.1, iota0=math.inf)


def test_signal_path_validation():
    t = np.linspace(0.0, 1.0, 5)
    SignalPath(times=t, I=np.zeros(5), Y=np.zeros(5))
    with pytest.raises(ValueError):
        SignalPath(times=t, I=np.zeros(4), Y=np.zeros(5))
    with pytest.raises(ValueError):
        SignalPath(times=t + 1.0, I=np.zeros(5), Y=np.zeros(5))
