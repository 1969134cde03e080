import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from aclab.fields import make_eta_eps, sample_white_noise
from aclab.flows import apriori_bound, phi_bar
from aclab.grid import Field, interpolate, make_grid
from aclab.schedule import make_schedule
from aclab.solver import (
    MonitorViolation,
    SolverConfig,
    Trajectory,
    evolve,
    evolve_checkpoints,
    refine_times,
    rescaled_view,
    step_strang,
    time_nodes,
    travelling_wave,
)


def smooth_field(n=64, extent=4 * math.pi):
    g = make_grid(2, n, extent)
    x, y = g.mesh()
    return Field(g, 0.8 * np.sin(x / 2) * np.cos(y) + 0.3 * np.cos(x + y / 2) - 0.1)


@pytest.mark.parametrize("c", [-1.0, 0.0, 1.0])
def test_constant_fixed_points(c):
    g = make_grid(2, 16, 4.0)
    u = Field(g, np.full(g.shape, c))
    for _ in range(20):
        u = step_strang(u, 0.05)
    assert np.max(np.abs(u.values - c)) <= 1e-14


def test_constant_data_matches_ode():
    g = make_grid(2, 16, 4.0)
    u = evolve(Field(g, np.full(g.shape, 0.2)), 0.0, 1.0, SolverConfig(dt=0.01))
    exact = math.e * 0.2 / math.sqrt(1 + (math.e**2 - 1) * 0.04)
    assert float(phi_bar(1.0, 0.2)) == pytest.approx(exact, rel=1e-15)
    assert np.max(np.abs(u.values - exact)) <= 1e-6
    assert u.time == pytest.approx(1.0)


def test_empty_interval_and_composition():
    f = smooth_field()
    cfg = SolverConfig(dt=0.01)
    same = evolve(f, 0.3, 0.3, cfg)
    np.testing.assert_array_equal(same.values, f.values)
    a = evolve(f, 0.0, 2.0, cfg)
    b = evolve(evolve(f, 0.0, 1.0, cfg), 1.0, 2.0, cfg)
    assert np.max(np.abs(a.values - b.values)) <= 2e-6
    with pytest.raises(ValueError):
        evolve(f, 1.0, 0.5, cfg)


def test_step_rejects_bad_dt():
    with pytest.raises(ValueError):
        SolverConfig(dt=0.0)
    with pytest.raises(ValueError):
        SolverConfig(dt=0.01, ramp_dt0=0.02)


def test_strang_second_order():
    f = smooth_field()
    T = 1.0
    ref = evolve(f, 0.0, T, SolverConfig(dt=0.1 / 64)).values
    errs = [np.max(np.abs(evolve(f, 0.0, T, SolverConfig(dt=dt)).values - ref)) for dt in (0.1, 0.05, 0.025)]
    ratios = [errs[i] / errs[i + 1] for i in range(2)]
    for r in ratios:
        assert r == pytest.approx(4.0, abs=0.3), ratios


def test_eta_initial_data_respects_bound_at_one():
    eps = 0.05
    g = make_grid(2, 256, 6.4)  # h = eps / 2
    eta = make_eta_eps(sample_white_noise(g, 8), eps, 0.5)
    u = evolve(eta, 0.0, 1.0, SolverConfig(dt=0.01, ramp_dt0=eps**2 / 4))
    assert u.sup() <= float(apriori_bound(1.0)) + 1e-6


def test_apriori_bound_on_rough_data():
    g = make_grid(2, 64, 8.0)
    dt = 0.01
    for r in range(20):
        rng = np.random.default_rng(r)
        amp = 10 ** rng.uniform(-1, 3)
        u = Field(g, amp * rng.standard_normal(g.shape))
        nodes = time_nodes(0.0, 1.0, dt)
        for k in range(1, len(nodes)):
            u = step_strang(u, nodes[k] - nodes[k - 1])
            assert u.sup() <= float(apriori_bound(nodes[k])) + 1e-5


def test_monitor_raises_on_violation():
    g = make_grid(2, 16, 4.0)
    u0 = Field(g, np.full(g.shape, 3.0))
    # claiming the data has already evolved for a long time makes the bound near 1
    with pytest.raises(MonitorViolation) as info:
        evolve(u0, 0.0, 0.1, SolverConfig(dt=0.01), origin=-20.0)
    assert info.value.step == 1 and info.value.sup > info.value.bound


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10_000), shift=st.floats(0, 2))
def test_comparison_principle(seed, shift):
    g = make_grid(2, 32, 6.0)
    rng = np.random.default_rng(seed)
    u0 = rng.standard_normal(g.shape) * 2
    v0 = u0 + shift * rng.uniform(0, 1, g.shape)
    cfg = SolverConfig(dt=0.02)
    us = evolve_checkpoints(Field(g, u0), 0.0, [0.1, 0.3, 0.6], cfg)
    vs = evolve_checkpoints(Field(g, v0), 0.0, [0.1, 0.3, 0.6], cfg)
    for u, v in zip(us, vs):
        assert np.all(u.values <= v.values + 1e-10)


def test_refine_times_ramp_and_checkpoints():
    nodes = refine_times([0.0, 0.05, 0.1], 0.01, ramp_dt0=0.001)
    steps = np.diff(nodes)
    assert steps[0] == pytest.approx(0.001)
    assert steps[1] == pytest.approx(0.002)
    assert steps.max() <= 0.01 + 1e-15
    assert 0.05 in set(np.round(nodes, 14)) and nodes[-1] == 0.1
    with pytest.raises(ValueError):
        refine_times([0.0, 0.2, 0.1], 0.01)


def test_evolve_checkpoints_returns_each_time():
    f = smooth_field(32)
    out = evolve_checkpoints(f, 0.0, [0.0, 0.25, 0.5], SolverConfig(dt=0.05))
    assert [o.time for o in out] == pytest.approx([0.0, 0.25, 0.5])
    direct = evolve(f, 0.0, 0.5, SolverConfig(dt=0.05))
    np.testing.assert_allclose(out[-1].values, direct.values, atol=1e-14)


def test_travelling_wave_solves_profile_equation():
    x = sp.symbols("x", real=True)
    q = sp.tanh(x / sp.sqrt(2))
    assert sp.simplify(sp.diff(q, x, 2) + q - q**3) == 0
    # plain tanh does not: residual -tanh sech^2
    q0 = sp.tanh(x)
    assert sp.simplify(sp.diff(q0, x, 2) + q0 - q0**3 + sp.tanh(x) / sp.cosh(x) ** 2) == 0
    assert float(travelling_wave(0.0)) == 0.0


def test_standing_front_is_stationary_in_one_dimension():
    g = make_grid(1, 1024, 80.0)
    x = g.coords()
    u0 = -travelling_wave(x - 20) * travelling_wave(x - 60)
    u = evolve(Field(g, u0), 0.0, 1.0, SolverConfig(dt=0.01))
    assert np.max(np.abs(u.values - u0)) < 1e-3


def test_rescaled_view():
    s = make_schedule(0.1, 0.5, 0.75)
    g = make_grid(2, 32, 8.0)
    x, y = g.mesh()
    f0 = Field(g, np.sin(2 * math.pi * x / 8), 0.0)
    f1 = Field(g, 2 * np.sin(2 * math.pi * x / 8), s.t_star)
    traj = Trajectory([f0, f1])
    pts = np.array([[0.3, 0.1], [1.2, 2.0]])
    # sigma = 1: prefactor one and the field at t_star
    got = rescaled_view(traj, 1.0, s, pts)
    np.testing.assert_allclose(got, interpolate(f1, pts * s.L))
    # negative physical time falls back to the initial datum
    sig = -s.tau_star / s.T - 0.5
    got = rescaled_view(traj, sig, s, pts)
    np.testing.assert_allclose(got, s.prefactor(sig) * interpolate(f0, pts * s.L))
    # halfway in time: linear interpolation
    mid = (s.t_star / 2 - s.tau_star) / s.T
    np.testing.assert_allclose(rescaled_view(traj, mid, s, pts), s.prefactor(mid) * 1.5 * interpolate(f0, pts * s.L))
    with pytest.raises(ValueError):
        rescaled_view(traj, 3.0, s, pts)
