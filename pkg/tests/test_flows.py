import math

import mpmath as mp
import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from aclab.flows import apriori_bound, phi, phi_bar, phi_bar_derivs


def test_phi_examples():
    assert phi(0, 1.0) == pytest.approx(1 / math.sqrt(2), abs=1e-12)
    assert float(phi(0, 1.0)) == pytest.approx(0.7071067812, abs=1e-10)
    assert phi(3.0, 0.0) == 0.0
    with mp.workdps(40):
        ref = mp.mpf("0.3") / mp.sqrt(mp.exp(-20) + mp.mpf("0.09"))
        gap = 1 - ref
    assert float(phi(10, 0.3)) == pytest.approx(float(ref), rel=1e-15)
    # distance to saturation is about exp(-20) / (2 * 0.09), just above 1e-8
    assert abs(1 - phi(10, 0.3)) == pytest.approx(float(gap), rel=1e-6)
    assert 1.1e-8 < float(gap) < 1.2e-8


def test_phi_saturates_without_overflow():
    assert phi(400.0, 1e-3) == 1.0
    assert phi(-400.0, 0.5) == pytest.approx(0.0, abs=1e-150)


def test_phi_bar_initial_condition_and_domain():
    assert phi_bar(0, 0.37) == 0.37
    assert phi_bar(2.0, 1.0) == pytest.approx(1.0, abs=1e-15)
    assert phi_bar(2.0, -1.0) == pytest.approx(-1.0, abs=1e-15)
    with pytest.raises(ValueError):
        phi_bar(-1.0, 2.0)  # backward flow from outside the separatrix blows up


triples = st.tuples(st.floats(0, 3), st.floats(0, 3), st.floats(-2, 2))


@settings(max_examples=100)
@given(triples)
def test_phi_bar_semigroup(stu):
    s, t, u = stu
    assert abs(phi_bar(s + t, u) - phi_bar(t, phi_bar(s, u))) <= 1e-12


@settings(max_examples=100)
@given(st.floats(-5, 5), st.floats(-3, 3))
def test_phi_is_a_trajectory_of_the_same_flow(t1, u):
    t2 = t1 + 1.7
    assert abs(phi(t2, u) - phi_bar(t2 - t1, phi(t1, u))) <= 1e-12


@settings(max_examples=100)
@given(st.floats(-3, 5), st.floats(-3, 3))
def test_phi_bar_limit_gives_phi(t, u):
    s = 20.0
    assert abs(phi_bar(t + s, math.exp(-s) * u) - phi(t, u)) <= 1e-8


@given(st.floats(-5, 5), st.floats(-3, 3))
def test_oddness(t, u):
    assert phi(t, -u) == -phi(t, u)
    if t >= 0:
        assert phi_bar(t, -u) == -phi_bar(t, u)


@given(st.floats(0, 5), st.floats(-3, 3), st.floats(-3, 3))
def test_phi_bar_monotone_and_bounded(t, u, v):
    a, b = sorted((u, v))
    assert phi_bar(t, a) <= phi_bar(t, b)
    assert abs(phi_bar(t, u)) <= max(abs(u), 1.0) + 1e-15


def test_phi_ode_residual():
    h = 1e-4
    for t in (-1.0, 0.0, 0.5, 2.0):
        for u in (-1.5, 0.2, 0.9):
            dudt = (phi(t + h, u) - phi(t - h, u)) / (2 * h)
            p = phi(t, u)
            assert abs(dudt - (p - p**3)) <= 1e-7


def test_phi_bar_derivative_formulas_symbolically():
    t, u = sp.symbols("t u", real=True)
    pb = sp.exp(t) * u / sp.sqrt(1 + (sp.exp(2 * t) - 1) * u**2)
    A = 1 + (sp.exp(2 * t) - 1) * u**2
    d1 = sp.exp(t) * A ** sp.Rational(-3, 2)
    d2 = -3 * u * sp.exp(t) * (sp.exp(2 * t) - 1) * A ** sp.Rational(-5, 2)
    assert sp.simplify(sp.diff(pb, u) - d1) == 0
    assert sp.simplify(sp.diff(pb, u, 2) - d2) == 0
    # the closed form also solves the ODE
    assert sp.simplify(sp.diff(pb, t) - (pb - pb**3)) == 0


def test_phi_bar_derivs_examples():
    for u in (-2.0, 0.0, 0.4):
        d1, d2 = phi_bar_derivs(0.0, u)
        assert d1 == pytest.approx(1.0) and d2 == 0.0
    d1, d2 = phi_bar_derivs(1.3, 0.0)
    assert d1 == pytest.approx(math.exp(1.3)) and d2 == 0.0


def test_phi_bar_derivs_against_finite_differences():
    t, u, h = 1.0, 0.5, 1e-5
    d1, _ = phi_bar_derivs(t, u)
    fd = (phi_bar(t, u + h) - phi_bar(t, u - h)) / (2 * h)
    assert abs(fd - d1) <= 1e-8 * abs(d1)
    # second derivative: mpmath central differences avoid cancellation
    for t, u in ((0.5, 0.3), (1.0, 0.5), (2.0, -0.2), (3.0, 0.05)):
        with mp.workdps(50):
            f = lambda x: mp.e ** t * x / mp.sqrt(1 + (mp.e ** (2 * t) - 1) * x * x)
            ref1 = mp.diff(f, mp.mpf(u))
            ref2 = mp.diff(f, mp.mpf(u), 2)
        d1, d2 = phi_bar_derivs(t, u)
        assert abs(d1 - float(ref1)) <= 1e-8 * abs(float(ref1))
        assert abs(d2 - float(ref2)) <= 1e-8 * abs(float(ref2))


def test_second_derivative_envelope():
    t = np.linspace(0, 6, 121)[:, None]
    u = np.linspace(-3, 3, 601)[None, :]
    _, d2 = phi_bar_derivs(t, u)
    C = np.max(np.abs(d2) / np.exp(2 * t))
    assert C <= 3
    # for large t the sup over u approaches 3 v (1 + v^2)^{-5/2} at v = 1/2
    limit = 1.5 * 1.25**-2.5
    assert C <= limit + 1e-12
    assert C == pytest.approx(limit, rel=1e-3)


def test_apriori_bound_values():
    with mp.workdps(30):
        for t in ("1", "0.1", "3.5"):
            ref = mp.e ** mp.mpf(t) / mp.sqrt(mp.e ** (2 * mp.mpf(t)) - 1)
            assert float(apriori_bound(float(t))) == pytest.approx(float(ref), rel=1e-14)
    assert float(apriori_bound(1.0)) == pytest.approx(1.075415, abs=5e-7)
    assert float(apriori_bound(0.1)) == pytest.approx(2.348756, abs=5e-7)
    assert float(apriori_bound(10.0)) - 1 <= 1.1e-9
    ts = np.linspace(0.05, 8, 50)
    b = apriori_bound(ts)
    assert np.all(np.diff(b) < 0)
    with pytest.raises(ValueError):
        apriori_bound(0.0)
