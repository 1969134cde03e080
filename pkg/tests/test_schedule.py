import math

import mpmath as mp
import pytest
from hypothesis import given
from hypothesis import strategies as st

from aclab.schedule import make_schedule


def oracle(eps, alpha, alpha_bar, kappa, d):
    """Independent extended-precision evaluation of every derived time."""
    with mp.workdps(40):
        e, a, ab, k = (mp.mpf(str(v)) for v in (eps, alpha, alpha_bar, kappa))
        lg = mp.log(1 / e)
        llg = mp.log(lg)
        T = (mp.mpf(d) / 2 - a) * lg
        c = mp.mpf(d) / 4 * mp.log(4 * mp.pi * (d - 2 * a))
        tau = mp.mpf(d) / 4 * llg + c
        return {
            "T": T,
            "L": mp.sqrt(T),
            "c_frak": c,
            "tau_star": tau,
            "t_star": T + tau,
            "t1": (ab - a) * lg,
            "t2": T - llg / 2,
            "t2_kappa": T - (k + mp.mpf(1) / 2) * llg,
            "t_star_kappa": T + tau + k * llg,
        }


def test_reference_point_matches_oracle():
    s = make_schedule(0.01, 0.5, 0.75, 0.0, 2)
    ref = oracle(0.01, 0.5, 0.75, 0.0, 2)
    for key, val in ref.items():
        assert getattr(s, key) == pytest.approx(float(val), rel=1e-13), key
    # hand-checked digits
    assert s.T == pytest.approx(2.302585, abs=5e-7)
    assert s.L == pytest.approx(1.517427, abs=5e-7)
    assert s.c_frak == pytest.approx(1.265512, abs=5e-7)
    assert s.t1 == pytest.approx(1.151293, abs=5e-7)
    assert s.t_star == pytest.approx(4.331687, abs=5e-7)
    assert s.t2 == pytest.approx(1.538995, abs=5e-7)


@given(
    eps=st.floats(1e-6, 0.3),
    alpha=st.floats(0.05, 0.6),
    gap=st.floats(0.05, 0.35),
    kappa=st.floats(0, 0.25),
)
def test_matches_oracle_everywhere(eps, alpha, gap, kappa):
    ab = alpha + gap
    try:
        s = make_schedule(eps, alpha, ab, kappa, 2)
    except ValueError:
        return
    ref = oracle(eps, alpha, ab, kappa, 2)
    for key, val in ref.items():
        assert getattr(s, key) == pytest.approx(float(val), rel=1e-11, abs=1e-12), key
    assert 0 < s.t1 < s.t2 < s.t_star
    assert s.L**2 == pytest.approx(s.T, rel=1e-15)


def test_kappa_zero():
    s = make_schedule(0.05, 0.5, 0.75, 0.0)
    assert s.t_star_kappa == s.t_star
    assert s.t2_kappa == s.t2


def test_t_star_increases_as_eps_decreases():
    ts = [make_schedule(e, 0.5, 0.75).t_star for e in (0.3, 0.1, 0.05, 0.01, 1e-4, 1e-8)]
    assert all(b > a for a, b in zip(ts, ts[1:]))


@pytest.mark.parametrize(
    "args",
    [
        (0.5, 0.5, 0.75, 0, 2),  # eps above 1/e
        (0.0, 0.5, 0.75, 0, 2),
        (0.1, 0.8, 0.75, 0, 2),  # alpha_bar <= alpha
        (0.1, 0.5, 1.0, 0, 2),
        (0.1, 0.5, 0.75, -0.1, 2),
        (0.1, 0.5, 0.75, 0, 1),
        (0.1, 0.999, 0.9999, 0, 2),  # T nearly zero: t2 <= t1
    ],
)
def test_rejects_bad_parameters(args):
    with pytest.raises(ValueError):
        make_schedule(*args)


def test_prefactor():
    s = make_schedule(0.01, 0.5, 0.75)
    assert s.prefactor(1.0) == 1.0
    assert s.prefactor(2.0) == 1.0
    assert s.prefactor(0.5) == pytest.approx(math.exp(s.T / 2))
    assert s.prefactor(0.5) == pytest.approx(3.162278, abs=5e-7)
    assert s.physical_time(1.0) == pytest.approx(s.t_star)
