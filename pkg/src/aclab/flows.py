"""Closed-form flows of the cubic reaction ODE ``du/dt = u - u^3``.

``phi_bar(t, u)`` is the exact flow map started at ``u``. ``phi(t, u)`` is its
renormalised limit ``lim_s phi_bar(t + s, exp(-s) u)``, which turns a linear
profile of size ``exp(t)`` into a saturated one.
"""

from __future__ import annotations

import numpy as np


def phi(t, u):
    """``u / sqrt(exp(-2t) + u^2)``, with ``phi(t, 0) = 0``."""
    t = np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=float)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        out = u / np.sqrt(np.exp(-2 * t) + u * u)
    return np.where(u == 0, 0.0, out)


def _phi_bar_denominator(t, u):
    # exp(-2t) * (1 + (exp(2t) - 1) u^2), written so that large t does not overflow
    return np.exp(-2 * t) - np.expm1(-2 * t) * u * u


def phi_bar(t, u):
    """Exact reaction flow ``exp(t) u / sqrt(1 + (exp(2t) - 1) u^2)``.

    Raises ValueError where the flow blows up (only possible for ``t < 0``).
    """
    t = np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=float)
    with np.errstate(over="ignore"):
        den = _phi_bar_denominator(t, u)
    if np.any(den <= 0):
        raise ValueError("phi_bar evaluated outside its domain (backward blow-up)")
    return u / np.sqrt(den)


def phi_bar_derivs(t, u):
    """First and second ``u``-derivatives of ``phi_bar``.

    ``d1 = exp(t) A^{-3/2}`` and ``d2 = -3 u exp(t) (exp(2t) - 1) A^{-5/2}`` with
    ``A = 1 + (exp(2t) - 1) u^2``. The ratio ``d2/d1`` is ``-3u(e^{2t}-1)/A``.
    """
    t = np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=float)
    a = np.expm1(2 * t)
    A = 1 + a * u * u
    if np.any(A <= 0):
        raise ValueError("phi_bar_derivs evaluated outside the domain of phi_bar")
    d1 = np.exp(t) * A**-1.5
    d2 = -3 * u * np.exp(t) * a * A**-2.5
    return d1, d2


def apriori_bound(t):
    """Universal sup bound ``exp(t)/sqrt(exp(2t) - 1)`` for solutions at time ``t > 0``."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("the a-priori bound needs t > 0")
    return 1.0 / np.sqrt(-np.expm1(-2 * t))
