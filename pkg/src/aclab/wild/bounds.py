"""Closed-form moment bounds for tree terms, with all constants set to one
unless passed explicitly."""

from __future__ import annotations

import math
from dataclasses import dataclass


def gamma_a(a: float, t: float) -> float:
    """``t`` for ``t <= 1``; ``1 + (t^{1-a} - 1)/(1-a)`` (or ``1 + ln t`` if ``a == 1``) beyond."""
    if a <= 0 or t < 0:
        raise ValueError(f"gamma_a needs a > 0 and t >= 0, got a={a}, t={t}")
    if t <= 1:
        return float(t)
    if a == 1:
        return 1.0 + math.log(t)
    return 1.0 + (t ** (1 - a) - 1) / (1 - a)


@dataclass(frozen=True)
class BoundInputs:
    eps: float
    alpha: float
    dim: int
    t: float
    n_leaves: int = 1
    const: float = 1.0

    def __post_init__(self) -> None:
        if self.t < 0:
            raise ValueError("t must be non-negative")
        if not (0 < self.eps < 1):
            raise ValueError("eps must lie in (0, 1)")
        if self.n_leaves < 1 or self.n_leaves % 2 == 0:
            raise ValueError("a ternary tree has an odd number of leaves")


def _floor_time(b: BoundInputs) -> float:
    return max(b.t, b.eps**2)


def _growth(b: BoundInputs) -> float:
    """Per-extra-leaf factor ``e^t eps^{1-alpha} Gamma_{d/2}(t/eps^2)^{1/2}``."""
    return math.exp(b.t) * b.eps ** (1 - b.alpha) * math.sqrt(gamma_a(b.dim / 2, b.t / b.eps**2))


def s_eps(b: BoundInputs) -> float:
    """Second-moment envelope of the linear term: ``c^2 (e^t eps^{d/2-alpha})^2 (t v eps^2)^{-d/2}``."""
    amp = b.const * math.exp(b.t) * b.eps ** (b.dim / 2 - b.alpha)
    return amp**2 * _floor_time(b) ** (-b.dim / 2)


def moment_bound(b: BoundInputs) -> float:
    """L2 bound for a tree with ``n_leaves`` leaves."""
    base = _floor_time(b) ** (-b.dim / 4) * math.exp(b.t) * b.eps ** (b.dim / 2 - b.alpha)
    return b.const * base * _growth(b) ** (b.n_leaves - 1)


def gradient_moment_bound(b: BoundInputs) -> float:
    """L2 bound for the spatial gradient: an extra ``(t v eps^2)^{-1/2}``."""
    return moment_bound(b) / math.sqrt(_floor_time(b))


def b_eps(b: BoundInputs) -> float:
    """Envelope for the first cubic tree; its second moment is at most ``15 * b_eps``.

    ``(t v eps^2)^{-d/2} (c e^t eps^{d/2-alpha})^6 (int_0^t (s v eps^2)^{-d/2} ds)^2``.
    """
    e2 = b.eps**2
    d = b.dim
    # int_0^t max(s, e2)^{-d/2} ds = e2^{1-d/2} Gamma_{d/2}(t / e2)
    integral = e2 ** (1 - d / 2) * gamma_a(d / 2, b.t / e2)
    amp = b.const * math.exp(b.t) * b.eps ** (d / 2 - b.alpha)
    return _floor_time(b) ** (-d / 2) * amp**6 * integral**2


def remainder_bound(b: BoundInputs, order: int) -> float:
    """Bound on ``u - u^N``: ``eps^{2-3 alpha} e^{3t} (e^t eps^{1-alpha} Gamma^{3/2})^{N-1}``.

    Stated for ``d = 2``; ``Gamma`` is ``Gamma_{d/2}(t/eps^2)``.
    """
    g = gamma_a(b.dim / 2, b.t / b.eps**2)
    factor = math.exp(b.t) * b.eps ** (1 - b.alpha) * g**1.5
    return b.const * b.eps ** (2 - 3 * b.alpha) * math.exp(3 * b.t) * factor ** (order - 1)
