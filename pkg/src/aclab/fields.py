"""Gaussian random fields: lattice white noise, mollified initial data and the
Bargmann-Fock limit field, plus ensemble covariance estimation.

The mollifier is the standard Gaussian density with identity covariance, so
``phi_eps * f`` has Fourier multiplier ``exp(-eps^2 |k|^2 / 2)``, which equals
``heat(f, eps^2 / 2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .grid import Field, Grid, apply_multiplier, gradient, heat, k_squared
from .schedule import Schedule


@dataclass(frozen=True)
class NoiseSpec:
    eps: float
    alpha: float
    seed: int

    @property
    def mollifier_width(self) -> float:
        return self.eps


@dataclass(frozen=True)
class CovarianceTarget:
    """Bargmann-Fock covariance ``sigma^{-d/2} exp(-|x|^2 / (8 sigma))``."""

    sigma: float
    dim: int = 2

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        return self.sigma ** (-self.dim / 2) * np.exp(-(r**2) / (8 * self.sigma))


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Independent generator for ``(seed, stream...)``; same key, same draws."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, stream)]))


def sample_white_noise(grid: Grid, seed: int, *stream: int) -> Field:
    """Lattice white noise: i.i.d. ``N(0, h^-d)`` per cell."""
    rng = make_rng(seed, *stream)
    vals = rng.standard_normal(grid.shape) * grid.h ** (-grid.dim / 2)
    return Field(grid, vals, 0.0, {"seed": int(seed), "stream": tuple(stream)})


def mollifier_l2_norm(dim: int) -> float:
    """``||phi||_{L^2}`` of the standard Gaussian density: ``(4 pi)^{-d/4}``."""
    return (4 * math.pi) ** (-dim / 4)


def make_eta_eps(noise: Field, eps: float, alpha: float) -> Field:
    """Initial datum ``eps^{d/2 - alpha} (phi_eps * noise)``. Requires ``eps >= 2h``."""
    grid = noise.grid
    if eps < 2 * grid.h * (1 - 1e-12):
        raise ValueError(f"mollifier not resolved: eps={eps} < 2h={2 * grid.h}")
    amp = eps ** (grid.dim / 2 - alpha)
    smoothed = heat(noise, eps**2 / 2)
    return Field(grid, amp * smoothed.values, 0.0, dict(noise.meta))


def eta_pointwise_std(eps: float, alpha: float, dim: int) -> float:
    """Continuum pointwise standard deviation ``eps^{-alpha} ||phi||_{L^2}``."""
    return eps ** (-alpha) * mollifier_l2_norm(dim)


def bargmann_fock_multiplier(grid: Grid, sigma: float) -> np.ndarray:
    """Square root of the Fourier transform of the target covariance at time ``sigma``."""
    d = grid.dim
    # FT of sigma^{-d/2} exp(-r^2/(8 sigma)) is (8 pi)^{d/2} exp(-2 sigma |k|^2)
    return (8 * math.pi) ** (d / 4) * np.exp(-sigma * k_squared(grid))


def sample_bargmann_fock(grid: Grid, target: CovarianceTarget, seed: int, *stream: int) -> Field:
    """Exact spectral sample of the stationary field with covariance ``target``."""
    if grid.extent < 20 * math.sqrt(8 * target.sigma):
        raise ValueError("torus too small: need extent >= 20 sqrt(8 sigma)")
    noise = sample_white_noise(grid, seed, *stream)
    vals = apply_multiplier(noise, bargmann_fock_multiplier(grid, target.sigma))
    return Field(grid, vals, target.sigma, dict(noise.meta))


def coupling_field(noise: Field, eps: float, schedule: Schedule, finite_eps: bool = False) -> np.ndarray:
    """Values of the coupled Gaussian field at the physical nodes.

    With ``finite_eps=False`` this is ``K * phi_eps * eta`` evaluated at ``x L``
    for the limit kernel ``K``, which in physical units is
    ``(8 pi T)^{d/4} P_T (phi_eps * eta)``. With ``finite_eps=True`` the heat
    time is ``t_star`` instead, which reproduces the linear part of the
    solution at ``t_star`` exactly.
    """
    d = noise.grid.dim
    amp = (8 * math.pi * schedule.T) ** (d / 4)
    t = schedule.t_star if finite_eps else schedule.T
    return amp * heat(noise, t + eps**2 / 2).values


def coupled_pair_from_noise(noise: Field, spec: NoiseSpec, schedule: Schedule) -> tuple[Field, Field]:
    """``(eta_eps, psi)`` built from one noise; ``psi`` lives on the rescaled grid."""
    eta = make_eta_eps(noise, spec.eps, spec.alpha)
    rescaled = noise.grid.scaled(1.0 / schedule.L)
    psi = Field(rescaled, coupling_field(noise, spec.eps, schedule), 1.0, dict(noise.meta))
    return eta, psi


def coupled_pair(grid: Grid, spec: NoiseSpec, schedule: Schedule) -> tuple[Field, Field]:
    """Sample ``eta_eps`` on ``grid`` and the coupled limit field from the same noise."""
    if not math.isclose(spec.eps, schedule.eps) or not math.isclose(spec.alpha, schedule.alpha):
        raise ValueError("noise spec and schedule disagree on eps/alpha")
    return coupled_pair_from_noise(sample_white_noise(grid, spec.seed), spec, schedule)


def linear_part_correlation(schedule: Schedule) -> float:
    """Exact correlation between ``P1_{t_star} eta_eps`` and the coupled field at one point."""
    e2 = schedule.eps**2
    a = 2 * schedule.t_star + e2
    b = 2 * schedule.T + e2
    c = schedule.t_star + schedule.T + e2
    return (math.sqrt(a * b) / c) ** (schedule.dim / 2)


# ----------------------------------------------------------------- covariance


def lag_products(values: np.ndarray) -> np.ndarray:
    """Periodic autocorrelation ``mean_x f(x) f(x + lag)`` for all lags at once."""
    fh = np.fft.rfftn(values)
    axes = tuple(range(values.ndim))
    return np.fft.irfftn(fh * np.conj(fh), s=values.shape, axes=axes) / values.size


@dataclass
class CovarianceAccumulator:
    """Streaming per-replica statistics for pooled covariance estimation.

    Each replica contributes its spatial mean and its raw lag products at the
    requested lattice offsets. The pooled ensemble mean is subtracted at the
    end, and standard errors come from a leave-one-replica-out jackknife.
    """

    lags: tuple[tuple[int, ...], ...]
    axis_average: bool = False

    def __post_init__(self) -> None:
        self.means: list[float] = []
        self.products: list[np.ndarray] = []

    def _at(self, prod: np.ndarray, lag: tuple[int, ...]) -> float:
        if not self.axis_average:
            return float(prod[lag])
        # average over the axis permutations of the offset (isotropic fields)
        perms = {lag[k:] + lag[:k] for k in range(len(lag))}
        return float(np.mean([prod[p] for p in perms]))

    def add(self, values: np.ndarray) -> None:
        prod = lag_products(values)
        self.means.append(float(values.mean()))
        self.products.append(np.array([self._at(prod, lag) for lag in self.lags]))

    def __len__(self) -> int:
        return len(self.means)

    def estimates(self) -> tuple[np.ndarray, np.ndarray]:
        if len(self) < 2:
            raise ValueError("need at least two replicas for jackknife errors")
        m = np.asarray(self.means)
        p = np.vstack(self.products)
        R = len(m)

        def cov(mask: np.ndarray) -> np.ndarray:
            mu = m[mask].mean()
            # mean_x (f - mu)(f(. + lag) - mu) = P - 2 mu fbar + mu^2 on the torus
            return (p[mask] - 2 * mu * m[mask, None] + mu**2).mean(axis=0)

        full = cov(np.ones(R, dtype=bool))
        loo = np.empty((R, len(self.lags)))
        for r in range(R):
            mask = np.ones(R, dtype=bool)
            mask[r] = False
            loo[r] = cov(mask)
        se = np.sqrt((R - 1) / R * ((loo - loo.mean(axis=0)) ** 2).sum(axis=0))
        return full, se


def empirical_covariance(
    samples: Sequence[Field], lags: Iterable[tuple[int, ...]], blocks: int = 8
) -> dict[tuple[int, ...], tuple[float, float]]:
    """Pooled spatial and ensemble covariance at lattice ``lags``, with jackknife SE.

    A single sample is split into ``blocks`` slabs along the first axis so that
    a standard error is still available.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("no samples")
    lags = tuple(tuple(int(v) for v in lag) for lag in lags)
    acc = CovarianceAccumulator(lags)
    if len(samples) == 1:
        vals = samples[0].values
        mu = vals.mean()
        n = vals.shape[0]
        if n % blocks:
            raise ValueError("grid size must be divisible by the number of blocks")
        shifted = [np.roll(vals, tuple(-v for v in lag), axis=tuple(range(vals.ndim))) for lag in lags]
        est_blocks = []
        for b in range(blocks):
            sl = slice(b * n // blocks, (b + 1) * n // blocks)
            est_blocks.append([((vals[sl] - mu) * (s[sl] - mu)).mean() for s in shifted])
        e = np.asarray(est_blocks)
        full = e.mean(axis=0)
        loo = (e.sum(axis=0) - e) / (blocks - 1)
        se = np.sqrt((blocks - 1) / blocks * ((loo - loo.mean(axis=0)) ** 2).sum(axis=0))
    else:
        for s in samples:
            acc.add(s.values)
        full, se = acc.estimates()
    return {lag: (float(full[i]), float(se[i])) for i, lag in enumerate(lags)}


def nodal_gradient_stats(f: Field) -> dict[str, float]:
    """Gradient magnitude at sign changes between neighbouring nodes.

    Returns the minimum and the 1st percentile of ``|grad f|`` linearly
    interpolated to each crossing, together with the crossing count.
    """
    gn = np.sqrt(sum(g.values**2 for g in gradient(f)))
    vals = f.values
    mags = []
    for axis in range(vals.ndim):
        nb = np.roll(vals, -1, axis=axis)
        cross = (vals * nb) < 0
        if not np.any(cross):
            continue
        w = vals[cross] / (vals[cross] - nb[cross])
        gnb = np.roll(gn, -1, axis=axis)
        mags.append((1 - w) * gn[cross] + w * gnb[cross])
    if not mags:
        return {"count": 0, "min": math.inf, "p01": math.inf}
    allm = np.concatenate(mags)
    return {"count": int(allm.size), "min": float(allm.min()), "p01": float(np.percentile(allm, 1))}
