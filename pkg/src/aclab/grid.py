"""Periodic grids, immutable fields and Fourier-multiplier operators.

All spectral operators use numpy's real FFT. A multiplier ``m(k)`` is the
continuous Fourier symbol evaluated at the lattice wavenumbers
``k = 2*pi*m/extent`` with ``m`` in the symmetric range, so ``heat`` is the
exact semigroup of the discretised Laplacian symbol ``-|k|^2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on the torus ``[0, extent)^dim`` with ``n`` points per axis."""

    dim: int
    n: int
    extent: float

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.n < 2 or self.n % 2:
            raise ValueError(f"n must be an even integer >= 2, got {self.n}")
        if not np.isfinite(self.extent) or self.extent <= 0:
            raise ValueError(f"extent must be positive and finite, got {self.extent}")

    @property
    def h(self) -> float:
        return self.extent / self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def cell_volume(self) -> float:
        return self.h**self.dim

    def coords(self) -> np.ndarray:
        """1-D node coordinates ``i*h``."""
        return np.arange(self.n) * self.h

    def mesh(self) -> tuple[np.ndarray, ...]:
        c = self.coords()
        return tuple(np.meshgrid(*([c] * self.dim), indexing="ij"))

    def centered_mesh(self) -> tuple[np.ndarray, ...]:
        """Coordinates relative to the torus centre, in ``[-extent/2, extent/2)``."""
        c = self.coords() - self.extent / 2
        return tuple(np.meshgrid(*([c] * self.dim), indexing="ij"))

    def wavenumbers(self) -> np.ndarray:
        """Wavenumbers ``2*pi*m/extent`` in numpy FFT order (``k[0] == 0``)."""
        return 2 * np.pi * np.fft.fftfreq(self.n, d=self.h)

    def scaled(self, factor: float) -> "Grid":
        """Same lattice, coordinates multiplied by ``factor``."""
        return Grid(self.dim, self.n, self.extent * factor)


@lru_cache(maxsize=32)
def _rwavenumbers(grid: Grid) -> tuple[np.ndarray, ...]:
    """Broadcastable wavenumber arrays for the rfft layout (last axis halved)."""
    full = grid.wavenumbers()
    half = 2 * np.pi * np.fft.rfftfreq(grid.n, d=grid.h)
    out = []
    for axis in range(grid.dim):
        k = half if axis == grid.dim - 1 else full
        shape = [1] * grid.dim
        shape[axis] = k.size
        out.append(k.reshape(shape))
    return tuple(out)


@lru_cache(maxsize=32)
def _rk2(grid: Grid) -> np.ndarray:
    ks = _rwavenumbers(grid)
    total = ks[0] ** 2
    for k in ks[1:]:
        total = total + k**2
    return total


def k_squared(grid: Grid) -> np.ndarray:
    """``|k|^2`` on the rfft layout of ``grid``."""
    return _rk2(grid)


@dataclass(frozen=True)
class Field:
    """Real scalar field on a grid at a given time. Values are read-only."""

    grid: Grid
    values: np.ndarray
    time: float = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=np.float64, copy=True)
        if vals.shape != self.grid.shape:
            raise ValueError(f"values shape {vals.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def with_values(self, values: np.ndarray, time: float | None = None) -> "Field":
        return Field(self.grid, values, self.time if time is None else time, dict(self.meta))

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))


def make_grid(dim: int, n: int, extent: float) -> Grid:
    """Build a periodic grid with ``n`` a power of two, at least 8."""
    n = int(n)
    if n < 8 or n & (n - 1):
        raise ValueError(f"n must be a power of two >= 8, got {n}")
    return Grid(int(dim), n, float(extent))


def apply_multiplier(f: Field, multiplier: np.ndarray) -> np.ndarray:
    """Apply a real Fourier multiplier given on the rfft layout; returns values."""
    axes = tuple(range(f.grid.dim))
    fh = np.fft.rfftn(f.values, axes=axes)
    return np.fft.irfftn(fh * multiplier, s=f.grid.shape, axes=axes)


def heat_multiplier(grid: Grid, t: float) -> np.ndarray:
    return np.exp(-t * k_squared(grid))


def heat(f: Field, t: float) -> Field:
    """Heat semigroup ``exp(t*Laplacian)`` applied spectrally. ``t >= 0``."""
    if t < 0:
        raise ValueError(f"heat time must be non-negative, got {t}")
    if t == 0:
        return f.with_values(f.values)
    return f.with_values(apply_multiplier(f, heat_multiplier(f.grid, t)), f.time + t)


def heat_plus_one(f: Field, t: float) -> Field:
    """Semigroup of ``Laplacian + 1``: ``exp(t) * heat(f, t)``."""
    g = heat(f, t)
    return g.with_values(np.exp(t) * g.values)


def _odd_derivative_multiplier(grid: Grid, axis: int) -> np.ndarray:
    k = _rwavenumbers(grid)[axis].copy()
    # the Nyquist mode of an odd derivative is not real-representable; drop it
    nyq = np.isclose(np.abs(k), np.pi / grid.h)
    k[nyq] = 0.0
    return 1j * k


def gradient(f: Field) -> tuple[Field, ...]:
    """Spectral partial derivatives, one field per axis."""
    axes = tuple(range(f.grid.dim))
    fh = np.fft.rfftn(f.values, axes=axes)
    out = []
    for axis in axes:
        m = _odd_derivative_multiplier(f.grid, axis)
        out.append(f.with_values(np.fft.irfftn(fh * m, s=f.grid.shape, axes=axes)))
    return tuple(out)


def divergence(components: tuple[Field, ...]) -> Field:
    grid = components[0].grid
    axes = tuple(range(grid.dim))
    total = np.zeros(np.fft.rfftn(components[0].values, axes=axes).shape, dtype=complex)
    for axis, c in enumerate(components):
        total += np.fft.rfftn(c.values, axes=axes) * _odd_derivative_multiplier(grid, axis)
    return components[0].with_values(np.fft.irfftn(total, s=grid.shape, axes=axes))


def laplacian(f: Field) -> Field:
    return f.with_values(apply_multiplier(f, -k_squared(f.grid)))


def gradient_norm(f: Field) -> np.ndarray:
    return np.sqrt(sum(g.values**2 for g in gradient(f)))


def restrict(f: Field, coarse: Grid) -> Field:
    """Spectral truncation of ``f`` onto a coarser grid covering the same torus.

    Modes beyond the coarse Nyquist frequency are discarded, as is the coarse
    Nyquist mode itself. Exact for band-limited fields.
    """
    fine = f.grid
    if coarse.dim != fine.dim or not np.isclose(coarse.extent, fine.extent, rtol=1e-12):
        raise ValueError("coarse grid must share dimension and extent")
    if coarse.n > fine.n:
        raise ValueError("restriction target must not be finer than the source")
    if coarse.n == fine.n:
        return Field(coarse, f.values, f.time, dict(f.meta))
    d = fine.dim
    fh = np.fft.fftn(f.values)
    half = coarse.n // 2
    idx = np.r_[0:half, fine.n - half + 1 : fine.n]
    sub = fh[np.ix_(*([idx] * d))]
    # rebuild in coarse FFT order with the Nyquist slot zeroed
    ch = np.zeros(coarse.shape, dtype=complex)
    cidx = np.r_[0:half, half + 1 : coarse.n]
    ch[np.ix_(*([cidx] * d))] = sub
    vals = np.fft.ifftn(ch).real * (coarse.n / fine.n) ** d
    return Field(coarse, vals, f.time, dict(f.meta))


def block_average(values: np.ndarray, factor: int) -> np.ndarray:
    """Average non-overlapping ``factor^d`` blocks (used to coarsen white noise)."""
    if factor == 1:
        return values
    d = values.ndim
    n = values.shape[0]
    if n % factor:
        raise ValueError("grid size must be divisible by the pooling factor")
    m = n // factor
    shape = []
    for _ in range(d):
        shape += [m, factor]
    return values.reshape(shape).mean(axis=tuple(range(1, 2 * d, 2)))


def interpolate(f: Field, points: np.ndarray) -> np.ndarray:
    """Periodic multilinear interpolation of ``f`` at ``points`` (shape ``(..., dim)``)."""
    grid = f.grid
    p = np.asarray(points, dtype=float) / grid.h
    base = np.floor(p).astype(int)
    frac = p - base
    out = np.zeros(p.shape[:-1])
    for corner in range(2**grid.dim):
        w = np.ones(p.shape[:-1])
        idx = []
        for axis in range(grid.dim):
            bit = (corner >> axis) & 1
            w = w * (frac[..., axis] if bit else 1 - frac[..., axis])
            idx.append((base[..., axis] + bit) % grid.n)
        out += w * f.values[tuple(idx)]
    return out
