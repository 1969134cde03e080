"""Level-set mean curvature flow, nodal-line extraction and the space-time
masks that exclude a neighbourhood of the moving interface.

The level-set equation is ``w_s = Laplacian w - (grad w)^T Hess(w) grad w /
(|grad w|^2 + reg^2)`` with explicit central differences on the torus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .grid import Field, Grid

# ------------------------------------------------------------ level-set flow


@dataclass(frozen=True)
class LevelSetState:
    w: Field
    regularization: float

    @property
    def sigma(self) -> float:
        return self.w.time


def _shift(a: np.ndarray, axis: int, k: int) -> np.ndarray:
    """``a`` evaluated at index ``i + k`` along ``axis`` (periodic)."""
    return np.roll(a, -k, axis=axis)


def _derivatives(w: np.ndarray, h: float):
    d = w.ndim
    grad = [(_shift(w, a, 1) - _shift(w, a, -1)) / (2 * h) for a in range(d)]
    hess = [[None] * d for _ in range(d)]
    for a in range(d):
        hess[a][a] = (_shift(w, a, 1) - 2 * w + _shift(w, a, -1)) / h**2
        for b in range(a + 1, d):
            pp = _shift(_shift(w, a, 1), b, 1)
            pm = _shift(_shift(w, a, 1), b, -1)
            mp = _shift(_shift(w, a, -1), b, 1)
            mm = _shift(_shift(w, a, -1), b, -1)
            hess[a][b] = hess[b][a] = (pp - pm - mp + mm) / (4 * h * h)
    return grad, hess


def max_stable_step(grid: Grid) -> float:
    return grid.h**2 / (4 * grid.dim)


def _rhs_2d(w: np.ndarray, h: float, reg_factor: float) -> tuple[np.ndarray, float]:
    p = np.pad(w, 1, mode="wrap")
    c = p[1:-1, 1:-1]
    e, west = p[2:, 1:-1], p[:-2, 1:-1]
    north, south = p[1:-1, 2:], p[1:-1, :-2]
    wx = (e - west) / (2 * h)
    wy = (north - south) / (2 * h)
    wxx = (e - 2 * c + west) / (h * h)
    wyy = (north - 2 * c + south) / (h * h)
    wxy = (p[2:, 2:] - p[2:, :-2] - p[:-2, 2:] + p[:-2, :-2]) / (4 * h * h)
    g2 = wx * wx + wy * wy
    reg = reg_factor * float(np.sqrt(g2.max()))
    quad = wx * wx * wxx + 2 * wx * wy * wxy + wy * wy * wyy
    return wxx + wyy - quad / (g2 + reg * reg + 1e-300), reg


def levelset_rhs(w: np.ndarray, h: float, reg_factor: float = 1e-8) -> tuple[np.ndarray, float]:
    if w.ndim == 2:
        return _rhs_2d(w, h, reg_factor)
    grad, hess = _derivatives(w, h)
    d = w.ndim
    g2 = sum(g * g for g in grad)
    reg = reg_factor * float(np.sqrt(g2.max()))
    lap = sum(hess[a][a] for a in range(d))
    quad = sum(grad[a] * hess[a][b] * grad[b] for a in range(d) for b in range(d))
    return lap - quad / (g2 + reg * reg + 1e-300), reg


def levelset_step(state: LevelSetState, dsigma: float) -> LevelSetState:
    """One explicit Euler step; ``dsigma`` must respect ``h^2 / (4 d)``."""
    grid = state.w.grid
    if dsigma > max_stable_step(grid) * (1 + 1e-12):
        raise ValueError(f"dsigma={dsigma} exceeds the stability limit {max_stable_step(grid)}")
    rhs, reg = levelset_rhs(state.w.values, grid.h)
    w = state.w.values + dsigma * rhs
    return LevelSetState(Field(grid, w, state.w.time + dsigma), reg)


# ------------------------------------------------------------ nodal lines


@dataclass
class NodalSet:
    """Zero level set as closed polylines (unwrapped coordinates, no repeated endpoint)."""

    grid: Grid
    curves: list[np.ndarray] = field(default_factory=list)

    def _segments(self, c: np.ndarray) -> np.ndarray:
        # the closing segment of a curve that wraps the torus uses the nearest image
        seg = np.roll(c, -1, axis=0) - c
        L = self.grid.extent
        seg[-1] -= L * np.round(seg[-1] / L)
        return seg

    def length(self) -> float:
        total = 0.0
        for c in self.curves:
            seg = self._segments(c)
            total += float(np.sqrt((seg**2).sum(axis=1)).sum())
        return total

    def points(self) -> np.ndarray:
        if not self.curves:
            return np.zeros((0, 2))
        return np.vstack(self.curves)

    def dense_points(self, spacing: float) -> np.ndarray:
        """Points along every segment with at most ``spacing`` between neighbours."""
        out = []
        for c in self.curves:
            seg = self._segments(c)
            seglen = np.sqrt((seg**2).sum(axis=1))
            for p, dp, ln in zip(c, seg, seglen):
                k = max(1, int(math.ceil(ln / spacing)))
                s = np.arange(k)[:, None] / k
                out.append(p + s * dp)
        if not out:
            return np.zeros((0, 2))
        return np.vstack(out)


def extract_nodal(f: Field) -> NodalSet:
    """Marching squares on the periodic grid with linear edge interpolation.

    Cells whose corners alternate in sign are resolved with the cell-average
    rule: corners whose sign differs from the average are cut off.
    """
    grid = f.grid
    if grid.dim != 2:
        raise ValueError("nodal extraction is implemented for d = 2")
    v = f.values
    n, h = grid.n, grid.h
    pos = v > 0
    c0, c1 = pos, np.roll(pos, -1, axis=0)
    c2, c3 = np.roll(c1, -1, axis=1), np.roll(pos, -1, axis=1)
    mixed = ~((c0 == c1) & (c1 == c2) & (c2 == c3))
    cells = np.argwhere(mixed)

    def xedge(i: int, j: int) -> int:
        return (i % n) * n + (j % n)

    def yedge(i: int, j: int) -> int:
        return n * n + (i % n) * n + (j % n)

    def point(e: int) -> np.ndarray:
        if e < n * n:
            i, j = divmod(e, n)
            a, b = v[i, j], v[(i + 1) % n, j]
            return np.array([(i + a / (a - b)) * h, j * h])
        i, j = divmod(e - n * n, n)
        a, b = v[i, j], v[i, (j + 1) % n]
        return np.array([i * h, (j + a / (a - b)) * h])

    links: dict[int, list[int]] = {}
    for i, j in cells:
        corners = [pos[i, j], pos[(i + 1) % n, j], pos[(i + 1) % n, (j + 1) % n], pos[i, (j + 1) % n]]
        # edge k joins corner k and corner k+1
        edges = [xedge(i, j), yedge(i + 1, j), xedge(i, j + 1), yedge(i, j)]
        crossed = [k for k in range(4) if corners[k] != corners[(k + 1) % 4]]
        if len(crossed) == 2:
            pairs = [(edges[crossed[0]], edges[crossed[1]])]
        else:
            centre = (v[i, j] + v[(i + 1) % n, j] + v[(i + 1) % n, (j + 1) % n] + v[i, (j + 1) % n]) / 4
            if (centre > 0) == corners[0]:
                # corners 1 and 3 are isolated
                pairs = [(edges[0], edges[1]), (edges[2], edges[3])]
            else:
                pairs = [(edges[3], edges[0]), (edges[1], edges[2])]
        for a, b in pairs:
            links.setdefault(a, []).append(b)
            links.setdefault(b, []).append(a)

    curves = []
    visited: set[int] = set()
    L = grid.extent
    for start in sorted(links):
        if start in visited:
            continue
        loop = [start]
        visited.add(start)
        prev, cur = None, start
        while True:
            nxt = [e for e in links[cur] if e != prev]
            if not nxt:
                break
            # two links to the same edge happen only for degenerate 2-cell loops
            step = nxt[0]
            if step == start:
                break
            if step in visited:
                break
            loop.append(step)
            visited.add(step)
            prev, cur = cur, step
        pts = [point(loop[0])]
        for e in loop[1:]:
            p = point(e)
            p = p - L * np.round((p - pts[-1]) / L)
            pts.append(p)
        curves.append(np.asarray(pts))
    return NodalSet(grid, curves)


def distance_to_nodal(nodal: NodalSet, points: np.ndarray, spacing: float | None = None) -> np.ndarray:
    """Periodic Euclidean distance from ``points`` to the polylines."""
    grid = nodal.grid
    if not nodal.curves:
        return np.full(points.shape[:-1], np.inf)
    spacing = grid.h / 8 if spacing is None else spacing
    dense = np.mod(nodal.dense_points(spacing), grid.extent)
    tree = cKDTree(dense, boxsize=grid.extent)
    q = np.mod(points.reshape(-1, 2), grid.extent)
    dist, _ = tree.query(q)
    return dist.reshape(points.shape[:-1])


def redistance(w: Field, cap: float | None = None) -> Field:
    """Signed distance to the zero set of ``w``, keeping the sign of ``w``."""
    nodal = extract_nodal(w)
    cap = w.grid.extent if cap is None else cap
    pts = np.stack(w.grid.mesh(), axis=-1)
    dist = np.minimum(distance_to_nodal(nodal, pts), cap)
    return w.with_values(np.sign(w.values) * dist)


def fattening_ratio(w: Field) -> float:
    """Area of ``{|w| < h}`` divided by ``h`` times the nodal length.

    About 2 for a signed distance function; large values flag fattening.
    """
    nodal = extract_nodal(w)
    length = nodal.length()
    if length == 0:
        return 0.0
    h = w.grid.h
    area = np.count_nonzero(np.abs(w.values) < h) * w.grid.cell_volume
    return area / (h * length)


def levelset_evolve(
    f: Field,
    sigmas: Sequence[float],
    sigma0: float = 1.0,
    reinit_every: int = 50,
    dsigma: float | None = None,
    clamp: float = 1.0,
) -> list[Field]:
    """Level-set function at each requested rescaled time, starting at ``sigma0``.

    The initial function is ``clip(f, -clamp, clamp)``; it is redistanced at
    the start and every ``reinit_every`` steps, which leaves the zero set in
    place while keeping the gradient away from zero near it.
    """
    sigmas = [float(s) for s in sigmas]
    if any(s < sigma0 for s in sigmas) or sigmas != sorted(sigmas):
        raise ValueError("sigmas must be increasing and >= sigma0")
    grid = f.grid
    ds = 0.9 * max_stable_step(grid) if dsigma is None else dsigma
    w = Field(grid, np.clip(f.values, -clamp, clamp), sigma0)
    if reinit_every:
        w = redistance(w, cap=clamp * 4)
    state = LevelSetState(w, 0.0)
    out = []
    steps = 0
    for target in sigmas:
        while target - state.sigma > 1e-12:
            step = min(ds, target - state.sigma)
            state = levelset_step(state, step)
            steps += 1
            if reinit_every and steps % reinit_every == 0:
                state = LevelSetState(redistance(state.w, cap=clamp * 4), state.regularization)
        out.append(state.w.with_values(state.w.values, target))
    return out


def sign_map(f: Field, sigmas: Sequence[float], sigma0: float = 1.0, **kw) -> list[Field]:
    """``sgn`` of the level-set evolution of ``f`` (with ``sgn(0) = 0``)."""
    return [w.with_values(np.sign(w.values)) for w in levelset_evolve(f, sigmas, sigma0, **kw)]


# ------------------------------------------------------------ masks and oracles


def circle_oracle(R0: float, sigma: float, dim: int = 2) -> float | None:
    """Radius of a sphere moving by mean curvature after flow time ``sigma``; None once extinct."""
    r2 = R0 * R0 - 2 * (dim - 1) * sigma
    return math.sqrt(r2) if r2 > 0 else None


def window_radius(grid: Grid) -> np.ndarray:
    """``|x|`` measured from the centre of the torus."""
    return np.sqrt(sum(c**2 for c in grid.centered_mesh()))


def k_delta_space_mask(nodal: NodalSet, delta: float) -> np.ndarray:
    """``{|x| <= 1/delta, dist(x, Gamma_1) >= delta}`` on the nodal set's grid."""
    grid = nodal.grid
    pts = np.stack(grid.mesh(), axis=-1)
    return (window_radius(grid) <= 1 / delta) & (distance_to_nodal(nodal, pts) >= delta)


def k_delta_masks(
    gamma: Sequence[tuple[float, NodalSet]], delta: float, sigmas: Sequence[float]
) -> np.ndarray:
    """Space-time masks at ``sigmas``: ``|(sigma, x)| <= 1/delta``, ``sigma > 1 + delta`` and
    space-time distance at least ``delta`` from the sampled interface ``gamma``.

    ``gamma`` is a list of ``(sigma_k, nodal set)`` samples; its time spacing
    should be well below ``delta``.
    """
    grid = gamma[0][1].grid
    spacing = grid.h / 8
    big = 1e6
    cloud = [
        np.column_stack([np.full(len(p), s), np.mod(p, grid.extent)])
        for s, ns in gamma
        if len(p := ns.dense_points(spacing))
    ]
    pts = np.stack(grid.mesh(), axis=-1).reshape(-1, 2)
    r2 = window_radius(grid).ravel() ** 2
    tree = cKDTree(np.vstack(cloud), boxsize=[big, grid.extent, grid.extent]) if cloud else None
    masks = []
    for s in sigmas:
        inside = (r2 + s * s <= 1 / delta**2) & (s > 1 + delta)
        if tree is not None and inside.any():
            q = np.column_stack([np.full(len(pts), s), pts])
            dist = np.full(len(pts), np.inf)
            dist[inside], _ = tree.query(q[inside], distance_upper_bound=2 * delta)
            inside &= dist >= delta
        masks.append(inside.reshape(grid.shape))
    return np.asarray(masks)
