"""Tree terms of the expansion, their truncated sum and remainder, and the
approximant used between the perturbative and the saturated regimes.

Every non-leaf term solves ``(d/dt - Laplacian - 1) X = -X1 X2 X3`` with zero
initial value. Its Duhamel integral is discretised with the trapezoidal
rule, which on a step ``[t_n, t_{n+1}]`` reads

    X_{n+1} = P1_dt (X_n - dt/2 F_n) - dt/2 F_{n+1}.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..flows import phi_bar
from ..grid import Field, Grid, apply_multiplier, heat_plus_one, k_squared, laplacian, restrict
from ..schedule import Schedule
from ..solver import refine_times
from .trees import CanonicalTreeClass, TernaryTree, canonical_class, enumerate_trees


def _closure(classes: Sequence[CanonicalTreeClass]) -> list[CanonicalTreeClass]:
    seen: dict[TernaryTree, CanonicalTreeClass] = {}
    stack = list(classes)
    while stack:
        c = stack.pop()
        if c.representative in seen:
            continue
        seen[c.representative] = c
        stack.extend(c.children)
    return sorted(seen.values())


@dataclass
class WildTrajectories:
    """Tree terms stored at the requested output times."""

    classes: list[CanonicalTreeClass]
    times: np.ndarray
    values: dict[TernaryTree, list[np.ndarray]]
    grids: list[Grid]
    nodes: np.ndarray = field(repr=False)

    def index(self, t: float) -> int:
        j = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[j] - t) > 1e-9:
            raise KeyError(f"time {t} was not an output time")
        return j

    def field(self, cls: CanonicalTreeClass | TernaryTree, t: float) -> Field:
        rep = cls.representative if isinstance(cls, CanonicalTreeClass) else cls.canonical()
        j = self.index(t)
        return Field(self.grids[j], self.values[rep][j], float(self.times[j]))

    def max_inner(self) -> int:
        return max(c.n_inner for c in self.classes)


def wild_trajectories(
    classes: int | Sequence[CanonicalTreeClass],
    eta_eps: Field,
    t_grid: Sequence[float],
    dt: float,
    ramp_dt0: float | None = None,
    coarsen: tuple[float, Grid] | None = None,
) -> WildTrajectories:
    """Integrate all requested tree terms (and their subtrees) jointly.

    ``classes`` is either a truncation order ``N`` or an explicit list. The
    output times ``t_grid`` are refined by steps of at most ``dt`` (after an
    optional geometric ramp from ``ramp_dt0``). ``coarsen=(t_c, grid)``
    restricts every term spectrally onto ``grid`` once time ``t_c`` is reached.
    """
    if isinstance(classes, int):
        classes = enumerate_trees(classes)
    classes = _closure(classes)
    t_grid = sorted(float(t) for t in t_grid)
    if t_grid[0] < 0:
        raise ValueError("output times must be non-negative")
    checkpoints = sorted(set([0.0, *t_grid] + ([coarsen[0]] if coarsen else [])))
    nodes = refine_times(checkpoints, dt, ramp_dt0)
    out_times = np.asarray(t_grid)
    wanted = set(t_grid)

    grid = eta_eps.grid
    reps = [c.representative for c in classes]
    kid_reps = {c.representative: [k.canonical() for k in c.representative.children] for c in classes}
    state = {r: (eta_eps.values.copy() if r.is_leaf else np.zeros(grid.shape)) for r in reps}

    def products(st: dict) -> dict:
        return {r: st[a] * st[b] * st[c] for r, (a, b, c) in ((r, kid_reps[r]) for r in reps if not r.is_leaf)}

    store: dict[TernaryTree, list[np.ndarray]] = {r: [] for r in reps}
    grids: list[Grid] = []

    def record() -> None:
        for r in reps:
            store[r].append(state[r].copy())
        grids.append(grid)

    if 0.0 in wanted:
        record()
    F = products(state)
    for k in range(1, len(nodes)):
        h = nodes[k] - nodes[k - 1]
        mult = np.exp(h) * np.exp(-h * k_squared(grid))
        new = {}
        for r in reps:  # sorted by size, so subtrees come first
            if r.is_leaf:
                new[r] = apply_multiplier(Field(grid, state[r]), mult)
            else:
                a, b, c = kid_reps[r]
                f_next = new[a] * new[b] * new[c]
                new[r] = apply_multiplier(Field(grid, state[r] - 0.5 * h * F[r]), mult) - 0.5 * h * f_next
        state = new
        if coarsen is not None and abs(nodes[k] - coarsen[0]) < 1e-12 and coarsen[1] != grid:
            grid = coarsen[1]
            state = {r: restrict(Field(eta_eps.grid, v), grid).values for r, v in state.items()}
        F = products(state)
        if float(nodes[k]) in wanted:
            record()
    return WildTrajectories(classes, out_times, store, grids, nodes)


def compute_X_tau(
    cls: CanonicalTreeClass | TernaryTree, eta_eps: Field, t_grid: Sequence[float], dt: float, **kw
) -> list[Field]:
    """Trajectory of a single tree term at ``t_grid``."""
    c = cls if isinstance(cls, CanonicalTreeClass) else canonical_class(cls)
    traj = wild_trajectories([c], eta_eps, t_grid, dt, **kw)
    return [traj.field(c, t) for t in traj.times]


def _sums_by_size(traj: WildTrajectories, N: int, j: int) -> list[np.ndarray]:
    """``S_k`` = sum of all ordered trees with exactly ``k`` inner nodes, for ``k <= N``."""
    shape = traj.grids[j].shape
    sums = [np.zeros(shape) for _ in range(N + 1)]
    for c in traj.classes:
        if c.n_inner <= N:
            sums[c.n_inner] += c.multiplicity * traj.values[c.representative][j]
    return sums


def _check_order(traj: WildTrajectories, N: int) -> None:
    have = {c.representative for c in traj.classes}
    need = {c.representative for c in enumerate_trees(N)}
    if not need <= have:
        raise ValueError(f"trajectories do not contain every tree up to order {N}")


def wild_sum(N: int, traj: WildTrajectories) -> list[Field]:
    """Truncated expansion ``u^N`` (sum over ordered trees with at most ``N`` inner nodes)."""
    _check_order(traj, N)
    out = []
    for j, t in enumerate(traj.times):
        out.append(Field(traj.grids[j], sum(_sums_by_size(traj, N, j)), float(t)))
    return out


def remainder_RN(N: int, traj: WildTrajectories) -> list[Field]:
    """Products ``X1 X2 X3`` of truncated trees whose combination exceeds order ``N``."""
    _check_order(traj, N)
    out = []
    for j, t in enumerate(traj.times):
        S = _sums_by_size(traj, N, j)
        total = np.zeros(traj.grids[j].shape)
        for k1, k2, k3 in itertools.product(range(N + 1), repeat=3):
            if k1 + k2 + k3 >= N:
                total += S[k1] * S[k2] * S[k3]
        out.append(Field(traj.grids[j], total, float(t)))
    return out


def wild_defect(N: int, traj: WildTrajectories) -> list[tuple[float, float]]:
    """Sup norm of ``(d/dt - Laplacian - 1) u^N + (u^N)^3 - R^N`` at interior output times.

    The time derivative is a central difference over neighbouring output
    times, so the residual is of the order of the squared spacing.
    """
    u = wild_sum(N, traj)
    R = remainder_RN(N, traj)
    res = []
    for j in range(1, len(u) - 1):
        h1 = u[j].time - u[j - 1].time
        h2 = u[j + 1].time - u[j].time
        dudt = (u[j + 1].values - u[j - 1].values) / (h1 + h2)
        lap = laplacian(u[j]).values
        r = dudt - lap - u[j].values + u[j].values ** 3 - R[j].values
        res.append((u[j].time, float(np.max(np.abs(r)))))
    return res


def w_approx(u_N_t1: Field, schedule: Schedule, t: float) -> Field:
    """``phi_bar(t - t2k, exp(-(t - t2k)) P1_{t - t1} u^N(t1))`` with ``t2k = t2_kappa``."""
    t1 = schedule.t1
    if abs(u_N_t1.time - t1) > 1e-9:
        raise ValueError("the input field must be taken at time t1")
    if t < max(t1, schedule.t2_kappa):
        raise ValueError("w_approx is defined for t >= max(t1, t2_kappa)")
    v = heat_plus_one(u_N_t1, t - t1)
    s = t - schedule.t2_kappa
    return Field(u_N_t1.grid, phi_bar(s, np.exp(-s) * v.values), t)
