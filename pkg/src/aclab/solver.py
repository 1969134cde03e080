"""Strang-split pseudo-spectral solver for ``du/dt = Laplacian u + u - u^3``.

One step is ``R(dt/2) o H(dt) o R(dt/2)`` where ``H`` is the spectral heat
flow and ``R`` the exact pointwise reaction flow. Since ``R`` maps any value
into the a-priori envelope and ``H`` does not increase the sup norm, the
discrete solution respects the universal bound at every step boundary.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .flows import apriori_bound, phi_bar
from .grid import Field, apply_multiplier, heat_multiplier, interpolate
from .schedule import Schedule

__all__ = [
    "MonitorViolation",
    "SolverConfig",
    "Trajectory",
    "apriori_bound",
    "evolve",
    "evolve_checkpoints",
    "refine_times",
    "rescaled_view",
    "step_strang",
    "time_nodes",
    "travelling_wave",
]


class MonitorViolation(RuntimeError):
    """Raised when ``max|u|`` exceeds the a-priori envelope plus tolerance."""

    def __init__(self, step: int, time: float, sup: float, bound: float):
        super().__init__(f"step {step} (t={time:.6g}): max|u|={sup:.10g} exceeds bound {bound:.10g}")
        self.step = step
        self.time = time
        self.sup = sup
        self.bound = bound


@dataclass(frozen=True)
class SolverConfig:
    """Time stepping parameters.

    ``ramp_dt0`` enables a geometric start-up: steps ``dt0, 2 dt0, 4 dt0, ...``
    until ``dt`` is reached, which resolves the fast initial smoothing of
    rough data without paying the small step over the whole run.
    """

    dt: float = 0.01
    monitor_tolerance: float = 1e-6
    ramp_dt0: float | None = None
    monitor: bool = True

    def __post_init__(self) -> None:
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.ramp_dt0 is not None and not (0 < self.ramp_dt0 <= self.dt):
            raise ValueError("ramp_dt0 must lie in (0, dt]")


def refine_times(checkpoints: Sequence[float], dt: float, ramp_dt0: float | None = None) -> np.ndarray:
    """Step boundaries through increasing ``checkpoints`` (all of which are nodes).

    Steps have size ``dt`` except for the optional geometric ramp at the start.
    """
    checkpoints = [float(c) for c in checkpoints]
    if any(b < a for a, b in zip(checkpoints, checkpoints[1:])):
        raise ValueError("checkpoint times must be non-decreasing")
    nodes = [checkpoints[0]]
    step = ramp_dt0 if ramp_dt0 is not None else dt
    for a, b in zip(checkpoints, checkpoints[1:]):
        t = a
        while b - t > 1e-12 * max(1.0, abs(b)):
            s = min(step, b - t)
            # avoid leaving a sliver step at the end of a segment
            if b - (t + s) < 1e-9 * dt:
                s = b - t
            t = t + s
            nodes.append(t)
            step = min(2 * step, dt)
        nodes[-1] = b
    return np.asarray(nodes)


def time_nodes(t_from: float, t_to: float, dt: float, ramp_dt0: float | None = None) -> np.ndarray:
    """Step boundaries from ``t_from`` to ``t_to`` with optional geometric ramp."""
    if t_to < t_from:
        raise ValueError("t_to must be >= t_from")
    return refine_times([t_from, t_to], dt, ramp_dt0)


def step_strang(u: Field, dt: float) -> Field:
    """One Strang step of length ``dt``."""
    half = phi_bar(dt / 2, u.values)
    diffused = apply_multiplier(u.with_values(half), heat_multiplier(u.grid, dt))
    return u.with_values(phi_bar(dt / 2, diffused), u.time + dt)


def _march(u0: Field, nodes: np.ndarray, cfg: SolverConfig, origin: float) -> Iterator[Field]:
    u = u0
    for k in range(1, len(nodes)):
        u = step_strang(u, nodes[k] - nodes[k - 1])
        u = u.with_values(u.values, float(nodes[k]))
        if cfg.monitor and nodes[k] > origin:
            bound = float(apriori_bound(nodes[k] - origin))
            sup = u.sup()
            if sup > bound + cfg.monitor_tolerance:
                raise MonitorViolation(k, float(nodes[k]), sup, bound)
        yield u


def evolve(u0: Field, t_from: float, t_to: float, cfg: SolverConfig, origin: float | None = None) -> Field:
    """Evolve ``u0`` (taken at time ``t_from``) to ``t_to``.

    ``origin`` is the time at which the solution was arbitrary data; the
    a-priori monitor uses the elapsed time since then (default ``t_from``).
    """
    nodes = time_nodes(t_from, t_to, cfg.dt, cfg.ramp_dt0)
    u = u0.with_values(u0.values, t_from)
    for u in _march(u, nodes, cfg, t_from if origin is None else origin):
        pass
    return u


def evolve_checkpoints(
    u0: Field, t_from: float, times: Sequence[float], cfg: SolverConfig, origin: float | None = None
) -> list[Field]:
    """Evolve through increasing ``times`` and return the field at each one."""
    if times and times[0] < t_from:
        raise ValueError("checkpoint times must be >= t_from")
    nodes = refine_times([t_from, *times], cfg.dt, cfg.ramp_dt0)
    wanted = {float(t): i for i, t in enumerate(times)}
    out: list[Field | None] = [None] * len(times)
    u = u0.with_values(u0.values, t_from)
    for t in times:
        if t == t_from:
            out[wanted[float(t)]] = u
    for u in _march(u, nodes, cfg, t_from if origin is None else origin):
        i = wanted.get(float(u.time))
        if i is not None:
            out[i] = u
    return out  # type: ignore[return-value]


class Trajectory:
    """Time-indexed fields on a common grid, interpolated linearly in time."""

    def __init__(self, fields: Sequence[Field]):
        if not fields:
            raise ValueError("empty trajectory")
        fields = sorted(fields, key=lambda f: f.time)
        grid = fields[0].grid
        if any(f.grid != grid for f in fields):
            raise ValueError("all fields in a trajectory must share a grid")
        self.fields = list(fields)
        self.times = [f.time for f in fields]
        self.grid = grid

    def at(self, t: float) -> np.ndarray:
        if t < self.times[0] - 1e-12 or t > self.times[-1] + 1e-12:
            raise ValueError(f"time {t} outside stored range [{self.times[0]}, {self.times[-1]}]")
        j = bisect.bisect_left(self.times, t)
        if j < len(self.times) and abs(self.times[j] - t) < 1e-12:
            return self.fields[j].values
        if j == 0:
            return self.fields[0].values
        j = min(j, len(self.times) - 1)
        t0, t1 = self.times[j - 1], self.times[j]
        w = (t - t0) / (t1 - t0)
        return (1 - w) * self.fields[j - 1].values + w * self.fields[j].values


def rescaled_view(traj: Trajectory, sigma: float, schedule: Schedule, x: np.ndarray) -> np.ndarray:
    """``max(exp((1-sigma) T), 1) * u(sigma T + tau_star, x L)`` at rescaled points ``x``.

    Negative physical times use the initial datum.
    """
    t = max(schedule.physical_time(sigma), 0.0)
    vals = traj.at(t)
    f = Field(traj.grid, vals, t)
    return schedule.prefactor(sigma) * interpolate(f, np.asarray(x, dtype=float) * schedule.L)


def rescaled_field(u: Field, sigma: float, schedule: Schedule) -> Field:
    """Whole-grid rescaled view: same nodes, coordinates divided by ``L``."""
    return Field(u.grid.scaled(1.0 / schedule.L), schedule.prefactor(sigma) * u.values, sigma, dict(u.meta))


def travelling_wave(x):
    """Standing front ``tanh(x / sqrt 2)`` of ``q'' + q - q^3 = 0``."""
    return np.tanh(np.asarray(x, dtype=float) / math.sqrt(2.0))
