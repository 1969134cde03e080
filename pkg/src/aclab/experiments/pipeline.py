"""Per-replica simulation shared by the experiments.

One white noise is drawn per replica in rescaled coordinates on the finest
lattice any ``eps`` of the ladder needs. For each ``eps`` it is block-averaged
to that ``eps``'s lattice and pushed to physical units, so the limit field is
the same function for every ``eps``. The solution is computed on the fine
lattice (spacing at most ``eps/2``) up to a short hand-off time, then
restricted spectrally to a coarse lattice for the rest of the run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..fields import NoiseSpec, bargmann_fock_multiplier, coupled_pair_from_noise, make_rng
from ..grid import Field, Grid, apply_multiplier, block_average, restrict
from ..schedule import Schedule, make_schedule
from ..solver import SolverConfig, evolve, evolve_checkpoints
from ..wild import w_approx, wild_sum, wild_trajectories
from .config import ExperimentConfig


def _pow2_at_least(x: float) -> int:
    return 1 << max(3, math.ceil(math.log2(x)))


@dataclass
class Ladder:
    cfg: ExperimentConfig
    schedules: dict[float, Schedule]
    fine_n: dict[float, int]
    n_max: int
    rescaled_fine: Grid
    rescaled_coarse: Grid
    rescaled_mcf: Grid

    def physical_fine(self, eps: float) -> Grid:
        return Grid(2, self.fine_n[eps], self.cfg.rescaled_extent * self.schedules[eps].L)

    def physical_coarse(self, eps: float) -> Grid:
        return Grid(2, self.cfg.coarse_n, self.cfg.rescaled_extent * self.schedules[eps].L)


def build_ladder(cfg: ExperimentConfig, epsilons: tuple[float, ...] | None = None) -> Ladder:
    eps_list = cfg.epsilons if epsilons is None else epsilons
    schedules = {e: make_schedule(e, cfg.alpha, cfg.alpha_bar, cfg.kappa, cfg.dim) for e in eps_list}
    # physical spacing rescaled_extent * L / n must not exceed eps / 2
    fine_n = {e: max(cfg.coarse_n, _pow2_at_least(2 * cfg.rescaled_extent * schedules[e].L / e)) for e in eps_list}
    n_max = max(fine_n.values())
    return Ladder(
        cfg,
        schedules,
        fine_n,
        n_max,
        Grid(2, n_max, cfg.rescaled_extent),
        Grid(2, cfg.coarse_n, cfg.rescaled_extent),
        Grid(2, cfg.mcf_n, cfg.rescaled_extent),
    )


def replica_noise(ladder: Ladder, replica: int) -> np.ndarray:
    """Rescaled white noise (cell variance ``h^-d``) for one replica."""
    g = ladder.rescaled_fine
    rng = make_rng(ladder.cfg.seed, replica)
    return rng.standard_normal(g.shape) * g.h ** (-g.dim / 2)


def physical_noise(ladder: Ladder, xi: np.ndarray, eps: float) -> Field:
    """Same noise seen on the physical lattice of ``eps``: pooled, then scaled by ``L^{-d/2}``."""
    L = ladder.schedules[eps].L
    pooled = block_average(xi, ladder.n_max // ladder.fine_n[eps])
    return Field(ladder.physical_fine(eps), pooled * L ** (-1.0), 0.0)


def limit_field(ladder: Ladder, xi: np.ndarray, grid: Grid) -> Field:
    """Unmollified limit field ``K * xi`` restricted onto ``grid`` (rescaled units)."""
    fine = Field(ladder.rescaled_fine, xi, 1.0)
    vals = apply_multiplier(fine, bargmann_fock_multiplier(ladder.rescaled_fine, 1.0))
    return restrict(Field(ladder.rescaled_fine, vals, 1.0), grid)


@dataclass
class ReplicaRun:
    eps: float
    schedule: Schedule
    psi: Field  # coarse rescaled grid
    fields: dict[float, Field]  # physical time -> coarse physical field
    extras: dict[str, Field] = field(default_factory=dict)

    def at(self, t: float) -> Field:
        for k, v in self.fields.items():
            if abs(k - t) < 1e-9:
                return v
        raise KeyError(t)

    def rescaled(self, t: float, prefactor: float = 1.0) -> np.ndarray:
        return prefactor * self.at(t).values


def simulate(
    ladder: Ladder,
    xi: np.ndarray,
    eps: float,
    times: list[float],
    wild_times: list[float] | None = None,
    u_override: Field | None = None,
) -> ReplicaRun:
    """Solve up to every time in ``times``; optionally form the w-approximant at ``wild_times``.

    ``u_override`` replaces the noise-driven run: it is a coarse physical field
    at some time ``t0`` that is evolved deterministically.
    """
    cfg = ladder.cfg
    sch = ladder.schedules[eps]
    coarse = ladder.physical_coarse(eps)
    noise = physical_noise(ladder, xi, eps)
    eta, psi_fine = coupled_pair_from_noise(noise, NoiseSpec(eps, cfg.alpha, cfg.seed), sch)
    psi = restrict(psi_fine, ladder.rescaled_coarse)
    times = sorted(set(times))
    ramp = min(eps**2 / 4, cfg.dt)
    solver = SolverConfig(dt=cfg.dt, ramp_dt0=ramp)
    if u_override is None:
        u_h = evolve(eta, 0.0, cfg.handoff_time, solver, origin=0.0)
        u_h = restrict(u_h, coarse)
        plain = SolverConfig(dt=cfg.dt)
        fields = evolve_checkpoints(u_h, cfg.handoff_time, times, plain, origin=0.0)
    else:
        t0 = u_override.time
        fields = evolve_checkpoints(u_override, t0, times, SolverConfig(dt=cfg.dt), origin=t0)
    run = ReplicaRun(eps, sch, psi, {t: f for t, f in zip(times, fields)})
    if wild_times:
        traj = wild_trajectories(
            cfg.wild_order, eta, [sch.t1], cfg.dt, ramp_dt0=ramp, coarsen=(cfg.handoff_time, coarse)
        )
        uN = wild_sum(cfg.wild_order, traj)[0]
        for t in wild_times:
            run.extras[f"w@{t:.12g}"] = w_approx(uN, sch, t)
    return run
