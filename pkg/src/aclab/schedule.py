"""Deterministic time and length scales attached to a noise amplitude ``eps``.

The initial datum has amplitude ``eps**(d/2 - alpha)``; under the linearised
dynamics it reaches order one after ``T = (d/2 - alpha) * ln(1/eps)``. The
fronts then live on the length scale ``L = sqrt(T)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class Schedule:
    eps: float
    alpha: float
    alpha_bar: float
    kappa: float
    dim: int
    T: float
    L: float
    c_frak: float
    tau_star: float
    t_star: float
    t1: float
    t2: float
    t2_kappa: float
    t_star_kappa: float

    @property
    def log_inv_eps(self) -> float:
        return math.log(1.0 / self.eps)

    @property
    def loglog(self) -> float:
        return math.log(math.log(1.0 / self.eps))

    def physical_time(self, sigma: float) -> float:
        """PDE time ``sigma*T + tau_star`` matching rescaled time ``sigma``."""
        return sigma * self.T + self.tau_star

    def prefactor(self, sigma: float) -> float:
        """Amplitude factor ``max(exp((1 - sigma) T), 1)`` of the rescaled process."""
        return max(math.exp((1.0 - sigma) * self.T), 1.0)


def make_schedule(eps: float, alpha: float, alpha_bar: float, kappa: float = 0.0, dim: int = 2) -> Schedule:
    """Compute all derived times. Raises ValueError when the ordering t1 < t2 < t_star fails."""
    if not (0 < eps < math.exp(-1)):
        raise ValueError(f"eps must lie in (0, 1/e), got {eps}")
    if not (0 < alpha < alpha_bar < 1):
        raise ValueError(f"need 0 < alpha < alpha_bar < 1, got alpha={alpha}, alpha_bar={alpha_bar}")
    if kappa < 0:
        raise ValueError(f"kappa must be non-negative, got {kappa}")
    if dim < 2:
        raise ValueError(f"dimension must be >= 2, got {dim}")
    if dim - 2 * alpha <= 0:
        raise ValueError("need d - 2*alpha > 0")
    lg = math.log(1.0 / eps)
    llg = math.log(lg)
    T = (dim / 2 - alpha) * lg
    c_frak = dim / 4 * math.log(4 * math.pi * (dim - 2 * alpha))
    tau_star = dim / 4 * llg + c_frak
    t_star = T + tau_star
    t1 = (alpha_bar - alpha) * lg
    t2 = T - 0.5 * llg
    if not (0 < t1 < t2 < t_star):
        raise ValueError(f"time ordering violated: t1={t1:.6g}, t2={t2:.6g}, t_star={t_star:.6g}")
    return Schedule(
        eps=eps,
        alpha=alpha,
        alpha_bar=alpha_bar,
        kappa=kappa,
        dim=dim,
        T=T,
        L=math.sqrt(T),
        c_frak=c_frak,
        tau_star=tau_star,
        t_star=t_star,
        t1=t1,
        t2=t2,
        t2_kappa=T - (kappa + 0.5) * llg,
        t_star_kappa=t_star + kappa * llg,
    )
