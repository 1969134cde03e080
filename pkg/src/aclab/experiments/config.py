"""Experiment configuration: ``key = value`` files with ``#`` comments."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, fields
from pathlib import Path

EXPERIMENTS = ("E1", "E2", "E3", "E4", "BOUNDS")


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "E1"
    epsilons: tuple[float, ...] = (0.1, 0.05, 0.02)
    alpha: float = 0.5
    alpha_bar: float = 0.75
    kappa: float = 0.2
    dim: int = 2
    seed: int = 20240601
    replicas: int = 100
    # rescaled torus side; physical side is this times L for each eps
    rescaled_extent: float = 14.0
    coarse_n: int = 256
    mcf_n: int = 128
    dt: float = 0.01
    handoff_time: float = 0.02
    e1_sigmas: tuple[float, ...] = (0.5,)
    e4_sigmas: tuple[float, ...] = (1.25, 1.5, 2.0)
    lags: tuple[float, ...] = (0.0, 0.5, 1.0, 2.0, 3.0)
    e2_times: tuple[float, ...] = (-2.0, 0.0, 2.0)
    delta: float = 0.2
    deltas: tuple[float, ...] = (0.2, 0.4)
    zeta: float = 0.2
    wild_order: int = 1
    circle_radius: float = 3.0
    circle_sigmas: tuple[float, ...] = (1.5, 2.0)
    circle_eps: float = 0.05
    # BOUNDS only
    bounds_extent: float = 6.4
    bounds_max_order: int = 3
    bounds_fractions: tuple[float, ...] = (0.25, 0.5, 0.75, 1.0)
    out: str = "out"

    def validate(self) -> "ExperimentConfig":
        errs = []
        if self.experiment not in EXPERIMENTS:
            errs.append(f"unknown experiment {self.experiment!r}")
        if not self.epsilons or any(not (0 < e < math.exp(-1)) for e in self.epsilons):
            errs.append("epsilons must lie in (0, 1/e)")
        if list(self.epsilons) != sorted(self.epsilons, reverse=True) or len(set(self.epsilons)) != len(self.epsilons):
            errs.append("epsilons must be strictly decreasing")
        if not (0 < self.alpha < self.alpha_bar < 1):
            errs.append("need 0 < alpha < alpha_bar < 1")
        if self.kappa < 0:
            errs.append("kappa must be non-negative")
        if self.dim != 2:
            errs.append("experiments are implemented for dim = 2")
        if self.replicas < 2:
            errs.append("replicas must be >= 2")
        for name in ("coarse_n", "mcf_n"):
            n = getattr(self, name)
            if n < 8 or n & (n - 1):
                errs.append(f"{name} must be a power of two >= 8")
        if self.coarse_n % self.mcf_n:
            errs.append("mcf_n must divide coarse_n")
        if self.rescaled_extent <= 0 or self.bounds_extent <= 0:
            errs.append("extents must be positive")
        if not (0 < self.dt <= 0.1):
            errs.append("dt must lie in (0, 0.1]")
        if not (0 < self.handoff_time < 1):
            errs.append("handoff_time must lie in (0, 1)")
        if not (0 < self.delta < 1) or any(not (0 < d < 1) for d in self.deltas):
            errs.append("delta values must lie in (0, 1)")
        if self.zeta <= 0:
            errs.append("zeta must be positive")
        if not (0 <= self.wild_order <= 4):
            errs.append("wild_order must lie in [0, 4]")
        if not (0 <= self.bounds_max_order <= 4):
            errs.append("bounds_max_order must lie in [0, 4]")
        if any(not (0 < s < 1) for s in self.e1_sigmas):
            errs.append("e1_sigmas must lie in (0, 1)")
        if any(s <= 1 for s in self.e4_sigmas) or any(s <= 1 for s in self.circle_sigmas):
            errs.append("e4_sigmas and circle_sigmas must exceed 1")
        if not (0 < self.circle_radius < self.rescaled_extent / 2):
            errs.append("circle_radius must lie in (0, rescaled_extent / 2)")
        elif self.circle_sigmas and max(self.circle_sigmas) - 1 >= self.circle_radius**2 / 2:
            errs.append("circle_sigmas must end before the circle's extinction at 1 + circle_radius^2 / 2")
        if any(not (0 < f <= 1) for f in self.bounds_fractions):
            errs.append("bounds_fractions must lie in (0, 1]")
        if errs:
            raise ValueError("; ".join(errs))
        return self

    def replace(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, **kw)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def fingerprint(self) -> str:
        d = self.to_dict()
        d.pop("out")
        blob = json.dumps(d, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _convert(name: str, raw: str, current):
    raw = raw.strip()
    try:
        if isinstance(current, tuple):
            items = [x for x in raw.replace(";", ",").split(",") if x.strip()]
            return tuple(float(x) for x in items)
        if isinstance(current, bool):
            return raw.lower() in ("1", "true", "yes", "on")
        if isinstance(current, int):
            return int(raw)
        if isinstance(current, float):
            return float(raw)
    except ValueError as exc:
        raise ValueError(f"bad value for {name}: {raw!r}") from exc
    return raw


def parse_config_text(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    base = base or ExperimentConfig()
    known = {f.name for f in fields(ExperimentConfig)}
    updates = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        updates[key] = _convert(key, value, getattr(base, key))
    return base.replace(**updates)


def load_config(path: str | Path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    return parse_config_text(Path(path).read_text(), base)


def default_config(experiment: str) -> ExperimentConfig:
    """Per-experiment defaults."""
    cfg = ExperimentConfig(experiment=experiment)
    if experiment in ("E2", "E3", "E4"):
        cfg = cfg.replace(replicas=40)
    elif experiment == "BOUNDS":
        cfg = cfg.replace(epsilons=(0.1, 0.05), replicas=200)
    return cfg


__all__ = ["EXPERIMENTS", "ExperimentConfig", "default_config", "load_config", "parse_config_text"]
