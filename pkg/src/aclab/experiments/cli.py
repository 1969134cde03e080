"""Command line interface.

Exit codes: 0 success, 1 invalid input or configuration, 2 runtime failure,
3 an experiment ran but at least one of its acceptance criteria failed.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from ..fields import NoiseSpec, coupled_pair
from ..grid import make_grid
from ..mcf import extract_nodal, levelset_evolve
from ..schedule import make_schedule
from ..solver import SolverConfig, evolve
from . import io
from .config import EXPERIMENTS, ExperimentConfig, default_config, load_config
from .runs import run_experiment

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME, EXIT_CRITERIA = 0, 1, 2, 3


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits with 2 by default
        raise UsageError(message)


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--replicas", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="aclab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("schedule", help="print the derived times for one eps")
    p.add_argument("--eps", "--epsilon", dest="eps", type=float, required=True)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--alpha-bar", type=float, default=0.75)
    p.add_argument("--kappa", type=float, default=0.0)
    p.add_argument("--dim", "--d", dest="dim", type=int, default=2)
    p.add_argument("--json", action="store_true", help="print JSON instead of a table")

    p = sub.add_parser("sample", help="sample the initial datum and its coupled limit field")
    _add_common(p)
    p.add_argument("--eps", "--epsilon", dest="eps", type=float, required=True)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--alpha-bar", type=float, default=0.75)
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--extent", type=float, default=None, help="physical torus side (default: n * eps / 2)")

    p = sub.add_parser("evolve", help="evolve an AFLD field")
    _add_common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--t-to", type=float, required=True)
    p.add_argument("--dt", type=float, default=0.01)
    p.add_argument("--ramp-dt0", type=float, default=None)

    p = sub.add_parser("wild", help="moment bound tables for the tree expansion")
    _add_common(p)
    p.add_argument("--config", default=None)
    p.add_argument("--epsilons", type=_floats, default=None)
    p.add_argument("--order", type=int, default=None)

    p = sub.add_parser("mcf", help="level-set flow of an AFLD field; writes sign maps and nodal lines")
    _add_common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--sigmas", type=_floats, required=True)

    p = sub.add_parser("experiment", help="run E1, E2, E3, E4 or BOUNDS")
    _add_common(p)
    p.add_argument("name", choices=EXPERIMENTS)
    p.add_argument("--config", default=None)

    p = sub.add_parser("render", help="write a PGM snapshot of an AFLD field")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--lo", type=float, default=-1.2)
    p.add_argument("--hi", type=float, default=1.2)
    return parser


def _config(name: str, args) -> ExperimentConfig:
    cfg = default_config(name)
    if getattr(args, "config", None):
        cfg = load_config(args.config, cfg).replace(experiment=name)
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if args.replicas is not None:
        over["replicas"] = args.replicas
    if args.out is not None:
        over["out"] = args.out
    return cfg.replace(**over).validate()


def _cmd_schedule(args) -> int:
    s = make_schedule(args.eps, args.alpha, args.alpha_bar, args.kappa, args.dim)
    keys = ("eps", "alpha", "alpha_bar", "kappa", "dim", "T", "L", "c_frak", "tau_star", "t_star", "t1", "t2", "t2_kappa", "t_star_kappa")
    values = {k: getattr(s, k) for k in keys}
    if args.json:
        print(json.dumps(values, indent=2))
    else:
        for k, v in values.items():
            print(f"{k:<14} {v:.6f}" if isinstance(v, float) else f"{k:<14} {v}")
    return EXIT_OK


def _cmd_sample(args) -> int:
    sch = make_schedule(args.eps, args.alpha, args.alpha_bar)
    extent = args.extent if args.extent is not None else args.n * args.eps / 2
    grid = make_grid(2, args.n, extent)
    seed = 0 if args.seed is None else args.seed
    eta, psi = coupled_pair(grid, NoiseSpec(args.eps, args.alpha, seed), sch)
    out = Path(args.out or "out")
    io.write_field(out / "eta.afld", eta)
    io.write_field(out / "psi.afld", psi)
    print(f"wrote {out / 'eta.afld'} and {out / 'psi.afld'}")
    return EXIT_OK


def _cmd_evolve(args) -> int:
    u0 = io.read_field(args.input)
    u = evolve(u0, u0.time, args.t_to, SolverConfig(dt=args.dt, ramp_dt0=args.ramp_dt0))
    out = Path(args.out or "evolved.afld")
    io.write_field(out, u)
    print(f"wrote {out} at t={u.time:.6g}, max|u|={u.sup():.6g}")
    return EXIT_OK


def _cmd_wild(args) -> int:
    cfg = _config("BOUNDS", args)
    if args.epsilons:
        cfg = cfg.replace(epsilons=args.epsilons)
    if args.order is not None:
        cfg = cfg.replace(bounds_max_order=args.order)
    return _finish(run_experiment(cfg.validate(), _progress), cfg)


def _cmd_mcf(args) -> int:
    f = io.read_field(args.input)
    out = Path(args.out or "mcf")
    sigma0 = f.time if f.time > 0 else 1.0
    for w in levelset_evolve(f, args.sigmas, sigma0=sigma0):
        tag = f"{w.time:.4f}"
        io.write_field(out / f"sign_{tag}.afld", w.with_values(np.sign(w.values)))
        io.write_nodal(out / f"nodal_{tag}.csv", extract_nodal(w))
    print(f"wrote sign maps and nodal lines to {out}")
    return EXIT_OK


def _progress(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def _finish(report, cfg) -> int:
    path = report.write(cfg.out)
    for name, ok in report.criteria.items():
        status = "n/a" if ok is None else ("PASS" if ok else "FAIL")
        print(f"{report.experiment} {name}: {status}")
    print(f"report written to {path}")
    return EXIT_OK if report.passed else EXIT_CRITERIA


def _cmd_experiment(args) -> int:
    cfg = _config(args.name, args)
    return _finish(run_experiment(cfg, _progress), cfg)


def _cmd_render(args) -> int:
    f = io.read_field(args.input)
    io.write_pgm(args.out, f, args.lo, args.hi)
    print(f"wrote {args.out}")
    return EXIT_OK


COMMANDS = {
    "schedule": _cmd_schedule,
    "sample": _cmd_sample,
    "evolve": _cmd_evolve,
    "wild": _cmd_wild,
    "mcf": _cmd_mcf,
    "experiment": _cmd_experiment,
    "render": _cmd_render,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required")
        return COMMANDS[args.command](args)
    except (UsageError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - any other failure is a runtime error
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
