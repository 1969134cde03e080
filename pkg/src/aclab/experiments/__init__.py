"""Experiment drivers, configuration, file formats and the command line."""

from .config import ExperimentConfig, default_config, load_config, parse_config_text
from .runs import ExperimentReport, run_bounds, run_E1, run_E2, run_E3, run_E4, run_experiment, run_experiments

__all__ = [
    "ExperimentConfig",
    "ExperimentReport",
    "default_config",
    "load_config",
    "parse_config_text",
    "run_E1",
    "run_E2",
    "run_E3",
    "run_E4",
    "run_bounds",
    "run_experiment",
    "run_experiments",
]
