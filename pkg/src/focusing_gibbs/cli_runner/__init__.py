"""Configuration, orchestration and persistence of experiments."""

from .config import KINDS, ConfigError, ExperimentConfig, config_from_mapping, load_config, parse_config
from .output import OutputDir, read_csv
from .runner import EXIT_ERROR, EXIT_INCONCLUSIVE, EXIT_SUCCESS, RunManifest, output_directory, run_experiment

__all__ = [
    "KINDS",
    "ConfigError",
    "ExperimentConfig",
    "config_from_mapping",
    "load_config",
    "parse_config",
    "OutputDir",
    "read_csv",
    "RunManifest",
    "run_experiment",
    "output_directory",
    "EXIT_SUCCESS",
    "EXIT_ERROR",
    "EXIT_INCONCLUSIVE",
]
