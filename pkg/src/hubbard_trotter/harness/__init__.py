"""Sweep orchestration, depth reports, plot data and the command line tool."""

from .config import (
    BACKENDS,
    OBSERVABLES,
    PRESETS,
    ConfigError,
    ExperimentConfig,
    load_config,
    preset,
    with_env_overrides,
)
from .report import DepthTable, depth_report, emit_plot_data, read_results, write_results
from .sweep import CapabilityError, check_capability, observable, run_sweep

__all__ = [
    "BACKENDS",
    "OBSERVABLES",
    "PRESETS",
    "CapabilityError",
    "ConfigError",
    "DepthTable",
    "ExperimentConfig",
    "check_capability",
    "depth_report",
    "emit_plot_data",
    "load_config",
    "observable",
    "preset",
    "read_results",
    "run_sweep",
    "with_env_overrides",
    "write_results",
]
