"""Experiment harness: configs, single runs, grids, plots and the command line."""

from .config import ConfigError, ExperimentConfig, ModelConfig, apply_overrides, dump_config, load_config, parse_config
from .grid import GridResult, load_grid, parse_grid, run_grid
from .plot import PlotError, emit_plot, read_metrics
from .runner import METRIC_COLUMNS, RunResult, run_experiment, strip_timing

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "GridResult",
    "METRIC_COLUMNS",
    "ModelConfig",
    "PlotError",
    "RunResult",
    "apply_overrides",
    "dump_config",
    "emit_plot",
    "load_config",
    "load_grid",
    "parse_config",
    "parse_grid",
    "read_metrics",
    "run_experiment",
    "run_grid",
    "strip_timing",
]
