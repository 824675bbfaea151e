"""Experiment runner, statistics and artifact output."""

from .config import ConfigError, ExperimentConfig, load_config, save_config
from .io import emit, read_trace, write_trace
from .runner import run_replicas
from .stats import (
    SummaryTable,
    fit_decay_order,
    fit_linear_rate,
    plateau_stat,
    step_orders,
    variance_study,
)
