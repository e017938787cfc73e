"""Experiment orchestration: config parsing, sweeps, evaluation."""
from .config import ExperimentConfig, config_from_dict, parse_config
from .evaluate import eval_model, plan_data, score_outputs
from .sweep import CSV_HEADER, SweepResult, read_results, run_sweep
from . import trends

__all__ = [
    "CSV_HEADER", "ExperimentConfig", "SweepResult", "config_from_dict",
    "eval_model", "parse_config", "plan_data", "read_results", "run_sweep",
    "score_outputs", "trends",
]
