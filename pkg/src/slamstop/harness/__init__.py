from .bench import benchmark_dopt, benchmark_kernels
from .config import ExperimentConfig, load_config, parse_config
from .experiment import (RunSummary, TrialResult, emit_fig2_trace, read_csv, run_experiment,
                         run_trial)

__all__ = [
    "benchmark_dopt",
    "benchmark_kernels",
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "RunSummary",
    "TrialResult",
    "emit_fig2_trace",
    "read_csv",
    "run_experiment",
    "run_trial",
]
