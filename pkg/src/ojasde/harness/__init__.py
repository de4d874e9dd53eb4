"""Experiment orchestration: configs, reproducible ensembles, drivers and reports."""

from .config import ExperimentConfig, load_config
from .ensemble import EnsembleResult, make_stream, mc_ensemble
from .experiments import (
    run_experiment,
    run_fp_convergence,
    run_identities_suite,
    run_invariant_measure,
    run_langevin_experiment,
    run_sga_vs_ode,
    run_unstable_demo,
    run_weak_error_study,
)
from .report import ExperimentReport, emit_report, load_report

__all__ = [
    "ExperimentConfig", "load_config", "EnsembleResult", "make_stream", "mc_ensemble",
    "run_experiment", "run_fp_convergence", "run_identities_suite", "run_invariant_measure",
    "run_langevin_experiment", "run_sga_vs_ode", "run_unstable_demo", "run_weak_error_study",
    "ExperimentReport", "emit_report", "load_report",
]
