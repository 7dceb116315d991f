"""Experiment orchestration: trajectories, trials, datasets, metrics and reports."""

from .ablation import AblationCurves, ablate_particles
from .config import ExperimentConfig, resolve_config
from .dataset import DatasetError, DatasetRecord, export_snapshots, ingest_dataset
from .experiment import TrialSpec, run_experiment, trial_plan
from .methods import REGISTRY, Hyperparams, MethodContext, Observation, make_localizer, method_names, register
from .metrics import SummaryRow, compute_metrics, summary_markdown
from .trajectory import Trajectory, generate_trajectory
from .trial import Estimate, TrialResult, run_trial, simulate_observations

__all__ = [
    "AblationCurves", "ablate_particles", "ExperimentConfig", "resolve_config", "DatasetError", "DatasetRecord",
    "export_snapshots", "ingest_dataset", "TrialSpec", "run_experiment", "trial_plan", "REGISTRY", "Hyperparams",
    "MethodContext", "Observation", "make_localizer", "method_names", "register", "SummaryRow", "compute_metrics",
    "summary_markdown", "Trajectory", "generate_trajectory", "Estimate", "TrialResult", "run_trial",
    "simulate_observations",
]
