"""Feedback-driven adaptive data dropout for iterative training."""

from .accounting import EpochLedger, TraceRecord, effective_epochs, record_epoch
from .config import ExperimentConfig, load_config
from .controllers import Controller, accept, adaptive_alpha_step, adaptive_t_step, fixed_pdd_step
from .core import ConfigError, ControllerConfig, EpochDecision, Feedback, ScheduleState, compute_feedback, subset_size
from .harness import compare, matched_baseline, run_experiment
from .sampling import derive_stream, sample_subset
from .schedules import DecayFamily, base_trajectory, decay_fraction

__version__ = "0.1.0"
