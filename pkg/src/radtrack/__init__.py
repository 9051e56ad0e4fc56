"""Trajectory recovery for a radiation source crossing a field of binary proximity sensors."""

from .errors import *  # noqa: F401,F403
from .model import LinearTrajectory, ParabolicTrajectory, Sensor, SensorField, closest_approach_time
from .signal import (DetectionConfig, EmissionModel, NoiseMode, NoiseSpec, TransitionRecord, calibrate_lambda_s,
                     calibrated, expected_rate, noise_free_transitions, sample_transitions_erlang,
                     sample_transitions_photon, simulate_transitions)
from .estimate_linear import LinearEstimate, solve_ls, solve_minimal_3sensor
from .estimate_parabola import ParabolaEstimate, genericity_check, solve_parabola
from .bounds import CrlbBounds, FisherSummary, crlb_upper, fisher_entries, log_likelihood, snr_db
from .mc import ExperimentSpec, SweepSummary, TrialResult, run_experiment, summarize
from .scenario import GenConfig, gen_degenerate_linear, gen_generic_linear, gen_generic_parabola

__version__ = "0.1.0"
