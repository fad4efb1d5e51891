"""Experiment harness: configuration, seeding, replicated runners, CSV output."""

from mhgrad.harness.config import ConfigError, Experiment, ExperimentConfig
from mhgrad.harness.seeding import derive_stream_seed
from mhgrad.stats import RunningMoments

__all__ = ["ConfigError", "Experiment", "ExperimentConfig", "RunningMoments", "derive_stream_seed"]
