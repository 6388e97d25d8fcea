"""Configuration-driven experiment runner and command-line interface."""

from .config import ExperimentConfig, apply_overrides, load_config, validate
from .runner import STAGES, Runner

__all__ = ["ExperimentConfig", "Runner", "STAGES", "apply_overrides", "load_config", "validate"]
