"""Adversarial deep learning against a learning-based IoT channel-access
transmitter: simulator, attacks, and the randomized-decision defense."""

from .config import parse_config, preset
from .protocol import ScenarioConfig, Simulation, run_pipeline
from .metrics import compute_metrics

__all__ = ["ScenarioConfig", "Simulation", "run_pipeline", "compute_metrics",
           "parse_config", "preset"]
__version__ = "0.1.0"
