"""Vertical federated learning simulator with feature-inversion attacks and noise defenses."""

__version__ = "0.1.0"

from . import attacks, data, datasets, defense, metrics, nn, vfl  # noqa: E402
from .harness import run_experiment, run_sweep  # noqa: E402

__all__ = ["attacks", "data", "datasets", "defense", "metrics", "nn", "vfl", "run_experiment", "run_sweep"]
