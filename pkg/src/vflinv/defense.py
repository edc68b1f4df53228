"""Noise defenses applied by passive parties.

A noise ratio ``r`` means additive zero-mean Gaussian noise whose standard
deviation is ``r`` times the empirical standard deviation of the tensor being
perturbed (floored at 1e-12).  The definition is scale free, so the same ratio
means the same signal-to-noise level on gradients and on features.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KINDS = ("none", "dp_gradient", "gaussian_feature")
STD_FLOOR = 1e-12


@dataclass(frozen=True)
class DefenseConfig:
    kind: str = "none"
    ratio: float = 0.0
    seed: int = 0
    clip: float | None = None  # optional L2 row-norm clip for the DP variant; off by default

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown defense kind {self.kind!r}; expected one of {KINDS}")
        if not self.ratio >= 0:
            raise ValueError(f"noise ratio must be non-negative, got {self.ratio}")
        if self.clip is not None and self.clip <= 0:
            raise ValueError("clip must be positive when set")

    @property
    def active(self) -> bool:
        return self.kind != "none"

    def to_dict(self) -> dict:
        return {"kind": self.kind, "ratio": self.ratio, "seed": self.seed, "clip": self.clip}


def _noisy(x: np.ndarray, ratio: float, rng: np.random.Generator) -> np.ndarray:
    std = ratio * max(float(np.std(x)), STD_FLOOR)
    return x + rng.normal(0.0, std, size=x.shape)


def dp_gradient_noise(grad, ratio: float, rng: np.random.Generator, clip: float | None = None):
    """Perturb a received partial gradient (an array, or every tensor of a ``Gradients``)."""
    if ratio < 0:
        raise ValueError(f"noise ratio must be non-negative, got {ratio}")
    if hasattr(grad, "parameters") and hasattr(grad, "input_gradient"):
        from .nn import Gradients

        return Gradients(
            [dp_gradient_noise(w, ratio, rng, clip) for w in grad.weights],
            [dp_gradient_noise(b, ratio, rng, clip) for b in grad.biases],
            dp_gradient_noise(grad.input_gradient, ratio, rng, clip),
        )
    g = np.asarray(grad, dtype=np.float64)
    if clip is not None and g.ndim == 2:
        norms = np.linalg.norm(g, axis=1, keepdims=True)
        g = g * np.minimum(1.0, clip / np.maximum(norms, STD_FLOOR))
    if ratio == 0:
        return g
    return _noisy(g, ratio, rng)


def gaussian_feature_noise(H: np.ndarray, ratio: float, rng: np.random.Generator) -> np.ndarray:
    """Perturb an outbound feature matrix; the std is taken over the whole batch."""
    if ratio < 0:
        raise ValueError(f"noise ratio must be non-negative, got {ratio}")
    H = np.asarray(H, dtype=np.float64)
    if ratio == 0 or H.size == 0:
        return H
    return _noisy(H, ratio, rng)
