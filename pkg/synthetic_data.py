"""
Synthetic stand-ins for generative models: Gaussian mean shifts, scale
changes, and mixtures with dropped modes.
"""
import numpy as np

from errors import InputError
from schemas import (FeatureMatrix, GaussianMeanShift, GaussianMixtureDrop, GaussianScale,
                     SyntheticModelSpec)


def base_spec(dim: int, label: str = "real") -> SyntheticModelSpec:
    """The reference distribution N(0, I_dim)."""
    return SyntheticModelSpec(distribution=GaussianMeanShift(delta=0.0), dim=dim, label=label)


def mixture_centers(spec: GaussianMixtureDrop) -> np.ndarray:
    """Mode locations on the first axis, centred on the origin."""
    offsets = np.arange(spec.total_modes) - (spec.total_modes - 1) / 2.0
    return spec.spacing * offsets


def sample(spec: SyntheticModelSpec, n: int, rng: np.random.Generator) -> FeatureMatrix:
    """Draws n rows from the distribution described by spec."""
    if n < 2:
        raise InputError(f"need at least two samples, got {n}")
    dist = spec.distribution
    noise = rng.standard_normal((n, spec.dim))

    if isinstance(dist, GaussianMeanShift):
        data = noise + dist.delta
    elif isinstance(dist, GaussianScale):
        data = noise * dist.factor
    elif isinstance(dist, GaussianMixtureDrop):
        modes = rng.integers(0, dist.modes_kept, size=n)
        data = noise
        data[:, 0] += mixture_centers(dist)[modes]
    else:
        raise InputError(f"unknown synthetic distribution {type(dist).__name__}")

    return FeatureMatrix(data=data)
