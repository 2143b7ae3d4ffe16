"""
Positive-definite kernels and data-driven bandwidth selection.

Kernels are looked up from a registry keyed by KernelFamily, so mmd_helper and
psi_helper only ever see the Kernel interface.
"""
import logging
import math
from abc import ABC, abstractmethod
from typing import Dict, Type

import numpy as np
from scipy.spatial.distance import pdist

from errors import DegenerateDataError, InputError
from schemas import FeatureMatrix, KernelFamily, KernelSpec

logger = logging.getLogger(__name__)

# kernel evaluations per Gram-matrix block
_GRAM_BLOCK = 1 << 18


class Kernel(ABC):
    """Row-wise and all-pairs evaluation of k(., .)."""

    def __init__(self, spec: KernelSpec):
        self.spec = spec

    @abstractmethod
    def rows(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """
        k(a[p], b[p]) for every row p.

        Args:
            a, b: arrays of identical shape (m, d)

        Returns:
            length-m float64 vector
        """

    def matrix(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Gram matrix K[i, j] = k(a[i], b[j]); every entry equals the rows() value bit for bit."""
        m, n = a.shape[0], b.shape[0]
        out = np.empty((m, n), dtype=np.float64)
        block = max(1, _GRAM_BLOCK // max(n, 1))
        cols = np.arange(n)
        for start in range(0, m, block):
            stop = min(start + block, m)
            ii = np.repeat(np.arange(start, stop), n)
            jj = np.tile(cols, stop - start)
            out[start:stop] = self.rows(a[ii], b[jj]).reshape(stop - start, n)
        return out


class GaussianKernel(Kernel):
    """k(x, x') = exp(-gamma * ||x - x'||^2)"""

    def rows(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        diff = a - b
        return np.exp(-self.spec.gamma * np.einsum("ij,ij->i", diff, diff))


_KERNELS: Dict[KernelFamily, Type[Kernel]] = {
    KernelFamily.GAUSSIAN: GaussianKernel,
}


def build_kernel(spec: KernelSpec) -> Kernel:
    try:
        return _KERNELS[spec.family](spec)
    except KeyError:
        raise InputError(f"unsupported kernel family: {spec.family}")


def _as_vector(x, name: str) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64).ravel()
    if v.size < 1:
        raise InputError(f"{name} must have at least one coordinate")
    if not np.all(np.isfinite(v)):
        raise InputError(f"{name} contains a non-finite entry")
    return v


def kernel_eval(spec: KernelSpec, x, x2) -> float:
    """Single kernel evaluation k(x, x2)."""
    a = _as_vector(x, "x")
    b = _as_vector(x2, "x2")
    if a.shape != b.shape:
        raise InputError(f"dimension mismatch: {a.size} vs {b.size}")
    return float(build_kernel(spec).rows(a[np.newaxis, :], b[np.newaxis, :])[0])


def kernel_rows(spec: KernelSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape != b.shape:
        raise InputError(f"row blocks differ in shape: {a.shape} vs {b.shape}")
    return build_kernel(spec).rows(a, b)


def kernel_matrix(spec: KernelSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape[1] != b.shape[1]:
        raise InputError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    return build_kernel(spec).matrix(a, b)


def median_heuristic_gamma(pooled: FeatureMatrix, max_points: int = 1000, seed: int = 0) -> float:
    """
    gamma = 1 / (2 m^2), m the median pairwise Euclidean distance.

    Up to max_points rows are used; larger sets are subsampled with a seeded
    generator. For an even number of distances the lower middle one is taken,
    so m is always an observed distance.

    Raises:
        InputError: max_points < 2
        DegenerateDataError: the median distance is zero or too small for a finite gamma
    """
    if max_points < 2:
        raise InputError("max_points must be at least 2")
    data = pooled.data
    if pooled.n > max_points:
        rng = np.random.default_rng(seed)
        data = data[np.sort(rng.choice(pooled.n, size=max_points, replace=False))]

    distances = pdist(data, metric="euclidean")
    mid = (distances.size - 1) // 2
    median = float(np.partition(distances, mid)[mid])
    if median == 0.0:
        raise DegenerateDataError("median pairwise distance is zero; all sampled points coincide")

    spread = 2.0 * median * median
    gamma = 1.0 / spread if spread > 0.0 else math.inf
    if not math.isfinite(gamma):
        raise DegenerateDataError(f"median pairwise distance {median:g} is too small for a finite bandwidth")
    logger.debug("median heuristic: %d points, median distance %.6g, gamma %.6g",
                 data.shape[0], median, gamma)
    return gamma
