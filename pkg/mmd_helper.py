"""
Complete and incomplete U-statistic estimators of MMD^2.

All S candidate models are scored over one shared pair design and the same
real-sample indices, so the columns of the h-matrix are jointly distributed
and their covariance can be estimated from the rows.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence

import numpy as np

from config import get_settings
from errors import DegenerateCovarianceError, InputError
from kernel_helper import build_kernel, kernel_matrix
from random_streams import stream
from schemas import DesignMode, FeatureMatrix, HMatrix, KernelSpec, PairDesign, ScoreVector

logger = logging.getLogger(__name__)

# dense sampling (choice over every unordered pair) below this many pairs
_DENSE_CAPACITY = 1_000_000
_CORRELATION_TOL = 1e-10


def pair_capacity(n: int) -> int:
    """Number of distinct unordered pairs among n samples."""
    return n * (n - 1) // 2


def default_ell(n: int, r: int = 5) -> int:
    """ell = r * n, capped at the number of distinct unordered pairs."""
    return min(r * n, pair_capacity(n))


def tree_sum(values: np.ndarray) -> np.ndarray:
    """
    Sum along axis 0 with a fixed pairwise tree.

    The tree depends only on the number of rows, so the result is the same
    however the rows were produced (any chunking, any thread count).
    """
    v = np.asarray(values, dtype=np.float64)
    if v.shape[0] == 0:
        return np.zeros(v.shape[1:])
    while v.shape[0] > 1:
        if v.shape[0] % 2:
            head = v[:-1]
            v = np.concatenate([head[0::2] + head[1::2], v[-1:]])
        else:
            v = v[0::2] + v[1::2]
    return v[0]


def h_kernel(spec: KernelSpec, x, y, x2, y2) -> float:
    """h(u, u') = k(x, x') + k(y, y') - k(x, y') - k(x', y) for u = (x, y), u' = (x2, y2)."""
    vectors = [np.asarray(v, dtype=np.float64).ravel() for v in (x, y, x2, y2)]
    if len({v.size for v in vectors}) != 1:
        raise InputError("h_kernel arguments must share one dimension")
    a, b, a2, b2 = (v[np.newaxis, :] for v in vectors)
    kernel = build_kernel(spec)
    same = kernel.rows(a, a2) + kernel.rows(b, b2)
    cross = kernel.rows(a, b2) + kernel.rows(a2, b)
    return float((same - cross)[0])


def sample_design(n: int, ell: int, mode: DesignMode, seed: int = 0) -> PairDesign:
    """
    Builds the index pairs of the incomplete estimator.

    RANDOM draws ell distinct unordered pairs uniformly without replacement and
    orients each as (min, max). LINEAR is (0,1), (2,3), ... and drops the last
    sample when n is odd. FULL enumerates all n(n-1) ordered pairs. ell is
    ignored for LINEAR and FULL.
    """
    mode = DesignMode(mode)
    if n < 2:
        raise InputError(f"a pair design needs n >= 2, got {n}")

    if mode is DesignMode.LINEAR:
        first = np.arange(0, 2 * (n // 2), 2, dtype=np.int64)
        pairs = np.stack([first, first + 1], axis=1)
    elif mode is DesignMode.FULL:
        ii, jj = np.nonzero(~np.eye(n, dtype=bool))
        pairs = np.stack([ii, jj], axis=1).astype(np.int64)
    else:
        capacity = pair_capacity(n)
        if not 1 <= ell <= capacity:
            raise InputError(f"ell={ell} outside [1, {capacity}] distinct pairs for n={n}")
        rng = stream(seed)
        if capacity <= _DENSE_CAPACITY:
            iu, ju = np.triu_indices(n, k=1)
            chosen = rng.choice(capacity, size=ell, replace=False)
            pairs = np.stack([iu[chosen], ju[chosen]], axis=1).astype(np.int64)
        else:
            pairs = _rejection_pairs(n, ell, rng)

    return PairDesign(pairs=pairs, n=n, mode=mode)


def _rejection_pairs(n: int, ell: int, rng: np.random.Generator) -> np.ndarray:
    # keys lo * n + hi, deduplicated keeping first occurrences in draw order
    keys = np.empty(0, dtype=np.int64)
    while keys.size < ell:
        need = ell - keys.size
        batch = need + need // 4 + 16
        i = rng.integers(0, n, size=batch)
        j = rng.integers(0, n - 1, size=batch)
        j = j + (j >= i)
        drawn = np.minimum(i, j) * n + np.maximum(i, j)
        merged = np.concatenate([keys, drawn])
        _, first = np.unique(merged, return_index=True)
        keys = merged[np.sort(first)][:ell]
    return np.stack([keys // n, keys % n], axis=1)


def _check_shapes(models: Sequence[FeatureMatrix], real: FeatureMatrix, design: PairDesign):
    if not models:
        raise InputError("at least one model matrix is required")
    for idx, m in enumerate(models):
        if m.n != real.n or m.d != real.d:
            raise InputError(
                f"model {idx} has shape ({m.n}, {m.d}) but the real set has ({real.n}, {real.d})")
    if design.n != real.n:
        raise InputError(f"design was drawn for n={design.n}, data has n={real.n}")


def compute_h_matrix(spec: KernelSpec, models: Sequence[FeatureMatrix], real: FeatureMatrix,
                     design: PairDesign, workers: Optional[int] = None,
                     chunk_pairs: Optional[int] = None) -> HMatrix:
    """
    value[p, s] = h over pair (i_p, j_p), x-parts from model s and y-parts from
    the real rows with the same indices.

    Pair chunks are independent work units and may run on a thread pool; every
    entry is computed the same way whatever the split.
    """
    _check_shapes(models, real, design)
    settings = get_settings()
    workers = workers or settings.workers
    chunk_pairs = chunk_pairs or settings.chunk_pairs

    kernel = build_kernel(spec)
    ell, s = design.ell, len(models)
    out = np.empty((ell, s), dtype=np.float64)
    y = real.data

    def fill(start: int):
        stop = min(start + chunk_pairs, ell)
        i = design.pairs[start:stop, 0]
        j = design.pairs[start:stop, 1]
        yi, yj = y[i], y[j]
        k_yy = kernel.rows(yi, yj)
        for col, model in enumerate(models):
            xi, xj = model.data[i], model.data[j]
            same = kernel.rows(xi, xj) + k_yy
            cross = kernel.rows(xi, yj) + kernel.rows(xj, yi)
            out[start:stop, col] = same - cross

    starts = range(0, ell, chunk_pairs)
    if workers > 1 and ell > chunk_pairs:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, starts))
    else:
        for start in starts:
            fill(start)

    return HMatrix(values=out, design=design)


def mmd_incomplete(h: HMatrix) -> np.ndarray:
    """Per-model MMD^2_inc: column means of the h-matrix."""
    if h.ell < 1:
        raise InputError("the h-matrix has no rows")
    return tree_sum(h.values) / h.ell


def mmd_complete(spec: KernelSpec, x: FeatureMatrix, y: FeatureMatrix) -> float:
    """
    Complete U-statistic MMD^2_u over all ordered pairs i != j. O(n^2); used
    as the reference value for the incomplete estimator.
    """
    if x.n != y.n or x.d != y.d:
        raise InputError(f"shape mismatch: ({x.n}, {x.d}) vs ({y.n}, {y.d})")
    n = x.n
    off = ~np.eye(n, dtype=bool)
    k_xx = kernel_matrix(spec, x.data, x.data)
    k_yy = kernel_matrix(spec, y.data, y.data)
    k_xy = kernel_matrix(spec, x.data, y.data)
    total = np.sum(k_xx[off]) + np.sum(k_yy[off]) - 2.0 * np.sum(k_xy[off])
    return float(total / (n * (n - 1)))


def mmd_linear(spec: KernelSpec, x: FeatureMatrix, y: FeatureMatrix) -> float:
    """Linear-time estimator: the incomplete statistic over (0,1), (2,3), ..."""
    design = sample_design(x.n, 0, DesignMode.LINEAR)
    return float(mmd_incomplete(compute_h_matrix(spec, [x], y, design))[0])


def estimate_scores(h: HMatrix, ridge_scale: float = 1e-8,
                    model_ids: Optional[List[str]] = None) -> ScoreVector:
    """
    z = column means; Sigma = row covariance / ell + eps * I with
    eps = ridge_scale * trace / S.

    Raises:
        InputError: fewer than two rows or two models
        DegenerateCovarianceError: a constant column, two perfectly correlated
            columns, or a covariance that is still not positive definite
    """
    ell, s = h.ell, h.s
    if ell < 2 or s < 2:
        raise InputError(f"score estimation needs ell >= 2 and S >= 2, got ell={ell}, S={s}")
    if ridge_scale < 0:
        raise InputError("ridge_scale must be nonnegative")
    model_ids = list(model_ids) if model_ids is not None else [f"model_{k}" for k in range(s)]
    if len(model_ids) != s:
        raise InputError(f"{len(model_ids)} labels for {s} columns")

    values = h.values
    z = tree_sum(values) / ell
    centered = values - z
    raw = tree_sum(centered[:, :, np.newaxis] * centered[:, np.newaxis, :]) / (ell - 1) / ell
    raw = (raw + raw.T) / 2.0

    constant = [k for k in range(s) if np.ptp(values[:, k]) == 0.0]
    if constant:
        raise DegenerateCovarianceError(
            f"constant score columns {[model_ids[k] for k in constant]}", columns=constant)

    var = np.diag(raw)
    corr = raw / np.sqrt(np.outer(var, var))
    for a in range(s):
        for b in range(a + 1, s):
            if abs(corr[a, b]) >= 1.0 - _CORRELATION_TOL:
                raise DegenerateCovarianceError(
                    f"score columns {model_ids[a]!r} and {model_ids[b]!r} are perfectly correlated "
                    f"(duplicate model?)", columns=(a, b))

    eps = ridge_scale * float(np.trace(raw)) / s
    sigma = raw + eps * np.eye(s)
    try:
        np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        raise DegenerateCovarianceError("score covariance is not positive definite after the ridge",
                                        columns=range(s))

    logger.debug("scores over ell=%d pairs: z=%s, ridge=%.3g", ell, np.array2string(z, precision=6), eps)
    return ScoreVector(z=z, sigma=sigma, model_ids=model_ids, ridge=eps)
