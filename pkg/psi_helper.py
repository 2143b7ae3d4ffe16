"""
Selective inference for "the model with the smallest score".

The selection event {z_k <= z_m for all m != k} is a polyhedron A z <= 0.
Conditional on it, eta^T z is a normal variable truncated to [V-, V+], and its
truncated-normal CDF is Uniform(0, 1) under the null. The test here is
H0: eta^T mu = 0 with eta = e_k.
"""
import logging
import math
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.special import erf, erfcx, ndtr

from errors import (DegenerateDataError, DegenerateVarianceError, InconsistentEventError, InputError,
                    InternalConsistencyError, NumericalFailureError)
from schemas import ScoreVector, SelectionEvent, SelectionResult, Sidedness, TruncatedInterval

logger = logging.getLogger(__name__)

_ALPHA_ZERO_TOL = 1e-12
_INTERVAL_SLACK = 1e-12
_SQRT2 = math.sqrt(2.0)


def select_best(z) -> int:
    """Index of the smallest score; ties go to the lowest index."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 1 or z.size < 2:
        raise InputError("selection requires at least two models")
    if not np.all(np.isfinite(z)):
        raise InputError("scores must be finite")
    return int(np.argmin(z))


def build_selection_event(z, k: int) -> SelectionEvent:
    """
    One row per unselected model m (in index order): +1 at column k, -1 at
    column m. b = 0.
    """
    z = np.asarray(z, dtype=np.float64)
    s = z.size
    if not 0 <= k < s:
        raise InputError(f"selected index {k} outside [0, {s})")
    others = [m for m in range(s) if m != k]
    a_matrix = np.zeros((s - 1, s))
    a_matrix[:, k] = 1.0
    a_matrix[np.arange(s - 1), others] = -1.0
    b = np.zeros(s - 1)
    if np.any(a_matrix @ z > b):
        raise InconsistentEventError(f"model {k} does not have the smallest score")
    return SelectionEvent(a_matrix=a_matrix, b=b, selected=k)


def truncation_points(event: SelectionEvent, z, sigma, eta) -> TruncatedInterval:
    """
    V- and V+ of the polyhedral lemma.

    alpha = A Sigma eta / (eta^T Sigma eta). Rows with alpha_j < 0 bound from
    below, rows with alpha_j > 0 from above, rows with |alpha_j| below
    1e-12 * max|alpha| are ignored. An empty side is infinite.
    """
    z = np.asarray(z, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    eta = np.asarray(eta, dtype=np.float64)

    sigma_eta = sigma @ eta
    variance = float(eta @ sigma_eta)
    if not variance > 0.0:
        raise DegenerateVarianceError(f"eta^T Sigma eta = {variance:g} is not positive")

    alpha = event.a_matrix @ sigma_eta / variance
    eta_z = float(eta @ z)
    residual = event.b - event.a_matrix @ z

    cutoff = _ALPHA_ZERO_TOL * float(np.max(np.abs(alpha))) if alpha.size else 0.0
    upper_rows = alpha > cutoff
    lower_rows = alpha < -cutoff
    upper = float(np.min(residual[upper_rows] / alpha[upper_rows])) + eta_z if upper_rows.any() else math.inf
    lower = float(np.max(residual[lower_rows] / alpha[lower_rows])) + eta_z if lower_rows.any() else -math.inf

    slack = _INTERVAL_SLACK * max(abs(eta_z), math.sqrt(variance))
    if lower > eta_z + slack or upper < eta_z - slack:
        raise InternalConsistencyError(
            f"observed statistic {eta_z:.17g} outside its truncation interval [{lower:.17g}, {upper:.17g}]")
    lower = min(lower, eta_z)
    upper = max(upper, eta_z)
    if not lower < upper:
        raise DegenerateDataError(
            f"tied minimum scores pin the selected statistic at {eta_z:.17g}; the truncation interval has zero width")

    return TruncatedInterval(lower=lower, upper=upper, eta_z=eta_z, eta_sigma_eta=variance)


def _phi_diff(lo: float, hi: float) -> float:
    """Phi(hi) - Phi(lo) for lo <= hi, taken from the tail that keeps precision."""
    if max(-lo, hi) <= 1.0:
        # erf is exact near the origin where ndtr sits at 0.5
        return float((erf(hi / _SQRT2) - erf(lo / _SQRT2)) / 2.0)
    if lo >= 0.0:
        return float(ndtr(-lo) - ndtr(-hi))
    return float(ndtr(hi) - ndtr(lo))


def _log_tail_ratio(x: float, a: float) -> float:
    """
    log(Q(x) / Q(a)) for 0 <= a <= x, Q the standard normal upper tail.

    Uses Q(x) = exp(-x^2 / 2) * erfcx(x / sqrt 2) / 2 so that the Gaussian
    factors cancel analytically and only the Mills-ratio parts are evaluated.
    """
    if math.isinf(x):
        return -math.inf
    return (-(x - a) * (x + a) / 2.0
            + math.log(erfcx(x / _SQRT2)) - math.log(erfcx(a / _SQRT2)))


def _upper_tail_parts(t: float, a: float, b: float) -> Tuple[float, float]:
    # a >= 0: everything measured relative to Q(a)
    log_t = _log_tail_ratio(t, a)
    log_b = _log_tail_ratio(b, a)
    denominator = -math.expm1(log_b)
    if not denominator > 0.0:
        raise NumericalFailureError(
            f"truncation interval [{a:g}, {b:g}] (standardized) carries no representable mass")
    cdf = -math.expm1(log_t) / denominator
    sf = math.exp(log_t) * -math.expm1(log_b - log_t) / denominator
    return cdf, sf


def _standard_parts(t: float, a: float, b: float) -> Tuple[float, float]:
    """(CDF, survival) of N(0, 1) truncated to [a, b] at t."""
    if t <= a:
        return 0.0, 1.0
    if t >= b:
        return 1.0, 0.0
    if a < 0.0 < b or max(-a, b) <= 1.0:
        denominator = _phi_diff(a, b)
        if not denominator > 0.0:
            raise NumericalFailureError(
                f"truncation interval [{a:g}, {b:g}] (standardized) carries no representable mass")
        cdf = _phi_diff(a, t) / denominator
        sf = _phi_diff(t, b) / denominator
    elif a >= 0.0:
        cdf, sf = _upper_tail_parts(t, a, b)
    else:
        sf, cdf = _upper_tail_parts(-t, -b, -a)
    if math.isnan(cdf) or math.isnan(sf):
        raise NumericalFailureError(f"truncated normal at t={t:g} on [{a:g}, {b:g}] evaluated to NaN")
    return min(max(cdf, 0.0), 1.0), min(max(sf, 0.0), 1.0)


def _truncated_parts(x: float, mu: float, sigma2: float, lower: float, upper: float) -> Tuple[float, float]:
    if not (sigma2 > 0.0 and math.isfinite(sigma2)):
        raise InputError(f"variance must be positive and finite, got {sigma2}")
    if not lower < upper:
        raise InputError(f"truncation bounds must satisfy lower < upper, got [{lower}, {upper}]")
    if math.isnan(x) or math.isnan(mu):
        raise InputError("x and mu must not be NaN")
    scale = math.sqrt(sigma2)
    return _standard_parts((x - mu) / scale, (lower - mu) / scale, (upper - mu) / scale)


def truncated_normal_cdf(x: float, mu: float, sigma2: float, lower: float, upper: float) -> float:
    """
    CDF of N(mu, sigma2) truncated to [lower, upper].

    Bounds on one side of the mean go through a Mills-ratio form built on the
    scaled complementary error function, so intervals deep in a tail do not
    collapse into 0/0.
    """
    return _truncated_parts(x, mu, sigma2, lower, upper)[0]


def truncated_normal_sf(x: float, mu: float, sigma2: float, lower: float, upper: float) -> float:
    """Survival function 1 - CDF, evaluated directly."""
    return _truncated_parts(x, mu, sigma2, lower, upper)[1]


def selective_p_value(interval: TruncatedInterval, sidedness: Sidedness = Sidedness.ONE,
                      null_value: float = 0.0) -> float:
    """
    p-value of H0: eta^T mu = null_value given the selection event.

    One-sided uses the upper tail (large scores are evidence against H0);
    two-sided is 2 * min(F, 1 - F).
    """
    cdf, sf = _truncated_parts(interval.eta_z, null_value, interval.eta_sigma_eta,
                               interval.lower, interval.upper)
    if Sidedness(sidedness) is Sidedness.TWO:
        return min(1.0, 2.0 * min(cdf, sf))
    return sf


def naive_p_value(eta_z: float, variance: float) -> float:
    """Upper-tail normal p-value that ignores the selection."""
    if not variance > 0.0:
        raise DegenerateVarianceError(f"variance {variance:g} is not positive")
    return float(ndtr(-eta_z / math.sqrt(variance)))


def selective_confidence_interval(interval: TruncatedInterval, level: float = 0.95) -> Tuple[float, float]:
    """
    Equal-tailed interval for eta^T mu obtained by inverting the truncated
    pivot; an end that cannot be bracketed is reported as infinite.
    """
    if not 0.0 < level < 1.0:
        raise InputError("confidence level must lie in (0, 1)")
    tail = (1.0 - level) / 2.0
    scale = interval.scale
    x = interval.eta_z

    def survival_minus(target: float):
        def f(mu: float) -> float:
            return _truncated_parts(x, mu, interval.eta_sigma_eta, interval.lower, interval.upper)[1] - target
        return f

    def solve(target: float) -> float:
        f = survival_minus(target)
        # survival at x is nondecreasing in mu
        lo, hi = x - scale, x + scale
        for _ in range(64):
            if f(lo) <= 0.0:
                break
            lo -= (hi - lo)
        else:
            return -math.inf
        for _ in range(64):
            if f(hi) >= 0.0:
                break
            hi += (hi - lo)
        else:
            return math.inf
        return float(brentq(f, lo, hi, xtol=1e-12 * scale, maxiter=200))

    return solve(tail), solve(1.0 - tail)


def select_and_test(scores: ScoreVector, sidedness: Sidedness = Sidedness.ONE,
                    ci_level: Optional[float] = None) -> SelectionResult:
    """
    Picks the model with the smallest score and tests H0: its MMD^2 is zero,
    conditioning on it having been picked.
    """
    z, sigma = scores.z, scores.sigma
    k = select_best(z)
    event = build_selection_event(z, k)
    eta = np.zeros(z.size)
    eta[k] = 1.0
    interval = truncation_points(event, z, sigma, eta)
    p_value = selective_p_value(interval, sidedness)

    confidence = None
    if ci_level is not None:
        confidence = list(selective_confidence_interval(interval, ci_level))

    logger.info("selected %s: z=%.6g in [%.6g, %.6g], p=%.4g",
                scores.model_ids[k], interval.eta_z, interval.lower, interval.upper, p_value)
    return SelectionResult(
        selected=k,
        selected_label=scores.model_ids[k],
        z=[float(v) for v in z],
        interval=interval,
        p_value=p_value,
        sidedness=Sidedness(sidedness),
        naive_p_value=naive_p_value(interval.eta_z, interval.eta_sigma_eta),
        confidence_interval=confidence,
    )
