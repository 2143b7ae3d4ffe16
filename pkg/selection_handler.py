"""
End-to-end pipeline: bandwidth -> shared design -> h-matrix -> scores -> select-and-test.
Used by the CLI on real feature files and by the simulation studies.
"""
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from errors import DegenerateCovarianceError, InputError
from kernel_helper import median_heuristic_gamma
from mmd_helper import compute_h_matrix, default_ell, estimate_scores, mmd_incomplete, sample_design
from psi_helper import select_and_test
from random_streams import ROLE_BANDWIDTH, ROLE_DESIGN, derived_seed
from schemas import (AnalysisResult, FeatureMatrix, HMatrix, KernelSpec, PairDesign, RunConfig,
                     ScoreTable, TrialReport)

logger = logging.getLogger(__name__)


class SelectionHandler:
    """
    Runs the pipeline for one RunConfig.

    `key` arguments pick independent random streams below the config seed;
    the CLI uses the empty key, simulations use (trial,).
    """
    def __init__(self, config: Optional[RunConfig] = None, workers: Optional[int] = None,
                 with_confidence: bool = False):
        self.config = config or RunConfig()
        self.workers = workers
        self.with_confidence = with_confidence

    def kernel_spec(self, models: Sequence[FeatureMatrix], real: FeatureMatrix,
                    key: Tuple[int, ...] = ()) -> KernelSpec:
        """One gamma for every model: the override, or the median heuristic on the pooled sets."""
        if self.config.gamma is not None:
            return KernelSpec(gamma=self.config.gamma)
        pooled = FeatureMatrix(data=np.vstack([real.data] + [m.data for m in models]))
        gamma = median_heuristic_gamma(pooled, self.config.max_points,
                                       seed=derived_seed(self.config.seed, *key, ROLE_BANDWIDTH))
        return KernelSpec(gamma=gamma)

    def design(self, n: int, key: Tuple[int, ...] = ()) -> PairDesign:
        return sample_design(n, default_ell(n, self.config.r), self.config.design_mode,
                             seed=derived_seed(self.config.seed, *key, ROLE_DESIGN))

    def h_matrix(self, models: Sequence[FeatureMatrix], real: FeatureMatrix,
                 key: Tuple[int, ...] = ()) -> Tuple[KernelSpec, HMatrix]:
        if not models:
            raise InputError("no candidate models given")
        for s, m in enumerate(models):
            if (m.n, m.d) != (real.n, real.d):
                raise InputError(f"model {s} has shape ({m.n}, {m.d}) but the real set has ({real.n}, {real.d})")
        spec = self.kernel_spec(models, real, key)
        design = self.design(real.n, key)
        return spec, compute_h_matrix(spec, models, real, design, workers=self.workers)

    def score_table(self, models: Sequence[FeatureMatrix], real: FeatureMatrix,
                    labels: List[str]) -> ScoreTable:
        """
        Scores and standard errors sorted ascending. A degenerate covariance
        (e.g. a duplicated model) is reported as a warning, not an error.
        """
        spec, h = self.h_matrix(models, real)
        z = mmd_incomplete(h)
        warning = None
        if h.s >= 2:
            try:
                errors = estimate_scores(h, self.config.ridge_scale, labels).standard_errors
            except DegenerateCovarianceError as exc:
                warning = str(exc)
                logger.warning("covariance: %s", exc)
                errors = np.sqrt(np.var(h.values, axis=0, ddof=1) / h.ell)
        else:
            errors = np.sqrt(np.var(h.values, axis=0, ddof=1) / h.ell)

        order = sorted(range(len(labels)), key=lambda s: (z[s], s))
        return ScoreTable(
            labels=[labels[s] for s in order],
            z=[float(z[s]) for s in order],
            standard_errors=[float(errors[s]) for s in order],
            gamma=spec.gamma,
            ell=h.ell,
            warning=warning,
        )

    def analyze(self, models: Sequence[FeatureMatrix], real: FeatureMatrix, labels: List[str],
                key: Tuple[int, ...] = ()) -> AnalysisResult:
        if len(models) < 2:
            raise InputError("selection requires at least two models")
        if len(labels) != len(models):
            raise InputError(f"{len(labels)} labels for {len(models)} models")
        spec, h = self.h_matrix(models, real, key)
        scores = estimate_scores(h, self.config.ridge_scale, labels)
        ci_level = self.config.ci_level if self.with_confidence else None
        result = select_and_test(scores, self.config.sidedness, ci_level=ci_level)
        return AnalysisResult(scores=scores, result=result, gamma=spec.gamma, ell=h.ell,
                              design_mode=h.design.mode)

    @staticmethod
    def to_report(analysis: AnalysisResult, seed: int, trial: int = 0,
                  elapsed_ms: Optional[float] = None, delta: Optional[float] = None) -> TrialReport:
        interval = analysis.result.interval
        return TrialReport(
            seed=seed,
            trial=trial,
            labels=list(analysis.scores.model_ids),
            z=analysis.result.z,
            log_det_sigma=analysis.scores.log_det_sigma,
            selected=analysis.result.selected_label,
            lower=interval.lower,
            upper=interval.upper,
            p_value=analysis.result.p_value,
            elapsed_ms=elapsed_ms,
            delta=delta,
        )
