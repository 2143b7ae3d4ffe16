"""
Monte-Carlo studies of the select-and-test pipeline on synthetic models:
null calibration, power over mean shifts, and score ranking.

Trial t draws every sample set from its own stream (seed, t, role), so the
sets inside a trial never share draws, studies are pure functions of their
arguments, and a power study at delta = 0 replays the calibration study with
the same seed exactly.
"""
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy import stats
from tqdm import tqdm

from config import get_settings
from errors import InputError, MMDInfError, TrialFailedError
from random_streams import ROLE_MODEL_BASE, ROLE_REAL, stream
from schemas import (GaussianMeanShift, RankingResult, RankingRow, RunConfig, StudyResult,
                     StudySummary, SyntheticModelSpec, TrialReport)
from selection_handler import SelectionHandler
from synthetic_data import base_spec, sample

logger = logging.getLogger(__name__)

HISTOGRAM_BINS = 20


class SimulationService:
    """
    Runs trials on a thread pool; reports always come back in trial order.
    """
    def __init__(self, config: Optional[RunConfig] = None, workers: Optional[int] = None,
                 progress: bool = False):
        self.config = config or RunConfig()
        self.workers = workers or get_settings().workers
        self.progress = progress
        self.handler = SelectionHandler(self.config, workers=1)

    def _run_trials(self, trial_fn: Callable[[int], TrialReport], trials: int, desc: str) -> List[TrialReport]:
        def guarded(trial: int) -> TrialReport:
            try:
                return trial_fn(trial)
            except MMDInfError as exc:
                raise TrialFailedError(self.config.seed, trial, exc) from exc

        bar = tqdm(total=trials, desc=desc, disable=not self.progress, leave=False)
        reports = []
        try:
            if self.workers > 1:
                with ThreadPoolExecutor(max_workers=self.workers) as pool:
                    for report in pool.map(guarded, range(trials)):
                        reports.append(report)
                        bar.update(1)
            else:
                for trial in range(trials):
                    reports.append(guarded(trial))
                    bar.update(1)
        finally:
            bar.close()
        return reports

    def run_trial(self, model_specs: Sequence[SyntheticModelSpec], real_spec: SyntheticModelSpec,
                  n: int, trial: int, delta: Optional[float] = None) -> TrialReport:
        """One draw of S + 1 disjoint sample sets followed by the full pipeline."""
        seed = self.config.seed
        real = sample(real_spec, n, stream(seed, trial, ROLE_REAL))
        models = [sample(spec, n, stream(seed, trial, ROLE_MODEL_BASE + s))
                  for s, spec in enumerate(model_specs)]
        labels = [spec.label for spec in model_specs]

        started = time.perf_counter()
        analysis = self.handler.analyze(models, real, labels, key=(trial,))
        elapsed_ms = (time.perf_counter() - started) * 1000.0
        return SelectionHandler.to_report(analysis, seed, trial, elapsed_ms, delta)

    def run_null_calibration(self, s_models: int = 7, n: int = 500, dim: int = 8,
                             trials: int = 1000) -> StudyResult:
        """S oracle models that sample the real distribution itself."""
        return self._shift_study([0.0], s_models, n, dim, trials, study="calibration")

    def run_power_study(self, shift_grid: Sequence[float], s_models: int = 7, n: int = 500,
                        dim: int = 8, trials: int = 200) -> StudyResult:
        """Every candidate shifted by delta, for each delta in the grid."""
        if not shift_grid:
            raise InputError("the shift grid is empty")
        if any(d < 0 for d in shift_grid):
            raise InputError("shifts must be nonnegative")
        return self._shift_study(list(shift_grid), s_models, n, dim, trials, study="power")

    def _shift_study(self, deltas: List[float], s_models: int, n: int, dim: int, trials: int,
                     study: str) -> StudyResult:
        _check_study_args(s_models, n, dim, trials)
        real_spec = base_spec(dim)
        reports, summaries = [], []
        for delta in deltas:
            specs = [SyntheticModelSpec(distribution=GaussianMeanShift(delta=delta), dim=dim,
                                        label=f"oracle_{s}" if delta == 0 else f"shift_{s}")
                     for s in range(s_models)]
            cell_delta = delta if study == "power" else None
            cell = self._run_trials(
                lambda t: self.run_trial(specs, real_spec, n, t, cell_delta),
                trials, desc=f"{study} delta={delta:g}")
            summary = summarize_p_values([r.p_value for r in cell], self.config.alpha, study, cell_delta)
            logger.info("%s delta=%g: KS=%.4f, rejection=%.3f", study, delta,
                        summary.ks_distance, summary.rejection_rate)
            reports.extend(cell)
            summaries.append(summary)
        return StudyResult(reports=reports, summaries=summaries)

    def run_ranking_study(self, specs: Sequence[SyntheticModelSpec], n: int = 500, trials: int = 100,
                          real_spec: Optional[SyntheticModelSpec] = None) -> RankingResult:
        """Mean and standard deviation of each model's MMD^2_inc across trials, ascending."""
        if len(specs) < 2:
            raise InputError("ranking needs at least two model specs")
        dim = specs[0].dim
        if any(spec.dim != dim for spec in specs):
            raise InputError("all model specs must share one dimension")
        labels = [spec.label for spec in specs]
        if len(set(labels)) != len(labels):
            raise InputError("model labels must be unique")
        _check_study_args(len(specs), n, dim, trials)
        real_spec = real_spec or base_spec(dim)
        if real_spec.dim != dim:
            raise InputError("the real distribution must share the models' dimension")

        reports = self._run_trials(lambda t: self.run_trial(specs, real_spec, n, t), trials, desc="ranking")
        z = np.array([r.z for r in reports])
        means = z.mean(axis=0)
        stds = z.std(axis=0, ddof=1) if trials > 1 else np.zeros(len(specs))
        rows = [RankingRow(label=labels[s], mean=float(means[s]), std=float(stds[s]), trials=trials)
                for s in range(len(specs))]
        rows.sort(key=lambda row: row.mean)
        return RankingResult(rows=rows, reports=reports)


def _check_study_args(s_models: int, n: int, dim: int, trials: int):
    if s_models < 2:
        raise InputError("selection requires at least two models")
    if n < 4:
        raise InputError(f"n must be at least 4, got {n}")
    if dim < 1:
        raise InputError("dim must be at least 1")
    if trials < 1:
        raise InputError("trials must be at least 1")


def summarize_p_values(p_values: Sequence[float], alpha: float, study: str,
                       delta: Optional[float] = None) -> StudySummary:
    """KS distance to Uniform(0, 1), rejection rate at alpha, and a 20-bin histogram."""
    p = np.asarray(p_values, dtype=np.float64)
    if p.size == 0:
        raise InputError("no p-values to summarize")
    ks = stats.kstest(p, "uniform")
    rate = float(np.mean(p < alpha))
    histogram, _ = np.histogram(p, bins=HISTOGRAM_BINS, range=(0.0, 1.0))
    return StudySummary(
        study=study,
        trials=int(p.size),
        alpha=alpha,
        ks_distance=float(ks.statistic),
        ks_p_value=float(ks.pvalue),
        rejection_rate=rate,
        rejection_se=math.sqrt(rate * (1.0 - rate) / p.size),
        histogram=[int(c) for c in histogram],
        delta=delta,
    )


def _service(r: int, seed: int, config: Optional[RunConfig], workers: Optional[int],
             progress: bool) -> SimulationService:
    config = (config or RunConfig()).model_copy(update={"r": r, "seed": seed})
    return SimulationService(config, workers=workers, progress=progress)


def run_null_calibration(s_models: int = 7, n: int = 500, r: int = 5, dim: int = 8,
                         trials: int = 1000, seed: int = 0, config: Optional[RunConfig] = None,
                         workers: Optional[int] = None, progress: bool = False) -> StudyResult:
    return _service(r, seed, config, workers, progress).run_null_calibration(s_models, n, dim, trials)


def run_power_study(shift_grid: Sequence[float], s_models: int = 7, n: int = 500, r: int = 5,
                    dim: int = 8, trials: int = 200, seed: int = 0, config: Optional[RunConfig] = None,
                    workers: Optional[int] = None, progress: bool = False) -> StudyResult:
    return _service(r, seed, config, workers, progress).run_power_study(shift_grid, s_models, n, dim, trials)


def run_ranking_study(specs: Sequence[SyntheticModelSpec], n: int = 500, r: int = 5, trials: int = 100,
                      seed: int = 0, config: Optional[RunConfig] = None,
                      real_spec: Optional[SyntheticModelSpec] = None,
                      workers: Optional[int] = None, progress: bool = False) -> RankingResult:
    return _service(r, seed, config, workers, progress).run_ranking_study(specs, n, trials, real_spec)
