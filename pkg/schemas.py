"""
Pydantic schemas for model selection and selective testing
模型选择与选择后检验的数据模型
"""
import math
from enum import Enum
from typing import List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from errors import InputError, NonFiniteValueError


class KernelFamily(str, Enum):
    """核函数族"""
    GAUSSIAN = "gaussian"


class DesignMode(str, Enum):
    """配对设计模式"""
    RANDOM = "random"
    LINEAR = "linear"
    FULL = "full"


class Sidedness(str, Enum):
    """p值方向"""
    ONE = "one"
    TWO = "two"


class FeatureFormat(str, Enum):
    """特征文件格式"""
    CSV = "csv"
    FMAT = "fmat"


class KernelSpec(BaseModel):
    """核函数规格: k(x, x') = exp(-gamma * ||x - x'||^2)"""
    model_config = ConfigDict(frozen=True)

    family: KernelFamily = Field(default=KernelFamily.GAUSSIAN, description="核函数族")
    gamma: float = Field(..., gt=0, allow_inf_nan=False, description="逆平方长度尺度")


class _ArrayModel(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)


class FeatureMatrix(_ArrayModel):
    """n x d sample matrix, rows are samples / 特征矩阵（行为样本）"""
    data: np.ndarray = Field(..., description="n x d float64 matrix")

    @field_validator("data")
    @classmethod
    def _two_dimensional(cls, v):
        v = np.asarray(v, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] < 2 or v.shape[1] < 1:
            raise ValueError(f"feature matrix must be n x d with n >= 2, d >= 1; got shape {v.shape}")
        return v

    @classmethod
    def from_array(cls, values, source: Optional[str] = None) -> "FeatureMatrix":
        """Builds a matrix, raising the package's input errors instead of pydantic's."""
        arr = np.array(values, dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[:, np.newaxis]
        if arr.ndim != 2 or arr.shape[0] < 2 or arr.shape[1] < 1:
            raise InputError(f"feature matrix must be n x d with n >= 2, d >= 1; got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            bad = np.argwhere(~np.isfinite(arr))[0]
            raise NonFiniteValueError(f"non-finite value at row {bad[0]}, column {bad[1]}", path=source)
        return cls(data=arr)

    @property
    def n(self) -> int:
        return int(self.data.shape[0])

    @property
    def d(self) -> int:
        return int(self.data.shape[1])


class PairDesign(_ArrayModel):
    """Index pairs used by the incomplete estimator / 不完全U统计量的配对集合"""
    pairs: np.ndarray = Field(..., description="ell x 2 int64 array of (i, j), i != j")
    n: int = Field(..., ge=2, description="样本数")
    mode: DesignMode = Field(..., description="设计模式")

    @property
    def ell(self) -> int:
        return int(self.pairs.shape[0])


class HMatrix(_ArrayModel):
    """Per-pair h-kernel values, one column per candidate model"""
    values: np.ndarray = Field(..., description="ell x S float64 matrix")
    design: PairDesign

    @property
    def ell(self) -> int:
        return int(self.values.shape[0])

    @property
    def s(self) -> int:
        return int(self.values.shape[1])


class ScoreVector(_ArrayModel):
    """Incomplete MMD^2 scores with their estimated covariance"""
    z: np.ndarray = Field(..., description="长度为S的MMD^2估计")
    sigma: np.ndarray = Field(..., description="S x S 协方差估计（含岭正则）")
    model_ids: List[str] = Field(..., description="模型标签")
    ridge: float = Field(default=0.0, ge=0, description="加到对角线上的岭")

    @model_validator(mode="after")
    def _shapes(self):
        s = len(self.model_ids)
        if s < 2:
            raise ValueError("a score vector needs at least two models")
        if self.z.shape != (s,) or self.sigma.shape != (s, s):
            raise ValueError(f"shape mismatch: z {self.z.shape}, sigma {self.sigma.shape}, S={s}")
        if not np.array_equal(self.sigma, self.sigma.T):
            raise ValueError("sigma must be symmetric")
        return self

    @property
    def log_det_sigma(self) -> float:
        _, logdet = np.linalg.slogdet(self.sigma)
        return float(logdet)

    @property
    def standard_errors(self) -> np.ndarray:
        return np.sqrt(np.diag(self.sigma))


class SelectionEvent(_ArrayModel):
    """Affine selection event A z <= b for "model k has the smallest score" """
    a_matrix: np.ndarray = Field(..., description="(S-1) x S")
    b: np.ndarray = Field(..., description="长度 S-1，全零")
    selected: int = Field(..., ge=0)


class TruncatedInterval(BaseModel):
    """Truncation region of eta^T z given the selection event / 截断区间"""
    lower: float = Field(..., description="V-，可为 -inf")
    upper: float = Field(..., description="V+，可为 +inf")
    eta_z: float = Field(..., description="观测到的 eta^T z")
    eta_sigma_eta: float = Field(..., gt=0, description="eta^T Sigma eta")

    @property
    def scale(self) -> float:
        return math.sqrt(self.eta_sigma_eta)


class SelectionResult(BaseModel):
    """Outcome of select-then-test"""
    selected: int = Field(..., ge=0)
    selected_label: str
    z: List[float]
    interval: TruncatedInterval
    p_value: float = Field(..., ge=0, le=1)
    sidedness: Sidedness = Sidedness.ONE
    naive_p_value: float = Field(..., ge=0, le=1, description="未校正的正态p值")
    confidence_interval: Optional[List[float]] = Field(default=None, description="eta^T mu 的选择后置信区间")


class GaussianMeanShift(BaseModel):
    """N(delta * 1, I): every coordinate shifted by delta"""
    kind: Literal["mean_shift"] = "mean_shift"
    delta: float = Field(default=0.0, allow_inf_nan=False)


class GaussianScale(BaseModel):
    """N(0, factor^2 I)"""
    kind: Literal["scale"] = "scale"
    factor: float = Field(..., gt=0, allow_inf_nan=False)


class GaussianMixtureDrop(BaseModel):
    """Equal-weight unit-variance mixture on the first axis keeping only the first modes"""
    kind: Literal["mixture_drop"] = "mixture_drop"
    modes_kept: int = Field(..., ge=1)
    total_modes: int = Field(..., ge=1)
    spacing: float = Field(default=3.0, gt=0)

    @model_validator(mode="after")
    def _kept_within_total(self):
        if self.modes_kept > self.total_modes:
            raise ValueError("modes_kept cannot exceed total_modes")
        return self


SyntheticDistribution = Union[GaussianMeanShift, GaussianScale, GaussianMixtureDrop]


class SyntheticModelSpec(BaseModel):
    """合成生成模型规格"""
    distribution: SyntheticDistribution = Field(..., discriminator="kind")
    dim: int = Field(..., ge=1)
    label: str = Field(..., min_length=1)


class TrialReport(BaseModel):
    """One simulated or real select-and-test run / 单次试验报告"""
    seed: int
    trial: int = Field(..., ge=0)
    labels: List[str]
    z: List[float]
    log_det_sigma: float
    selected: str
    lower: float
    upper: float
    p_value: float = Field(..., ge=0, le=1)
    elapsed_ms: Optional[float] = Field(default=None, description="耗时（毫秒）")
    delta: Optional[float] = Field(default=None, description="功效研究中的均值偏移")


class StudySummary(BaseModel):
    """p值分布摘要"""
    study: str
    trials: int
    alpha: float
    ks_distance: float
    ks_p_value: float
    rejection_rate: float
    rejection_se: float
    histogram: List[int] = Field(default_factory=list, description="[0,1] 上20个等宽箱的计数")
    delta: Optional[float] = None


class RankingRow(BaseModel):
    """平均分数表的一行"""
    label: str
    mean: float
    std: float
    trials: int


class ModelEntry(BaseModel):
    label: str = Field(..., min_length=1)
    path: str


class DatasetManifest(BaseModel):
    """数据清单：真实样本 + 候选模型"""
    real_path: str
    model_entries: List[ModelEntry] = Field(..., min_length=1)
    format: FeatureFormat = FeatureFormat.CSV

    @model_validator(mode="after")
    def _unique_labels(self):
        labels = [m.label for m in self.model_entries]
        if len(set(labels)) != len(labels):
            raise ValueError("model labels must be unique")
        return self

    @property
    def labels(self) -> List[str]:
        return [m.label for m in self.model_entries]


class RunConfig(BaseModel):
    """运行配置（命令行参数）"""
    alpha: float = Field(default=0.05, gt=0, lt=1, description="显著性水平")
    r: int = Field(default=5, ge=1, description="子样本倍数, ell = r * n")
    design_mode: DesignMode = Field(default=DesignMode.RANDOM)
    seed: int = Field(default=0, ge=0)
    gamma: Optional[float] = Field(default=None, gt=0, allow_inf_nan=False, description="覆盖带宽")
    sidedness: Sidedness = Field(default=Sidedness.ONE)
    ridge_scale: float = Field(default=1e-8, ge=0)
    max_points: int = Field(default=1000, ge=2, description="中位数启发式的子样本上限")
    ci_level: float = Field(default=0.95, gt=0, lt=1)


class ScoreTable(BaseModel):
    """Per-model scores with standard errors, as printed by `score`"""
    labels: List[str]
    z: List[float]
    standard_errors: List[float]
    gamma: float
    ell: int
    warning: Optional[str] = Field(default=None, description="协方差退化时的提示")


class AnalysisResult(_ArrayModel):
    """Everything one select-and-test run produced"""
    scores: ScoreVector
    result: SelectionResult
    gamma: float
    ell: int
    design_mode: DesignMode


class StudyResult(BaseModel):
    """Trial reports plus one summary per study cell"""
    reports: List[TrialReport]
    summaries: List[StudySummary]


class RankingResult(BaseModel):
    rows: List[RankingRow] = Field(..., description="按平均分数升序")
    reports: List[TrialReport]
