"""
Storage module for feature matrices, manifests, and result files
特征矩阵、数据清单与结果文件的存储模块
"""
from pathlib import Path
from typing import Dict, Optional, Union

from errors import InputError
from schemas import FeatureFormat, FeatureMatrix
from storage.csv_store import CsvFeatureStore
from storage.feature_store import FeatureStore, PathLike
from storage.fmat_store import FmatFeatureStore
from storage.manifest_store import load_manifest, parse_manifest
from storage.report_store import write_ranking, write_report, write_scores

_STORES: Dict[FeatureFormat, FeatureStore] = {
    FeatureFormat.CSV: CsvFeatureStore(),
    FeatureFormat.FMAT: FmatFeatureStore(),
}


def get_feature_store(fmt: Union[FeatureFormat, str]) -> FeatureStore:
    try:
        return _STORES[FeatureFormat(fmt)]
    except ValueError:
        raise InputError(f"unknown feature format {fmt!r}") from None


def _infer_format(path: PathLike) -> FeatureFormat:
    return FeatureFormat.FMAT if Path(path).suffix.lower() == ".fmat" else FeatureFormat.CSV


def load_features(path: PathLike, fmt: Optional[Union[FeatureFormat, str]] = None) -> FeatureMatrix:
    """Reads a feature file; without `fmt` the format follows the file suffix."""
    return get_feature_store(fmt or _infer_format(path)).load(path)


def write_features(path: PathLike, matrix: FeatureMatrix,
                   fmt: Optional[Union[FeatureFormat, str]] = None) -> None:
    get_feature_store(fmt or _infer_format(path)).save(path, matrix)


__all__ = [
    'FeatureStore', 'CsvFeatureStore', 'FmatFeatureStore',
    'get_feature_store', 'load_features', 'write_features',
    'load_manifest', 'parse_manifest', 'write_report', 'write_ranking', 'write_scores',
]
