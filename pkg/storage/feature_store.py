"""
Feature Matrix Storage Abstract Interface
特征矩阵存储抽象接口 - 每种文件格式一个实现
"""
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Union

from errors import StorageIOError
from schemas import FeatureFormat, FeatureMatrix

PathLike = Union[str, Path]


class FeatureStore(ABC):
    """
    特征矩阵存储抽象接口

    `load` / `save` handle the filesystem and turn OS errors into
    StorageIOError naming the path; subclasses only convert between bytes
    and matrices.
    """

    format: FeatureFormat

    @abstractmethod
    def decode(self, payload: bytes, source: str) -> FeatureMatrix:
        """
        解析文件内容

        Args:
            payload: 文件的全部字节
            source: 文件路径（用于错误信息）

        Returns:
            float64 特征矩阵
        """
        pass

    @abstractmethod
    def encode(self, matrix: FeatureMatrix) -> bytes:
        """
        序列化特征矩阵

        Args:
            matrix: 特征矩阵

        Returns:
            要写入文件的字节
        """
        pass

    def load(self, path: PathLike) -> FeatureMatrix:
        path = Path(path)
        if not path.is_file():
            raise StorageIOError("file not found", path=str(path))
        try:
            payload = path.read_bytes()
        except OSError as exc:
            raise StorageIOError(f"cannot read: {exc.strerror or exc}", path=str(path)) from exc
        return self.decode(payload, str(path))

    def save(self, path: PathLike, matrix: FeatureMatrix) -> None:
        path = Path(path)
        payload = self.encode(matrix)
        try:
            path.write_bytes(payload)
        except OSError as exc:
            raise StorageIOError(f"cannot write: {exc.strerror or exc}", path=str(path)) from exc
