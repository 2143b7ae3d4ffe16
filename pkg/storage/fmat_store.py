"""
FMAT binary feature files.

Layout (little-endian): b"FMAT", version byte 0x01, uint32 n, uint32 d,
then n * d float32 values in row-major order. Values are widened to float64
on load; writing narrows to float32, so only float32-representable data
round-trips bit-exactly.
"""
import struct

import numpy as np

from errors import BadMagicError, FeatureParseError, NonFiniteValueError, TruncatedPayloadError
from schemas import FeatureFormat, FeatureMatrix
from storage.feature_store import FeatureStore

MAGIC = b"FMAT"
VERSION = 0x01
_HEADER = struct.Struct("<4sBII")
_VALUE = np.dtype("<f4")
_UINT32_MAX = 0xFFFFFFFF


class FmatFeatureStore(FeatureStore):
    format = FeatureFormat.FMAT

    def decode(self, payload: bytes, source: str) -> FeatureMatrix:
        head = payload[:len(MAGIC)]
        if head != MAGIC[:len(head)]:
            raise BadMagicError(f"bad magic {head!r}", path=source, position=0)
        if len(payload) < _HEADER.size:
            raise TruncatedPayloadError(f"header needs {_HEADER.size} bytes, file has {len(payload)}",
                                        path=source, position=len(payload))
        _, version, n, d = _HEADER.unpack_from(payload)
        if version != VERSION:
            raise FeatureParseError(f"unsupported version {version}", path=source, position=4)
        if n < 2 or d < 1:
            raise FeatureParseError(f"shape {n} x {d} needs n >= 2 and d >= 1", path=source, position=5)

        expected = _HEADER.size + n * d * _VALUE.itemsize
        if len(payload) < expected:
            raise TruncatedPayloadError(f"payload for {n} x {d} needs {expected} bytes, file has {len(payload)}",
                                        path=source, position=len(payload))
        if len(payload) > expected:
            raise FeatureParseError(f"{len(payload) - expected} trailing bytes", path=source, position=expected)

        values = np.frombuffer(payload, dtype=_VALUE, count=n * d, offset=_HEADER.size).reshape(n, d)
        finite = np.isfinite(values)
        if not finite.all():
            row, column = np.argwhere(~finite)[0]
            offset = _HEADER.size + (row * d + column) * _VALUE.itemsize
            raise NonFiniteValueError(f"non-finite value at row {row}, column {column} (byte {offset})",
                                      path=source)
        return FeatureMatrix(data=values.astype(np.float64))

    def encode(self, matrix: FeatureMatrix) -> bytes:
        n, d = matrix.n, matrix.d
        if n > _UINT32_MAX or d > _UINT32_MAX:
            raise FeatureParseError(f"shape {n} x {d} does not fit the header")
        with np.errstate(over="ignore"):
            values = matrix.data.astype(_VALUE)
        if not np.isfinite(values).all():
            raise NonFiniteValueError("values overflow float32")
        return _HEADER.pack(MAGIC, VERSION, n, d) + values.tobytes(order="C")
