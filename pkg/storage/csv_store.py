"""
Headerless CSV feature files: one sample per line, comma-separated decimals.
"""
import math
from typing import List

import numpy as np

from errors import MalformedValueError, NonFiniteValueError, RowWidthError
from schemas import FeatureFormat, FeatureMatrix
from storage.feature_store import FeatureStore


class CsvFeatureStore(FeatureStore):
    format = FeatureFormat.CSV

    def decode(self, payload: bytes, source: str) -> FeatureMatrix:
        try:
            text = payload.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedValueError("not UTF-8 text", path=source, position=exc.start) from exc

        rows: List[List[float]] = []
        width = None
        for line_no, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            fields = line.split(",")
            if width is None:
                width = len(fields)
            elif len(fields) != width:
                raise RowWidthError(f"expected {width} fields, found {len(fields)}",
                                    path=source, position=line_no, unit="line")
            row = []
            for column, field in enumerate(fields):
                try:
                    value = float(field.strip())
                except ValueError:
                    raise MalformedValueError(f"field {column + 1} is not a number: {field.strip()!r}",
                                              path=source, position=line_no, unit="line") from None
                if not math.isfinite(value):
                    raise NonFiniteValueError(f"line {line_no}, field {column + 1}: {field.strip()}",
                                              path=source)
                row.append(value)
            rows.append(row)

        if len(rows) < 2:
            raise RowWidthError(f"need at least two samples, found {len(rows)}",
                                path=source, position=len(text.splitlines()), unit="line")
        return FeatureMatrix.from_array(np.array(rows, dtype=np.float64), source=source)

    def encode(self, matrix: FeatureMatrix) -> bytes:
        # repr of a Python float is the shortest string that reads back exactly
        lines = [",".join(repr(v) for v in row) for row in matrix.data.tolist()]
        return ("\n".join(lines) + "\n").encode("utf-8")
