"""
JSON-lines result files.

Every line is one object with a "record" field: "trial" for a TrialReport,
"summary" for a StudySummary, "ranking" for a RankingRow, "score" for
one row of a score table. Infinite truncation bounds are written as the
JSON extensions Infinity / -Infinity.
"""
import json
from pathlib import Path
from typing import Iterable, Optional, Sequence

from pydantic import BaseModel

from errors import StorageIOError
from schemas import RankingRow, ScoreTable, StudySummary, TrialReport
from storage.feature_store import PathLike


def _record(kind: str, model: BaseModel, exclude: Optional[set] = None) -> str:
    payload = {"record": kind}
    payload.update(model.model_dump(exclude=exclude, exclude_none=True))
    return json.dumps(payload, ensure_ascii=False)


def _write_lines(path: PathLike, lines: Iterable[str]) -> None:
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for line in lines:
                f.write(line)
                f.write("\n")
    except OSError as exc:
        raise StorageIOError(f"cannot write report: {exc.strerror or exc}", path=str(path)) from exc


def trial_lines(reports: Sequence[TrialReport], include_timings: bool = False) -> Iterable[str]:
    exclude = None if include_timings else {"elapsed_ms"}
    for report in reports:
        yield _record("trial", report, exclude)


def write_report(path: PathLike, reports: Sequence[TrialReport],
                 summaries: Optional[Sequence[StudySummary]] = None,
                 include_timings: bool = False) -> None:
    """
    Trial records followed by summary records. Without summaries a bare
    {"record": "summary", "trials": N} line closes the file, so an empty
    report list still yields one line.

    elapsed_ms is only written with include_timings; everything else is a
    function of the inputs, so repeated runs produce identical files.
    """
    def lines():
        yield from trial_lines(reports, include_timings)
        if summaries:
            for summary in summaries:
                yield _record("summary", summary)
        else:
            yield json.dumps({"record": "summary", "trials": len(reports)})

    _write_lines(path, lines())


def write_ranking(path: PathLike, rows: Sequence[RankingRow],
                  reports: Sequence[TrialReport] = (), include_timings: bool = False) -> None:
    """Optional trial records, then one ranking record per model in ascending mean order."""
    def lines():
        yield from trial_lines(reports, include_timings)
        for row in rows:
            yield _record("ranking", row)

    _write_lines(path, lines())


def write_scores(path: PathLike, table: ScoreTable) -> None:
    """One "score" record per model, in the table's ascending order."""
    def lines():
        for label, z, se in zip(table.labels, table.z, table.standard_errors):
            yield json.dumps({"record": "score", "label": label, "z": z, "standard_error": se,
                              "gamma": table.gamma, "ell": table.ell})

    _write_lines(path, lines())
