"""
Dataset manifests: line-oriented key=value files.

    # comment
    format=csv
    real=features/real.csv
    model.dcgan=features/dcgan.csv
    model.wgan=features/wgan.csv

Relative paths are resolved against the manifest's directory. `format`
defaults to csv; model order is file order.
"""
from pathlib import Path
from typing import Dict, List, Optional

from errors import ManifestError, StorageIOError
from schemas import DatasetManifest, FeatureFormat, ModelEntry
from storage.feature_store import PathLike

_MODEL_PREFIX = "model."


def parse_manifest(text: str, base_dir: Path, source: str = "<memory>") -> DatasetManifest:
    real: Optional[str] = None
    fmt = FeatureFormat.CSV
    entries: List[ModelEntry] = []
    seen: Dict[str, int] = {}

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ManifestError(f"expected key=value, got {line!r}", path=source, line=line_no)
        if not value:
            raise ManifestError(f"empty value for {key!r}", path=source, line=line_no)

        if key == "format":
            try:
                fmt = FeatureFormat(value.lower())
            except ValueError:
                raise ManifestError(f"unknown format {value!r} (csv or fmat)", path=source, line=line_no) from None
        elif key == "real":
            if real is not None:
                raise ManifestError("real is given twice", path=source, line=line_no)
            real = str(base_dir / value)
        elif key.startswith(_MODEL_PREFIX):
            label = key[len(_MODEL_PREFIX):]
            if not label:
                raise ManifestError("model entry without a label", path=source, line=line_no)
            if label in seen:
                raise ManifestError(f"duplicate model label {label!r} (first on line {seen[label]})",
                                    path=source, line=line_no)
            seen[label] = line_no
            entries.append(ModelEntry(label=label, path=str(base_dir / value)))
        else:
            raise ManifestError(f"unknown key {key!r}", path=source, line=line_no)

    if real is None:
        raise ManifestError("no real= entry", path=source)
    if not entries:
        raise ManifestError("no model.<label>= entries", path=source)
    return DatasetManifest(real_path=real, model_entries=entries, format=fmt)


def load_manifest(path: PathLike) -> DatasetManifest:
    path = Path(path)
    if not path.is_file():
        raise StorageIOError("file not found", path=str(path))
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise StorageIOError(f"cannot read manifest: {exc}", path=str(path)) from exc
    return parse_manifest(text, path.parent, source=str(path))
