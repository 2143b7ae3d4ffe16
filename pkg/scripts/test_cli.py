"""
命令行测试：子命令输出、退出码与可复现的报告文件
"""
import json
import sys
from pathlib import Path

import numpy as np
import pytest

# 添加项目根目录到路径
sys.path.insert(0, str(Path(__file__).parent.parent))

import cli
from language_manager import lang_manager
from schemas import FeatureMatrix
from storage import write_features


def _dataset(tmp_path: Path, shifts, n: int = 120, dim: int = 3, seed: int = 0, fmt: str = "csv") -> Path:
    rng = np.random.default_rng(seed)
    write_features(tmp_path / f"real.{fmt}", FeatureMatrix(data=rng.normal(size=(n, dim))))
    lines = [f"format={fmt}", f"real=real.{fmt}"]
    for k, delta in enumerate(shifts):
        name = f"m{k}.{fmt}"
        write_features(tmp_path / name, FeatureMatrix(data=rng.normal(size=(n, dim)) + delta))
        lines.append(f"model.m{k}={name}")
    manifest = tmp_path / "manifest.txt"
    manifest.write_text("\n".join(lines) + "\n")
    return manifest


def test_score_prints_ascending_table(tmp_path, capsys):
    manifest = _dataset(tmp_path, [1.0, 0.0, 0.5])
    assert cli.main(["score", "--manifest", str(manifest), "--seed", "3"]) == 0
    out = capsys.readouterr().out.splitlines()
    rows = [line.split() for line in out[1:4]]
    assert [r[0] for r in rows] == ["m1", "m2", "m0"]
    assert [float(r[1]) for r in rows] == sorted(float(r[1]) for r in rows)


def test_score_identical_models_warn(tmp_path, capsys):
    manifest = _dataset(tmp_path, [0.5])
    manifest.write_text(manifest.read_text() + "model.copy=m0.csv\n")
    assert cli.main(["score", "--manifest", str(manifest)]) == 0
    captured = capsys.readouterr()
    rows = [line.split() for line in captured.out.splitlines()[1:3]]
    assert rows[0][1] == rows[1][1]
    assert "warning" in captured.err


def test_score_writes_records(tmp_path, capsys):
    manifest = _dataset(tmp_path, [0.0, 0.5], fmt="fmat")
    out = tmp_path / "scores.jsonl"
    assert cli.main(["score", "--manifest", str(manifest), "--out", str(out)]) == 0
    assert [json.loads(line)["label"] for line in out.read_text().splitlines()] == ["m0", "m1"]


def test_missing_file_exits_2_naming_path(tmp_path, capsys):
    manifest = _dataset(tmp_path, [0.0, 0.5])
    (tmp_path / "m1.csv").unlink()
    assert cli.main(["select-test", "--manifest", str(manifest)]) == 2
    assert "m1.csv" in capsys.readouterr().err

    assert cli.main(["score", "--manifest", str(tmp_path / "absent.txt")]) == 2
    assert "absent.txt" in capsys.readouterr().err


def test_select_test_single_model_is_input_error(tmp_path, capsys):
    manifest = _dataset(tmp_path, [0.0])
    assert cli.main(["select-test", "--manifest", str(manifest)]) == 2
    assert "selection requires at least two models" in capsys.readouterr().err


def test_select_test_rejects_shifted_models(tmp_path, capsys):
    manifest = _dataset(tmp_path, [1.0, 1.2, 1.5], n=300, dim=4)
    assert cli.main(["select-test", "--manifest", str(manifest), "--ci", "0.9"]) == 0
    out = capsys.readouterr().out
    assert "selected model: m0" in out
    assert "confidence interval" in out
    assert lang_manager.t("DECISION_REJECT", alpha=0.05, label="m0") in out


def test_select_test_lists_every_labelled_score(tmp_path, capsys):
    manifest = _dataset(tmp_path, [0.8, 0.0, 0.4])
    assert cli.main(["select-test", "--manifest", str(manifest)]) == 0
    line = next(l for l in capsys.readouterr().out.splitlines() if l.startswith("scores: "))
    entries = [item.split("=") for item in line[len("scores: "):].split(", ")]
    assert [label for label, _ in entries] == ["m0", "m1", "m2"]
    z = [float(value) for _, value in entries]
    assert min(range(3), key=z.__getitem__) == 1


def test_fail_to_reject_wording_never_claims_equality():
    text = lang_manager.t("DECISION_FAIL_TO_REJECT", alpha=0.05)
    assert "no evidence of difference at level 0.05" in text
    assert "equal" not in text


def test_select_test_report_is_reproducible(tmp_path, capsys):
    manifest = _dataset(tmp_path, [0.0, 0.1, 0.2])
    first, second = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    for out in (first, second):
        assert cli.main(["select-test", "--manifest", str(manifest), "--seed", "9", "--out", str(out)]) == 0
    assert first.read_bytes() == second.read_bytes()
    records = [json.loads(line) for line in first.read_text().splitlines()]
    assert [r["record"] for r in records] == ["trial", "summary"]
    decision = capsys.readouterr().out
    assert "decision:" in decision


def test_degenerate_data_exits_3(tmp_path, capsys):
    constant = FeatureMatrix(data=np.full((10, 2), 5.0))
    for name in ("real.csv", "a.csv", "b.csv"):
        write_features(tmp_path / name, constant)
    manifest = tmp_path / "manifest.txt"
    manifest.write_text("real=real.csv\nmodel.a=a.csv\nmodel.b=b.csv\n")
    assert cli.main(["select-test", "--manifest", str(manifest)]) == 3
    assert "median pairwise distance is zero" in capsys.readouterr().err


def test_invalid_alpha_exits_2(tmp_path, capsys):
    manifest = _dataset(tmp_path, [0.0, 0.5])
    assert cli.main(["select-test", "--manifest", str(manifest), "--alpha", "1.5"]) == 2


def test_bad_flag_value_exits_2():
    with pytest.raises(SystemExit) as info:
        cli.main(["calibrate", "--design", "sparse"])
    assert info.value.code == 2


def test_calibrate_writes_byte_identical_reports(tmp_path, capsys):
    args = ["calibrate", "--models", "3", "--n", "40", "--dim", "2", "--trials", "5", "--seed", "2", "--quiet"]
    first, second = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    assert cli.main(args + ["--out", str(first)]) == 0
    assert cli.main(args + ["--out", str(second), "--workers", "3"]) == 0
    assert first.read_bytes() == second.read_bytes()
    lines = first.read_text().splitlines()
    assert len(lines) == 6
    assert json.loads(lines[-1])["record"] == "summary"
    assert "KS distance" in capsys.readouterr().out


def test_timings_flag_adds_elapsed(tmp_path, capsys):
    out = tmp_path / "t.jsonl"
    assert cli.main(["calibrate", "--models", "2", "--n", "30", "--dim", "1", "--trials", "2",
                     "--timings", "--quiet", "--out", str(out)]) == 0
    assert "elapsed_ms" in json.loads(out.read_text().splitlines()[0])


def test_power_prints_one_line_per_delta(tmp_path, capsys):
    assert cli.main(["power", "--models", "3", "--n", "40", "--dim", "2", "--trials", "3",
                     "--deltas", "0,0.5", "--quiet"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 2
    assert "delta=0.5" in out[1]


def test_ranking_table(tmp_path, capsys):
    out = tmp_path / "rank.jsonl"
    assert cli.main(["ranking", "--shifts", "0,1", "--scales", "2", "--drops", "1/2", "--n", "60",
                     "--dim", "2", "--trials", "2", "--quiet", "--out", str(out)]) == 0
    lines = capsys.readouterr().out.splitlines()
    labels = [line.split()[0] for line in lines[1:]]
    assert sorted(labels) == ["drop_1of2", "scale_2", "shift_0", "shift_1"]
    means = [float(line.split()[1]) for line in lines[1:]]
    assert means == sorted(means)
    records = [json.loads(line) for line in out.read_text().splitlines()]
    assert sum(r["record"] == "ranking" for r in records) == 4


def test_ranking_drops_must_share_total(capsys):
    assert cli.main(["ranking", "--drops", "1/2,2/3", "--trials", "1", "--quiet"]) == 2
