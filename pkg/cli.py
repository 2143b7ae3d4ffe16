"""
Command-line entry point.

    python cli.py score --manifest data/manifest.txt
    python cli.py select-test --manifest data/manifest.txt --alpha 0.05 --ci 0.95
    python cli.py calibrate --trials 1000 --seed 1 --out null.jsonl
    python cli.py power --deltas 0,0.1,0.5 --out power.jsonl
    python cli.py ranking --shifts 0,0.2,0.5 --drops 2/3

Exit codes: 0 analysis completed, 2 input or parse error, 3 numerical or
degenerate-data failure.
"""
import argparse
import logging
import sys
from typing import List, Optional, Sequence, Tuple

from pydantic import ValidationError

from config import get_settings
from errors import InputError, MMDInfError
from language_manager import lang_manager
from schemas import (DesignMode, FeatureMatrix, GaussianMeanShift, GaussianMixtureDrop, GaussianScale,
                     RunConfig, Sidedness, StudySummary, SyntheticModelSpec)
from selection_handler import SelectionHandler
from simulation_service import SimulationService
from storage import load_features, load_manifest, write_ranking, write_report, write_scores
from synthetic_data import base_spec

logger = logging.getLogger("mmdinf.cli")


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _drop_list(text: str) -> List[Tuple[int, int]]:
    drops = []
    for item in (v.strip() for v in text.split(",")):
        if not item:
            continue
        kept, sep, total = item.partition("/")
        if not sep or not kept.isdigit() or not total.isdigit():
            raise argparse.ArgumentTypeError(f"expected kept/total pairs like 2/3, got {item!r}")
        drops.append((int(kept), int(total)))
    return drops


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--alpha", type=float, default=0.05, help="significance level")
    common.add_argument("--r", type=int, default=5, help="pairs per sample, ell = r * n")
    common.add_argument("--design", choices=[m.value for m in DesignMode], default=DesignMode.RANDOM.value)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--gamma", type=float, default=None, help="kernel bandwidth override")
    common.add_argument("--sided", choices=[s.value for s in Sidedness], default=Sidedness.ONE.value)
    common.add_argument("--out", default=None, help="write JSON-lines records to this path")
    common.add_argument("--timings", action="store_true", help="add elapsed_ms to trial records")
    common.add_argument("--quiet", action="store_true", help="no progress bar")
    common.add_argument("--workers", type=int, default=None, help="threads (default MMDINF_WORKERS)")

    parser = argparse.ArgumentParser(prog="mmdinf", description=lang_manager.t("CLI_DESCRIPTION"))
    commands = parser.add_subparsers(dest="command", required=True)

    for name, help_key in (("score", "HELP_SCORE"), ("select-test", "HELP_SELECT_TEST")):
        cmd = commands.add_parser(name, parents=[common], help=lang_manager.t(help_key))
        cmd.add_argument("--manifest", required=True)
        if name == "select-test":
            cmd.add_argument("--ci", type=float, default=None, metavar="LEVEL",
                             help="also report a selective confidence interval at this level")

    study_defaults = {"calibrate": 1000, "power": 200, "ranking": 100}
    for name, help_key in (("calibrate", "HELP_CALIBRATE"), ("power", "HELP_POWER"), ("ranking", "HELP_RANKING")):
        cmd = commands.add_parser(name, parents=[common], help=lang_manager.t(help_key))
        cmd.add_argument("--n", type=int, default=500, help="samples per set")
        cmd.add_argument("--dim", type=int, default=8)
        cmd.add_argument("--trials", type=int, default=study_defaults[name])
        if name != "ranking":
            cmd.add_argument("--models", type=int, default=7, help="number of candidate models S")
        if name == "power":
            cmd.add_argument("--deltas", type=_float_list, default=[0.0, 0.1, 0.5])
        if name == "ranking":
            cmd.add_argument("--shifts", type=_float_list, default=[0.0, 0.2, 0.5])
            cmd.add_argument("--scales", type=_float_list, default=[])
            cmd.add_argument("--drops", type=_drop_list, default=[], help="mode drops as kept/total, e.g. 2/3")
    return parser


def run_config(args: argparse.Namespace) -> RunConfig:
    options = dict(alpha=args.alpha, r=args.r, design_mode=args.design, seed=args.seed,
                   gamma=args.gamma, sidedness=args.sided)
    if getattr(args, "ci", None) is not None:
        options["ci_level"] = args.ci
    return RunConfig(**options)


def load_dataset(manifest_path: str) -> Tuple[List[FeatureMatrix], FeatureMatrix, List[str]]:
    manifest = load_manifest(manifest_path)
    logger.info(lang_manager.t("LOADING_MANIFEST", count=len(manifest.model_entries), path=manifest_path))
    real = load_features(manifest.real_path, manifest.format)
    models = [load_features(entry.path, manifest.format) for entry in manifest.model_entries]
    return models, real, manifest.labels


def cmd_score(args: argparse.Namespace, config: RunConfig) -> List[str]:
    models, real, labels = load_dataset(args.manifest)
    table = SelectionHandler(config, workers=args.workers).score_table(models, real, labels)

    lines = [lang_manager.t("SCORE_HEADER", label="model", z="MMD^2_inc", se="std. error")]
    for label, z, se in zip(table.labels, table.z, table.standard_errors):
        lines.append(lang_manager.t("SCORE_ROW", label=label, z=z, se=se))
    lines.append(lang_manager.t("SCORE_FOOTER", gamma=table.gamma, ell=table.ell))
    if table.warning:
        print(lang_manager.t("WARNING_COVARIANCE", message=table.warning), file=sys.stderr)
    if args.out:
        write_scores(args.out, table)
    return lines


def cmd_select_test(args: argparse.Namespace, config: RunConfig) -> List[str]:
    models, real, labels = load_dataset(args.manifest)
    if len(models) < 2:
        raise InputError("selection requires at least two models")
    handler = SelectionHandler(config, workers=args.workers, with_confidence=args.ci is not None)
    analysis = handler.analyze(models, real, labels)
    result = analysis.result
    interval = result.interval

    scores = ", ".join(f"{label}={z:.6e}" for label, z in zip(labels, result.z))
    lines = [
        lang_manager.t("SELECTED_MODEL", label=result.selected_label),
        lang_manager.t("ALL_SCORES", scores=scores),
        lang_manager.t("SELECTED_SCORE", z=interval.eta_z),
        lang_manager.t("TRUNCATION_INTERVAL", lower=interval.lower, upper=interval.upper),
        lang_manager.t("P_VALUE", sided=result.sidedness.value, p=result.p_value),
        lang_manager.t("NAIVE_P_VALUE", p=result.naive_p_value),
    ]
    if result.confidence_interval is not None:
        lower, upper = result.confidence_interval
        lines.append(lang_manager.t("CONFIDENCE_INTERVAL", level=100 * config.ci_level, lower=lower, upper=upper))
    if result.p_value < config.alpha:
        lines.append(lang_manager.t("DECISION_REJECT", alpha=config.alpha, label=result.selected_label))
    else:
        lines.append(lang_manager.t("DECISION_FAIL_TO_REJECT", alpha=config.alpha))

    if args.out:
        write_report(args.out, [SelectionHandler.to_report(analysis, config.seed)])
    return lines


def _summary_line(summary: StudySummary) -> str:
    cell = lang_manager.t("STUDY_CELL", delta=summary.delta) if summary.delta is not None else ""
    return lang_manager.t("STUDY_SUMMARY", study=summary.study, cell=cell, trials=summary.trials,
                          ks=summary.ks_distance, ks_p=summary.ks_p_value, alpha=summary.alpha,
                          rate=summary.rejection_rate, se=summary.rejection_se)


def _service(args: argparse.Namespace, config: RunConfig) -> SimulationService:
    return SimulationService(config, workers=args.workers,
                             progress=not args.quiet and sys.stderr.isatty())


def cmd_calibrate(args: argparse.Namespace, config: RunConfig) -> List[str]:
    study = _service(args, config).run_null_calibration(args.models, args.n, args.dim, args.trials)
    if args.out:
        write_report(args.out, study.reports, study.summaries, include_timings=args.timings)
    return [_summary_line(s) for s in study.summaries]


def cmd_power(args: argparse.Namespace, config: RunConfig) -> List[str]:
    study = _service(args, config).run_power_study(args.deltas, args.models, args.n, args.dim, args.trials)
    if args.out:
        write_report(args.out, study.reports, study.summaries, include_timings=args.timings)
    return [_summary_line(s) for s in study.summaries]


def ranking_specs(shifts: Sequence[float], scales: Sequence[float], drops: Sequence[Tuple[int, int]],
                  dim: int) -> Tuple[List[SyntheticModelSpec], SyntheticModelSpec]:
    """
    The model zoo for `ranking`. With mode drops the real distribution is the
    full mixture they were cut from; otherwise it is N(0, I).
    """
    specs = [SyntheticModelSpec(distribution=GaussianMeanShift(delta=d), dim=dim, label=f"shift_{d:g}")
             for d in shifts]
    specs += [SyntheticModelSpec(distribution=GaussianScale(factor=f), dim=dim, label=f"scale_{f:g}")
              for f in scales]
    real = base_spec(dim)
    if drops:
        totals = {total for _, total in drops}
        if len(totals) != 1:
            raise InputError("all --drops must share one total mode count")
        total = totals.pop()
        real = SyntheticModelSpec(distribution=GaussianMixtureDrop(modes_kept=total, total_modes=total),
                                  dim=dim, label="real")
        specs += [SyntheticModelSpec(distribution=GaussianMixtureDrop(modes_kept=k, total_modes=total),
                                     dim=dim, label=f"drop_{k}of{total}")
                  for k, _ in drops]
    return specs, real


def cmd_ranking(args: argparse.Namespace, config: RunConfig) -> List[str]:
    specs, real = ranking_specs(args.shifts, args.scales, args.drops, args.dim)
    ranking = _service(args, config).run_ranking_study(specs, args.n, args.trials, real_spec=real)
    if args.out:
        write_ranking(args.out, ranking.rows, ranking.reports, include_timings=args.timings)
    lines = [lang_manager.t("RANKING_HEADER", label="model", mean="mean", std="std")]
    lines += [lang_manager.t("RANKING_ROW", label=row.label, mean=row.mean, std=row.std) for row in ranking.rows]
    return lines


COMMANDS = {
    "score": cmd_score,
    "select-test": cmd_select_test,
    "calibrate": cmd_calibrate,
    "power": cmd_power,
    "ranking": cmd_ranking,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """The main entry point; returns the process exit code."""
    settings = get_settings()
    logging.basicConfig(level=settings.log_level, stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)

    try:
        config = run_config(args)
        if args.workers is not None and args.workers < 1:
            raise InputError("--workers must be at least 1")
        # everything is computed before the first line is printed
        lines = COMMANDS[args.command](args, config)
    except ValidationError as exc:
        print(lang_manager.t("ERROR_INVALID_OPTIONS", message=exc.errors()[0]["msg"]), file=sys.stderr)
        return 2
    except MMDInfError as exc:
        logger.debug("%s failed", args.command, exc_info=True)
        print(lang_manager.t("ERROR", message=exc), file=sys.stderr)
        return exc.exit_code

    for line in lines:
        print(line)
    if args.out:
        print(lang_manager.t("REPORT_WRITTEN", path=args.out), file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
