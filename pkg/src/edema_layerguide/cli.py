# GNU General Public License v3.0+ (see LICENSES/GPL-3.0-or-later.txt or
# https://www.gnu.org/licenses/gpl-3.0.txt)
# SPDX-License-Identifier: GPL-3.0-or-later
# SPDX-FileCopyrightText: 2026, edema-layerguide contributors

"""
Command line interface.

Exit codes: 0 on success (degenerate frames included), 2 for invalid input or
options, 4 for I/O failures.
"""

from __future__ import annotations

import argparse
import asyncio
import logging
import os
import sys
import typing as t

from edema_layerguide import __version__
from edema_layerguide.errors import ConfigError, FormatError, ValidationError
from edema_layerguide.formats import (
    canonical_json,
    load_grid,
    load_json,
    load_layers,
    load_mask,
    store_json,
    store_mask,
)
from edema_layerguide.io import write_file
from edema_layerguide.metrics import (
    METRIC_NAMES,
    AggregateReport,
    RateMode,
    evaluate,
    format_percent,
    lr_trend,
    report_json,
    strategy_trend,
)
from edema_layerguide.phantom import (
    IssueFlag,
    OversegKind,
    PhantomSpec,
    SuiteEntry,
    generate_suite,
    load_suite,
)
from edema_layerguide.raster import BinaryMask
from edema_layerguide.refine import (
    BoundaryStrategy,
    RefineConfig,
    RefineOutcome,
    refine,
)
from edema_layerguide.surrogate import SurrogateConfig, residual_to_oriseg
from edema_layerguide.tta import (
    LogisticPixelModel,
    TtaConfig,
    predicted_oriseg,
    run_online,
)
from edema_layerguide.yaml import load_option_file, load_schedule_file

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 4

SWEEP_LEARNING_RATES: tuple[float, ...] = (0.0, 1e-5, 5e-5, 1e-4, 5e-4)
BASELINE_LABEL = "baseline 2"
SUMMARY_NAME = "summary.json"
BASELINE_1_LABEL = "baseline 1"
TTA_KIND = "tta"
STRATEGY_KIND = "strategy"
# Coarse mask first, then the refined runs.
STRATEGY_RUNS: tuple[BoundaryStrategy | None, ...] = (
    None,
    BoundaryStrategy.S1,
    BoundaryStrategy.S2,
    BoundaryStrategy.S3,
)
STRATEGY_LABELS: tuple[str, ...] = (BASELINE_1_LABEL, "S1", "S2", "S3")

_GLOBAL_DESTS = frozenset({"command", "config", "verbose"})

_LOGGER = logging.getLogger(__name__)
_LOG_FORMAT = "%(levelname)s: %(message)s"


class Loggers(t.NamedTuple):
    log_debug: t.Callable[..., None] | None
    log_info: t.Callable[..., None] | None


def _log_at(level: int) -> t.Callable[..., None]:
    def log(msg: str, *args: t.Any) -> None:
        _LOGGER.log(level, msg.format(*args))

    return log


def _install_handler(verbosity: int) -> logging.Handler | None:
    if verbosity < 1:
        return None
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(_LOG_FORMAT))
    _LOGGER.addHandler(handler)
    _LOGGER.setLevel(logging.DEBUG if verbosity >= 2 else logging.INFO)
    _LOGGER.propagate = False
    return handler


def _loggers(verbosity: int) -> Loggers:
    return Loggers(
        log_debug=_log_at(logging.DEBUG) if verbosity >= 2 else None,
        log_info=_log_at(logging.INFO) if verbosity >= 1 else None,
    )


def _strategy(value: str) -> BoundaryStrategy:
    try:
        return BoundaryStrategy.parse(value)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _require(args: argparse.Namespace, *names: str) -> None:
    for name in names:
        if getattr(args, name) is None:
            raise ConfigError(f"Option --{name.replace('_', '-')} is required")


def _refine_config(args: argparse.Namespace) -> RefineConfig:
    return RefineConfig(
        strategy=BoundaryStrategy.parse(args.strategy), tolerance_px=float(args.tol)
    )


def _mode(args: argparse.Namespace) -> RateMode:
    try:
        return RateMode(args.mode)
    except ValueError:
        raise ConfigError(f"Unknown rate mode {args.mode!r}") from None


async def _write_output(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    await write_file(out, text)
    print(out)


async def cmd_synth(args: argparse.Namespace, loggers: Loggers) -> int:
    _require(args, "out")
    if args.count < 1:
        raise ConfigError(f"--count must be at least 1, got {args.count}")
    issues = [
        name.strip()
        for value in args.issues or []
        for name in str(value).split(",")
        if name.strip()
    ]
    spec = PhantomSpec(
        height=args.height,
        width=args.width,
        seed=args.seed,
        issue_flags=IssueFlag.parse_all(issues),
        shift_at=args.shift_at,
        shift_offset=args.shift_offset,
        noise_level=args.noise_level,
        tolerance_px=float(args.tol),
        span_jitter=args.span_jitter,
        overseg=args.overseg,
    )
    schedule = load_schedule_file(args.schedule) if args.schedule else None
    manifest = await generate_suite(
        spec,
        args.count,
        args.out,
        schedule,
        log_debug=loggers.log_debug,
        log_info=loggers.log_info,
    )
    print(manifest)
    return EXIT_OK


async def _coarse_mask(args: argparse.Namespace) -> BinaryMask:
    if args.oriseg is not None:
        if args.image is not None:
            raise ConfigError("Option --image needs --residual")
        return await load_mask(args.oriseg)
    residual = await load_grid(args.residual)
    if args.image is None:
        return residual_to_oriseg(residual, SurrogateConfig())
    # The coarse mask of `tta --lr 0` for this frame.
    image = await load_grid(args.image)
    return predicted_oriseg(LogisticPixelModel(), image, residual, SurrogateConfig())


async def cmd_refine(args: argparse.Namespace, loggers: Loggers) -> int:
    _require(args, "layers", "out")
    if (args.oriseg is None) == (args.residual is None):
        raise ConfigError("Exactly one of --oriseg and --residual is required")
    cfg = _refine_config(args)
    oriseg = await _coarse_mask(args)
    ilm, bm = await load_layers(args.layers)
    height, width = oriseg.shape
    outcome = refine(
        oriseg, ilm, bm, cfg, height, width, log_debug=loggers.log_debug
    )
    pred_path = f"{args.out}_pred.pgm"
    prov_path = f"{args.out}_prov.json"
    await store_mask(pred_path, outcome.mask)
    await store_json(prov_path, outcome.provenance())
    if outcome.degenerate and loggers.log_info:
        loggers.log_info("Degenerate outcome: {}", "; ".join(outcome.notes))
    print(pred_path)
    print(prov_path)
    return EXIT_OK


def _pair_id(name: str, suffix: str) -> str:
    stem = os.path.splitext(os.path.basename(name))[0]
    return stem[: -len(suffix)] if stem.endswith(suffix) else stem


def _collect_masks(path: str, suffix: str) -> dict[str, str]:
    if os.path.isdir(path):
        return {
            _pair_id(name, suffix): os.path.join(path, name)
            for name in sorted(os.listdir(path))
            if name.endswith(f"{suffix}.pgm")
        }
    return {_pair_id(path, suffix): path}


def _metrics_text(report: dict[str, t.Any]) -> str:
    aggregate = report["aggregate"]
    lines = [f"{'metric':<8}{'mean ± std (%)':>20}"]
    for name in METRIC_NAMES:
        lines.append(f"{name.upper():<8}{format_percent(aggregate[name]):>20}")
    lines.append(f"n = {report['n']} ({report['mode']})")
    return "\n".join(lines) + "\n"


async def cmd_eval(args: argparse.Namespace, loggers: Loggers) -> int:
    _require(args, "pred", "gt")
    mode = _mode(args)
    predictions = _collect_masks(args.pred, "_pred")
    truths = _collect_masks(args.gt, "_gt")
    if not predictions:
        raise ValidationError(f"No predictions found in {args.pred}")
    if os.path.isfile(args.pred) and os.path.isfile(args.gt):
        truths = {next(iter(predictions)): args.gt}
    missing = sorted(set(predictions) - set(truths))
    if missing:
        raise ValidationError(f"No ground truth for frame(s) {', '.join(missing)}")
    frames = []
    for frame_id, pred_path in predictions.items():
        pred, gt = await asyncio.gather(
            load_mask(pred_path), load_mask(truths[frame_id])
        )
        frames.append((frame_id, evaluate(pred, gt, mode)))
        if loggers.log_debug:
            loggers.log_debug("Evaluated frame {}", frame_id)
    report = report_json(frames, mode, args.exclude_empty_gt)
    text = _metrics_text(report) if args.format == "text" else canonical_json(report)
    await _write_output(text, args.out)
    return EXIT_OK


def _learning_rates(args: argparse.Namespace) -> list[float]:
    if args.lr_sweep:
        return list(SWEEP_LEARNING_RATES)
    lr = float(args.lr)
    if not 0 <= lr < 1:
        raise ConfigError(f"--lr must lie in [0, 1), got {lr!r}")
    return [lr]


async def _run_tta(
    entries: list[SuiteEntry],
    lr: float,
    args: argparse.Namespace,
    out_dir: str,
    loggers: Loggers,
) -> str:
    refine_cfg = _refine_config(args)
    tta_cfg = (
        None
        if lr == 0
        else TtaConfig(
            lr=lr,
            strategy_for_pseudo_labels=BoundaryStrategy.parse(args.pseudo_strategy),
        )
    )
    model = LogisticPixelModel()
    initial_weights = model.weights.tolist()
    run = run_online(
        model,
        (entry.frame for entry in entries),
        refine_cfg,
        tta_cfg,
        SurrogateConfig(),
        log_debug=loggers.log_debug,
        log_info=loggers.log_info,
    )
    os.makedirs(out_dir, exist_ok=True)
    mode = _mode(args)
    frames = []
    scored = []
    for entry, outcome, record in zip(entries, run.outcomes, run.records):
        frame_id = entry.frame.frame_id
        await store_mask(os.path.join(out_dir, f"{frame_id}_pred.pgm"), outcome.mask)
        await store_json(
            os.path.join(out_dir, f"{frame_id}_prov.json"), outcome.provenance()
        )
        frame_summary: dict[str, t.Any] = {
            "id": frame_id,
            "loss": record.loss,
            "skipped": record.skipped,
            "degenerate": record.degenerate,
        }
        if entry.ground_truth is not None:
            metrics = evaluate(outcome.mask, entry.ground_truth, mode)
            frame_summary.update(metrics.as_dict())
            scored.append((frame_id, metrics))
        frames.append(frame_summary)
    summary = {
        "kind": TTA_KIND,
        "lr": lr,
        "label": BASELINE_LABEL if lr == 0 else f"lr={lr:g}",
        "strategy": refine_cfg.strategy.value,
        "pseudo_strategy": None
        if tta_cfg is None
        else tta_cfg.strategy_for_pseudo_labels.value,
        "tolerance_px": refine_cfg.tolerance_px,
        "initial_weights": initial_weights,
        "final_weights": model.weights.tolist(),
        "frames": frames,
        "metrics": report_json(scored, mode, args.exclude_empty_gt)
        if len(scored) == len(entries)
        else None,
    }
    summary_path = os.path.join(out_dir, SUMMARY_NAME)
    await store_json(summary_path, summary)
    return summary_path


async def cmd_tta(args: argparse.Namespace, loggers: Loggers) -> int:
    _require(args, "frames", "out")
    rates = _learning_rates(args)
    # Validate options before touching any file.
    _refine_config(args)
    BoundaryStrategy.parse(args.pseudo_strategy)
    _mode(args)
    entries = await load_suite(args.frames, log_debug=loggers.log_debug)
    for lr in rates:
        out_dir = os.path.join(args.out, f"lr_{lr:g}") if args.lr_sweep else args.out
        print(await _run_tta(entries, lr, args, out_dir, loggers))
    return EXIT_OK


def _strategy_label(strategy: BoundaryStrategy | None) -> str:
    return BASELINE_1_LABEL if strategy is None else strategy.value


async def _store_strategy_run(
    out_dir: str,
    strategy: BoundaryStrategy | None,
    results: list[tuple[SuiteEntry, BinaryMask, RefineOutcome | None]],
    args: argparse.Namespace,
) -> str:
    os.makedirs(out_dir, exist_ok=True)
    mode = _mode(args)
    frames = []
    scored = []
    for entry, mask, outcome in results:
        frame_id = entry.frame.frame_id
        await store_mask(os.path.join(out_dir, f"{frame_id}_pred.pgm"), mask)
        frame_summary: dict[str, t.Any] = {"id": frame_id}
        if outcome is not None:
            await store_json(
                os.path.join(out_dir, f"{frame_id}_prov.json"), outcome.provenance()
            )
            frame_summary["degenerate"] = outcome.degenerate
        if entry.ground_truth is not None:
            metrics = evaluate(mask, entry.ground_truth, mode)
            frame_summary.update(metrics.as_dict())
            scored.append((frame_id, metrics))
        frames.append(frame_summary)
    summary = {
        "kind": STRATEGY_KIND,
        "label": _strategy_label(strategy),
        "strategy": None if strategy is None else strategy.value,
        "tolerance_px": float(args.tol),
        "frames": frames,
        "metrics": report_json(scored, mode, args.exclude_empty_gt)
        if len(scored) == len(results)
        else None,
    }
    summary_path = os.path.join(out_dir, SUMMARY_NAME)
    await store_json(summary_path, summary)
    return summary_path


async def cmd_refine_suite(args: argparse.Namespace, loggers: Loggers) -> int:
    _require(args, "frames", "out")
    configs = {
        strategy: RefineConfig(strategy=strategy, tolerance_px=float(args.tol))
        for strategy in BoundaryStrategy
    }
    _mode(args)
    entries = await load_suite(args.frames, log_debug=loggers.log_debug)
    model = LogisticPixelModel()
    coarse = [
        predicted_oriseg(
            model, entry.frame.image, entry.frame.residual, SurrogateConfig()
        )
        for entry in entries
    ]
    for strategy in STRATEGY_RUNS:
        results: list[tuple[SuiteEntry, BinaryMask, RefineOutcome | None]] = []
        for entry, oriseg in zip(entries, coarse):
            if strategy is None:
                results.append((entry, oriseg, None))
                continue
            height, width = oriseg.shape
            outcome = refine(
                oriseg,
                entry.frame.ilm,
                entry.frame.bm,
                configs[strategy],
                height,
                width,
                log_debug=loggers.log_debug,
            )
            results.append((entry, outcome.mask, outcome))
        label = _strategy_label(strategy)
        out_dir = os.path.join(args.out, label.replace(" ", "_"))
        print(await _store_strategy_run(out_dir, strategy, results, args))
        if loggers.log_info:
            loggers.log_info("Refined {} frames with {}", len(entries), label)
    return EXIT_OK


def _report_row(summary: t.Any, path: str) -> tuple[str, float, dict[str, t.Any]]:
    """
    Return the run kind, its sort key and the report row of a run summary.
    """
    try:
        kind = STRATEGY_KIND if summary.get("kind") == STRATEGY_KIND else TTA_KIND
        metrics = summary["metrics"]
        aggregate = {
            name: {
                "mean": float(metrics["aggregate"][name]["mean"]),
                "std": float(metrics["aggregate"][name]["std"]),
            }
            for name in METRIC_NAMES
        }
        n = int(metrics["n"])
        if kind == STRATEGY_KIND:
            label = str(summary["label"])
            key = float(STRATEGY_LABELS.index(label))
            head: dict[str, t.Any] = {"strategy": summary["strategy"], "label": label}
        else:
            key = float(summary["lr"])
            head = {"lr": key, "label": BASELINE_LABEL if key == 0 else f"lr={key:g}"}
    except (AttributeError, KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: not a run summary with metrics") from exc
    return kind, key, {**head, "n": n, **aggregate}


def _report_text(
    kind: str, rows: list[dict[str, t.Any]], trend: dict[str, t.Any]
) -> str:
    header = f"{'run':<12}" + "".join(f"{name.upper():>18}" for name in METRIC_NAMES)
    lines = [header]
    for row in rows:
        lines.append(
            f"{row['label']:<12}"
            + "".join(f"{format_percent(row[name]):>18}" for name in METRIC_NAMES)
        )
    if kind == STRATEGY_KIND:
        lines.append(
            f"trend from {' to '.join(trend['order'])}:"
            f" FNR {trend['fnr']}, FPR {trend['fpr']}"
        )
        lines.append(f"ranking by DSC: {', '.join(trend['ranking'])}")
    else:
        lines.append(
            f"trend with increasing lr: FNR {trend['fnr']}, FPR {trend['fpr']}"
        )
    return "\n".join(lines) + "\n"


async def cmd_report(args: argparse.Namespace, loggers: Loggers) -> int:
    if not args.runs:
        raise ConfigError("At least one run summary is required")
    parsed = []
    for path in args.runs:
        parsed.append(_report_row(await load_json(path), path))
    kinds = {kind for kind, _, _ in parsed}
    if len(kinds) > 1:
        raise FormatError(
            "Cannot mix learning-rate runs and strategy runs in one report"
        )
    kind = kinds.pop()
    parsed.sort(key=lambda item: item[1])
    rows = [row for _, _, row in parsed]
    if kind == STRATEGY_KIND:
        trend = strategy_trend(
            {row["label"]: AggregateReport.from_dict(row, row["n"]) for row in rows}
        )
    else:
        trend = lr_trend(
            [(key, AggregateReport.from_dict(row, row["n"])) for _, key, row in parsed]
        )
    report = {"rows": rows, "trend": trend}
    text = (
        _report_text(kind, rows, trend)
        if args.format == "text"
        else canonical_json(report)
    )
    await _write_output(text, args.out)
    return EXIT_OK


_COMMANDS: dict[str, t.Callable[[argparse.Namespace, Loggers], t.Awaitable[int]]] = {
    "synth": cmd_synth,
    "refine": cmd_refine,
    "eval": cmd_eval,
    "tta": cmd_tta,
    "refine-suite": cmd_refine_suite,
    "report": cmd_report,
}


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="YAML file with option defaults")
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="More logging on stderr"
    )
    parser.add_argument("--out", help="Output path")


def _add_refine_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--strategy",
        type=_strategy,
        default=BoundaryStrategy.S1,
        help="Boundary strategy 1, 2 or 3 (default: 1)",
    )
    parser.add_argument(
        "--tol",
        type=float,
        default=2.0,
        help="Intersection tolerance in pixels (default: 2.0)",
    )


def _add_format(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--format", choices=["json", "text"], default="json")


def _add_metric_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--mode",
        choices=[mode.value for mode in RateMode],
        default=RateMode.GT_NORMALIZED.value,
    )
    parser.add_argument("--exclude-empty-gt", action="store_true")


_Parsers = tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]


def _build_parsers() -> _Parsers:
    parser = argparse.ArgumentParser(
        prog="edema-layerguide",
        description="Layer-guided edema refinement and online test-time adaptation",
    )
    parser.add_argument("--version", action="version", version=__version__)
    subparsers = parser.add_subparsers(dest="command", required=True)

    synth = subparsers.add_parser("synth", help="Generate a phantom suite")
    _add_common(synth)
    synth.add_argument("--count", type=int, default=1)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--height", type=int, default=128)
    synth.add_argument("--width", type=int, default=128)
    synth.add_argument(
        "--issues",
        action="append",
        help="Issue flags for every frame (comma separated or repeated)",
    )
    synth.add_argument("--schedule", help="YAML list of per-frame flag lists")
    synth.add_argument("--shift-at", type=int)
    synth.add_argument("--shift-offset", type=float, default=60.0)
    synth.add_argument("--noise-level", type=float, default=4.0)
    synth.add_argument("--span-jitter", type=int, default=0)
    synth.add_argument("--tol", type=float, default=2.0)
    synth.add_argument(
        "--overseg",
        choices=[kind.value for kind in OversegKind],
        help="Over-segmentation to add to the evidence of every frame",
    )

    refine_cmd = subparsers.add_parser("refine", help="Refine one coarse mask")
    _add_common(refine_cmd)
    _add_refine_flags(refine_cmd)
    refine_cmd.add_argument("--oriseg", help="Coarse mask (PGM)")
    refine_cmd.add_argument("--residual", help="Evidence map (f32 with sidecar)")
    refine_cmd.add_argument(
        "--image", help="B-scan (f32) to predict from together with --residual"
    )
    refine_cmd.add_argument("--layers", help="Layer curves (CSV)")

    eval_cmd = subparsers.add_parser("eval", help="Score predictions")
    _add_common(eval_cmd)
    _add_format(eval_cmd)
    _add_metric_flags(eval_cmd)
    eval_cmd.add_argument("--pred", help="Prediction PGM or directory")
    eval_cmd.add_argument("--gt", help="Ground truth PGM or directory")

    tta = subparsers.add_parser("tta", help="Run online test-time adaptation")
    _add_common(tta)
    _add_refine_flags(tta)
    _add_metric_flags(tta)
    tta.add_argument("--frames", help="Frame directory")
    tta.add_argument("--lr", type=float, default=5e-5)
    tta.add_argument("--lr-sweep", action="store_true")
    tta.add_argument("--pseudo-strategy", type=_strategy, default=BoundaryStrategy.S1)

    suite_cmd = subparsers.add_parser(
        "refine-suite", help="Refine a frame directory with every boundary strategy"
    )
    _add_common(suite_cmd)
    _add_metric_flags(suite_cmd)
    suite_cmd.add_argument("--frames", help="Frame directory")
    suite_cmd.add_argument(
        "--tol",
        type=float,
        default=2.0,
        help="Intersection tolerance in pixels (default: 2.0)",
    )

    report = subparsers.add_parser("report", help="Compare run summaries")
    _add_common(report)
    _add_format(report)
    report.add_argument("--runs", nargs="+", default=[])

    return parser, {
        "synth": synth,
        "refine": refine_cmd,
        "eval": eval_cmd,
        "tta": tta,
        "refine-suite": suite_cmd,
        "report": report,
    }


def build_parser() -> argparse.ArgumentParser:
    return _build_parsers()[0]


def parse_args(argv: t.Sequence[str] | None = None) -> argparse.Namespace:
    """
    Parse the command line, applying ``--config`` defaults.

    Options given on the command line win over the configuration file.
    Unknown configuration keys raise ``ConfigError``.
    """
    parser, subparsers = _build_parsers()
    args = parser.parse_args(argv)
    if not args.config:
        return args
    options = load_option_file(args.config)
    unknown = sorted(set(options) - (set(vars(args)) - _GLOBAL_DESTS))
    if unknown:
        raise ConfigError(f"Unknown option(s) in {args.config}: {', '.join(unknown)}")
    subparsers[args.command].set_defaults(**options)
    return parser.parse_args(argv)


def main(argv: t.Sequence[str] | None = None) -> int:
    handler = None
    try:
        args = parse_args(argv)
        handler = _install_handler(args.verbose)
        return asyncio.run(_COMMANDS[args.command](args, _loggers(args.verbose)))
    except ValidationError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    finally:
        if handler is not None:
            _LOGGER.removeHandler(handler)
