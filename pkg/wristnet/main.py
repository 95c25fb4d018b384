import argparse
import logging
import os
import sys
import time
from dataclasses import replace
from typing import Callable, Dict, Optional

from .config import TASKS, WristnetConfig, apply_overrides, config_to_dict, load_config
from .env_utils import export_env
from .errors import ValidationError, WristnetError

# numpy-backed modules are imported inside the commands, after export_env pins BLAS threads.

logger = logging.getLogger("wristnet.main")


def setup_logging(level: str) -> None:
    logging.basicConfig(
        level=level,
        format="[%(asctime)s] %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _manifest(command: str, config: WristnetConfig, inputs: Dict[str, str], outputs, started: float):
    from .report import RunManifest

    return RunManifest(
        command=command,
        config=config_to_dict(config),
        inputs=inputs,
        outputs=list(outputs),
        seed=config.model.seed,
        wall_time_s=round(time.perf_counter() - started, 3),
    )


def cmd_synth(args: argparse.Namespace, config: WristnetConfig) -> int:
    from .config import load_synth_spec
    from .report import write_manifest
    from .synthdata import generate, write_dataset

    started = time.perf_counter()
    spec = load_synth_spec(args.spec) if args.spec else config.synth
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    records = generate(spec)
    manifest_path = write_dataset(records, args.out_dir)
    config = replace(config, synth=spec)
    write_manifest(
        args.out_dir, _manifest("synth", config, {"spec": args.spec or ""}, [manifest_path], started)
    )
    print(f"participants: {len(records)}")
    print(f"bouts: {sum(len(r.bouts) for r in records)}")
    print(f"manifest: {manifest_path}")
    return 0


def cmd_preprocess(args: argparse.Namespace, config: WristnetConfig) -> int:
    from .activities import default_activity_table
    from .archive import write_archive
    from .preprocess import describe_participants, load_manifest, preprocess_dataset
    from .report import write_manifest

    started = time.perf_counter()
    table = default_activity_table()
    records = load_manifest(args.manifest, table)
    windows, stats = preprocess_dataset(records, config.preprocess, table)
    write_archive(args.out, windows)
    write_manifest(args.out, _manifest("preprocess", config, {"manifest": args.manifest}, [args.out], started))

    print(f"windows: {len(windows)}")
    for name, count in stats.windows_per_class.items():
        print(f"  class {name}: {count}")
    for pid, count in stats.windows_per_participant.items():
        print(f"  participant {pid}: {count}")
    print(f"short bouts without windows: {stats.short_bouts}")
    print(
        f"classification: {stats.classification_windows} windows from {stats.classification_activities} of "
        f"{stats.catalogue_classification_activities} activities"
    )
    print(
        f"regression: {stats.regression_windows} windows from {stats.regression_activities} of "
        f"{stats.catalogue_regression_activities} activities"
    )
    demographics = describe_participants(records)
    print("participants: " + ", ".join(f"{k}={v if v is None else round(v, 2)}" for k, v in demographics.items()))
    return 0


def cmd_train(args: argparse.Namespace, config: WristnetConfig) -> int:
    from .archive import read_archive
    from .checkpoint import save_checkpoint
    from .evaluate import make_fold_plan
    from .model import select_task_windows, train
    from .report import write_manifest

    started = time.perf_counter()
    windows = select_task_windows(read_archive(args.archive), config.model.task)
    participants = sorted({w.participant_id for w in windows})
    plan = make_fold_plan(participants, config.evaluate.n_batches, config.model.seed, config.evaluate.batch_layout)
    val_ids = set(plan.batches[0])
    model = train(
        [w for w in windows if w.participant_id not in val_ids],
        [w for w in windows if w.participant_id in val_ids],
        config.model,
    )
    save_checkpoint(args.out, model)
    write_manifest(args.out, _manifest("train", config, {"archive": args.archive}, [args.out], started))
    best_val = model.history[model.best_epoch - 1][1] if model.best_epoch else float("nan")
    print(f"task: {config.model.task}")
    print(f"epochs run: {model.stopped_epoch}, best epoch: {model.best_epoch}, best val_loss: {best_val:.6f}")
    print(f"checkpoint: {args.out}")
    return 0


def cmd_predict(args: argparse.Namespace, config: WristnetConfig) -> int:
    import numpy as np
    import pandas as pd

    from .archive import read_archive
    from .checkpoint import load_checkpoint
    from .model import predict
    from .report import atomic_write_text, write_manifest

    started = time.perf_counter()
    model = load_checkpoint(args.checkpoint)
    windows = read_archive(args.archive)
    if not windows:
        raise ValidationError(f"{args.archive} contains no windows")
    scores = predict(model, windows)
    frame = pd.DataFrame({"window_id": np.arange(len(windows)), "score": scores})
    if model.config.is_classification:
        frame["label"] = (scores >= config.evaluate.threshold).astype(int)
    atomic_write_text(args.out, frame.to_csv(index=False, lineterminator="\n"))
    write_manifest(
        args.out,
        _manifest("predict", config, {"checkpoint": args.checkpoint, "archive": args.archive}, [args.out], started),
    )
    print(f"predictions: {len(windows)} -> {args.out}")
    return 0


def cmd_nested_cv(args: argparse.Namespace, config: WristnetConfig) -> int:
    from .archive import read_archive
    from .evaluate import run_nested_cv
    from .report import build_report, format_summary, write_manifest, write_report

    started = time.perf_counter()
    windows = read_archive(args.archive)
    runs, summary = run_nested_cv(windows, config.model.task, config.model, config.evaluate)
    written = write_report(args.out_dir, runs, summary, config)
    write_manifest(args.out_dir, _manifest("nested-cv", config, {"archive": args.archive}, written, started))
    print(format_summary(build_report(runs, summary, config)))
    return 0


def cmd_report(args: argparse.Namespace, config: WristnetConfig) -> int:
    from .report import format_summary, load_report

    print(format_summary(load_report(args.report)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wristnet",
        description="Wrist accelerometer activity recognition and energy expenditure estimation.",
    )
    common = argparse.ArgumentParser(add_help=False)
    suppress = argparse.SUPPRESS
    common.add_argument("--config", default=suppress, help="YAML/JSON config (default: $WRISTNET_CONFIG).")
    common.add_argument("--seed", type=int, default=suppress, help="Override model/synth seed.")
    common.add_argument("--workers", type=int, default=suppress, help="Concurrent nested-CV runs.")
    common.add_argument("--epochs", type=int, default=suppress, help="Override model.epochs.")
    common.add_argument("--log-level", default=suppress, help="Override logging.level.")
    parser.set_defaults(config=None, seed=None, workers=None, epochs=None, log_level=None, task=None)

    sub = parser.add_subparsers(dest="cmd", required=True)

    synth = sub.add_parser("synth", parents=[common], help="Generate a synthetic dataset.")
    synth.add_argument("out_dir")
    synth.add_argument("--spec", help="Synth spec file (bare spec or config with a synth section).")
    synth.set_defaults(handler=cmd_synth)

    preprocess = sub.add_parser("preprocess", parents=[common], help="Manifest -> window archive.")
    preprocess.add_argument("manifest")
    preprocess.add_argument("out")
    preprocess.set_defaults(handler=cmd_preprocess)

    train = sub.add_parser("train", parents=[common], help="Train one model and write a checkpoint.")
    train.add_argument("archive")
    train.add_argument("out")
    train.add_argument("--task", choices=TASKS, default=suppress)
    train.set_defaults(handler=cmd_train)

    nested = sub.add_parser("nested-cv", parents=[common], help="Participant-batched nested cross-validation.")
    nested.add_argument("archive")
    nested.add_argument("out_dir")
    nested.add_argument("--task", choices=TASKS, default=suppress)
    nested.set_defaults(handler=cmd_nested_cv)

    predict = sub.add_parser("predict", parents=[common], help="Score windows with a checkpoint.")
    predict.add_argument("checkpoint")
    predict.add_argument("archive")
    predict.add_argument("out")
    predict.set_defaults(handler=cmd_predict)

    report = sub.add_parser("report", parents=[common], help="Summarize a report.json.")
    report.add_argument("report")
    report.set_defaults(handler=cmd_report)
    return parser


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler: Callable[[argparse.Namespace, WristnetConfig], int] = args.handler
    config_path = args.config or os.environ.get("WRISTNET_CONFIG") or None
    try:
        config = load_config(config_path)
        config = apply_overrides(config, seed=args.seed, workers=args.workers, epochs=args.epochs, task=args.task)
    except WristnetError as exc:
        setup_logging(args.log_level or "INFO")
        logger.error("%s", exc)
        return exc.exit_code
    except FileNotFoundError as exc:
        setup_logging(args.log_level or "INFO")
        logger.error("Missing file: %s", exc.filename)
        return 2

    setup_logging((args.log_level or config.logging.level).upper())
    export_env(config, config_path or "")
    try:
        return handler(args, config)
    except WristnetError as exc:
        logger.error("%s", exc)
        return exc.exit_code
    except FileNotFoundError as exc:
        logger.error("Missing file: %s", exc.filename)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
