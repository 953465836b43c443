"""Command-line interface.

Commands: synth, inject, corrupt, train, detect, baseline, eval, pipeline.
Global flags: --config, --seed, --out, --quiet. Exit codes: 0 success,
2 invalid configuration, 3 stage failure.

DYNA_THREADS caps worker parallelism; every stage currently runs
single-threaded, so any positive cap is trivially honored (the value is
still validated).
"""
from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import encoder as enc
from .config import (RunConfig, load_run_config, with_overrides)
from .corruption import corrupt, pool
from .data import (inject_noise, make_blobs, measured_noise_rate,
                   read_dataset_csv, write_dataset_csv)
from .errors import ConfigError, DynacorError, MissingTruthError, StageFailureError
from .metrics import f1 as f1_of_maps
from .metrics import flag_all_baseline
from .pipeline import baseline_report, run_detection, run_pipeline, write_json
from .report import DetectionReport
from .trainer import read_dynamics_csv, train_and_record, write_dynamics_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STAGE = 3


def _say(args, message: str) -> None:
    if not args.quiet:
        print(message)


def _load_config(args) -> RunConfig:
    cfg = load_run_config(args.config) if args.config else RunConfig()
    return with_overrides(cfg, seed=args.seed, out_dir=args.out)


def _out_dir(args, cfg: RunConfig) -> Path:
    out = Path(args.out) if args.out else Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _check_thread_cap() -> None:
    raw = os.environ.get("DYNA_THREADS")
    if raw is None:
        return
    try:
        cap = int(raw)
    except ValueError:
        raise ConfigError(f"DYNA_THREADS must be an integer, got {raw!r}") from None
    if cap < 1:
        raise ConfigError(f"DYNA_THREADS must be >= 1, got {cap}")


def cmd_synth(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    d = cfg.data
    ds = make_blobs(d.classes, d.per_class, d.dim, d.spread, d.separation, d.seed)
    path = out / "dataset.csv"
    write_dataset_csv(ds, path)
    _say(args, f"wrote {path} ({len(ds)} instances, {d.classes} classes)")
    return EXIT_OK


def cmd_inject(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    ds = read_dataset_csv(args.data)
    noisy = inject_noise(ds, cfg.noise)
    path = out / "dataset.csv"
    write_dataset_csv(noisy, path)
    _say(args, f"wrote {path} (measured noise rate {measured_noise_rate(noisy):.4f})")
    return EXIT_OK


def cmd_corrupt(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    ds = read_dataset_csv(args.data)
    corrupted = corrupt(ds, cfg.corruption)
    path = out / "corrupted.csv"
    write_dataset_csv(corrupted, path)
    _say(args, f"wrote {path} ({len(corrupted)} corrupted instances)")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    original = read_dataset_csv(args.data)
    corrupted = read_dataset_csv(args.corrupted)
    dyn, _ = train_and_record(pool(original, corrupted), cfg.classifier)
    path = out / "dynamics.csv"
    write_dynamics_csv(dyn, path, cfg.classifier)
    _say(args, f"wrote {path} ({dyn.n_rows} rows x {dyn.n_epochs} epochs)")
    return EXIT_OK


def cmd_detect(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    dyn = read_dynamics_csv(args.dynamics)
    report, model, _ = run_detection(dyn, cfg)
    model_path = out / "model.dync"
    enc.save_model(model, model_path)
    report_path = out / "report_dynacor.json"
    report.write_json(report_path)
    _say(args, f"wrote {model_path} and {report_path} "
               f"(selected epoch {report.selected_epoch}, "
               f"{len(report.flagged_ids())} flagged)")
    return EXIT_OK


def cmd_baseline(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    dyn = read_dynamics_csv(args.dynamics)
    methods = ("avg_encoder", "aum") if args.method == "both" else (args.method,)
    for method in methods:
        report = baseline_report(method, dyn, cfg.seed)
        path = out / f"report_{method}.json"
        report.write_json(path)
        _say(args, f"wrote {path} ({len(report.flagged_ids())} flagged)")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args, cfg)
    report = DetectionReport.from_json(args.report)
    dyn = read_dynamics_csv(args.dynamics)
    if dyn.is_noisy is None:
        raise MissingTruthError("dynamics file has no is_noisy truth column")
    orig = dyn.original_mask
    truth = {int(i): bool(f) for i, f in zip(dyn.ids[orig], dyn.is_noisy[orig])}
    precision, recall, score = f1_of_maps(report.verdict_map(), truth)
    eta = float(dyn.is_noisy[orig].mean())
    floor = flag_all_baseline(eta) if eta > 0 else None
    _say(args, f"method={report.method} precision={precision:.4f} "
               f"recall={recall:.4f} f1={score:.4f} "
               f"flag_all={'n/a' if floor is None else f'{floor:.4f}'}")
    payload = {
        "method": report.method,
        "precision": precision,
        "recall": recall,
        "f1": score,
        "flag_all_f1": floor,
        "noise_rate": eta,
        "selected_epoch": report.selected_epoch,
    }
    path = out / f"eval_{report.method}.json"
    write_json(path, payload)
    _say(args, f"wrote {path}")
    return EXIT_OK


def cmd_pipeline(args) -> int:
    cfg = _load_config(args)
    if args.out:
        out_dir = args.out
        cfg = with_overrides(cfg, out_dir=out_dir)
    result = run_pipeline(cfg)
    _say(args, f"pipeline artifacts in {result.out_dir}")
    for method, info in result.summary.get("methods", {}).items():
        score = info["f1"]
        _say(args, f"  {method}: f1={'n/a' if score is None else f'{score:.4f}'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dynacor",
        description="Detect incorrectly labeled instances from training dynamics.")
    parser.add_argument("--config", type=str, default=None, help="JSON run config")
    parser.add_argument("--seed", type=int, default=None, help="master seed override")
    parser.add_argument("--out", type=str, default=None, help="output directory override")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("synth", help="write clean synthetic blobs").set_defaults(fn=cmd_synth)

    p = sub.add_parser("inject", help="inject label noise into a dataset CSV")
    p.add_argument("--data", required=True)
    p.set_defaults(fn=cmd_inject)

    p = sub.add_parser("corrupt", help="build the corrupted companion set")
    p.add_argument("--data", required=True)
    p.set_defaults(fn=cmd_corrupt)

    p = sub.add_parser("train", help="train the classifier and record dynamics")
    p.add_argument("--data", required=True)
    p.add_argument("--corrupted", required=True)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("detect", help="fit the dynamics encoder and report verdicts")
    p.add_argument("--dynamics", required=True)
    p.set_defaults(fn=cmd_detect)

    p = sub.add_parser("baseline", help="run signal baselines on recorded dynamics")
    p.add_argument("--dynamics", required=True)
    p.add_argument("--method", choices=("avg_encoder", "aum", "both"), default="both")
    p.set_defaults(fn=cmd_baseline)

    p = sub.add_parser("eval", help="score a detection report against truth flags")
    p.add_argument("--report", required=True)
    p.add_argument("--dynamics", required=True)
    p.set_defaults(fn=cmd_eval)

    sub.add_parser("pipeline", help="run every stage end to end").set_defaults(
        fn=cmd_pipeline)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _check_thread_cap()
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageFailureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except (DynacorError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
