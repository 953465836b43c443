"""End-to-end orchestration: synthesize, inject, corrupt, train, detect,
run baselines, evaluate. Every stage persists its artifact before the next
stage starts, so a failed run keeps everything produced so far plus an
error.json naming the failed stage.

Detectors only ever see observed labels and provenance; truth flags flow
into evaluation alone.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from . import baselines as bl
from . import encoder as enc
from .config import RunConfig
from .corruption import corrupt, pool
from .data import (inject_noise, make_blobs, measured_noise_rate,
                   write_dataset_csv)
from .errors import DynacorError, StageFailureError
from .metrics import binary_scores, flag_all_baseline
from .report import DetectionReport
from .trainer import DynamicsMatrix, train_and_record, write_dynamics_csv

LOCK_NAME = ".dynacor.lock"

ARTIFACTS = {
    "dataset": "dataset.csv",
    "corrupted": "corrupted.csv",
    "dynamics": "dynamics.csv",
    "model": "model.dync",
    "summary": "summary.json",
}


@dataclass
class PipelineResult:
    out_dir: Path
    paths: dict[str, Path] = field(default_factory=dict)
    reports: dict[str, DetectionReport] = field(default_factory=dict)
    summary: dict = field(default_factory=dict)


class _OutDirLock:
    """One pipeline process per output directory."""

    def __init__(self, out_dir: Path):
        self.path = out_dir / LOCK_NAME

    def __enter__(self):
        try:
            self.path.touch(exist_ok=False)
        except FileExistsError:
            raise StageFailureError(
                "lock", f"{self.path} exists; another run owns this directory "
                        "(delete the lock if that run is dead)") from None
        return self

    def __exit__(self, *exc):
        self.path.unlink(missing_ok=True)
        return False


def write_json(path: Path, payload: dict) -> None:
    with path.open("w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def baseline_report(method: str, dyn: DynamicsMatrix, seed: int) -> DetectionReport:
    detector = bl.avg_encoder_detect if method == "avg_encoder" else bl.aum_detect
    ids, flags = detector(dyn)
    report = DetectionReport(
        method=method,
        seed=seed,
        verdicts=[{"id": int(i), "noisy": bool(f)} for i, f in zip(ids, flags)],
    )
    if dyn.is_noisy is not None:
        orig = dyn.original_mask
        report.precision, report.recall, report.f1 = binary_scores(
            flags, dyn.is_noisy[orig].astype(bool))
    return report


def run_detection(dyn: DynamicsMatrix, cfg: RunConfig
                  ) -> tuple[DetectionReport, enc.ClusterModel, enc.FitTrace]:
    """Fit the dynamics encoder and report verdicts for original rows."""
    model, trace = enc.fit(dyn, cfg.encoder)
    report = enc.detect(dyn, model, trace=trace, seed=cfg.seed)
    return report, model, trace


def run_pipeline(cfg: RunConfig) -> PipelineResult:
    """Execute all stages under `cfg.out_dir`. Raises StageFailureError after
    writing error.json when any stage fails."""
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = PipelineResult(out_dir=out_dir)
    stage = "setup"
    try:
        with _OutDirLock(out_dir):
            stage = "data"
            clean = make_blobs(cfg.data.classes, cfg.data.per_class, cfg.data.dim,
                               cfg.data.spread, cfg.data.separation, cfg.data.seed)
            noisy = inject_noise(clean, cfg.noise)
            result.paths["dataset"] = out_dir / ARTIFACTS["dataset"]
            write_dataset_csv(noisy, result.paths["dataset"])

            stage = "corruption"
            corrupted = corrupt(noisy, cfg.corruption)
            result.paths["corrupted"] = out_dir / ARTIFACTS["corrupted"]
            write_dataset_csv(corrupted, result.paths["corrupted"])

            stage = "trainer"
            pooled = pool(noisy, corrupted)
            dyn, _ = train_and_record(pooled, cfg.classifier)
            result.paths["dynamics"] = out_dir / ARTIFACTS["dynamics"]
            write_dynamics_csv(dyn, result.paths["dynamics"], cfg.classifier)

            eta = measured_noise_rate(noisy)
            summary: dict = {
                "seed": cfg.seed,
                "noise_rate": eta,
                "noise_kind": cfg.noise.kind,
                "gamma": cfg.corruption.gamma,
                "flag_all_f1": flag_all_baseline(eta) if eta > 0 else None,
                "methods": {},
            }

            if "dynacor" in cfg.eval.methods:
                stage = "detect"
                report, model, trace = run_detection(dyn, cfg)
                result.paths["model"] = out_dir / ARTIFACTS["model"]
                enc.save_model(model, result.paths["model"])
                result.reports["dynacor"] = report

            stage = "baselines"
            for method in cfg.eval.methods:
                if method == "dynacor":
                    continue
                result.reports[method] = baseline_report(method, dyn, cfg.seed)

            stage = "eval"
            for method, report in result.reports.items():
                path = out_dir / f"report_{method}.json"
                report.write_json(path)
                result.paths[f"report_{method}"] = path
                summary["methods"][method] = {
                    "precision": report.precision,
                    "recall": report.recall,
                    "f1": report.f1,
                    "selected_epoch": report.selected_epoch,
                    "flagged": len(report.flagged_ids()),
                }
            result.paths["summary"] = out_dir / ARTIFACTS["summary"]
            write_json(result.paths["summary"], summary)
            result.summary = summary
            return result
    except StageFailureError as exc:
        write_json(out_dir / "error.json", {"stage": exc.stage, "error": str(exc)})
        raise
    except (DynacorError, OSError, ValueError) as exc:
        write_json(out_dir / "error.json",
                    {"stage": stage, "error": f"{type(exc).__name__}: {exc}"})
        raise StageFailureError(stage, str(exc)) from exc
