"""Run configuration: JSON sections mapped onto the per-stage dataclasses.

A master seed drives everything; each stage derives its own seed by XOR-ing
a fixed stage constant, so stages are independently reproducible while the
whole run replays from one number. Any section may also pin its seed
explicitly.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any

from .corruption import CorruptionConfig
from .data import NoiseSpec
from .encoder import EncoderConfig
from .errors import ConfigError, DynacorError
from .trainer import ClassifierConfig

STAGE_SALTS = {
    "data": 0xA1,
    "noise": 0xB2,
    "corruption": 0xC3,
    "classifier": 0xD4,
    "encoder": 0xE5,
    "eval": 0xF6,
}

KNOWN_METHODS = ("dynacor", "avg_encoder", "aum")


def stage_seed(master: int, stage: str) -> int:
    return master ^ STAGE_SALTS[stage]


@dataclass(frozen=True)
class DataConfig:
    classes: int = 4
    per_class: int = 1000
    dim: int = 16
    spread: float = 1.0
    separation: float = 6.0
    seed: int = 0


@dataclass(frozen=True)
class EvalConfig:
    methods: tuple[str, ...] = KNOWN_METHODS

    def validate(self) -> None:
        for m in self.methods:
            if m not in KNOWN_METHODS:
                raise ConfigError(f"unknown method {m!r}; known: {KNOWN_METHODS}")
        if not self.methods:
            raise ConfigError("eval.methods must not be empty")


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    out_dir: str = "runs/default"
    data: DataConfig = DataConfig()
    noise: NoiseSpec = NoiseSpec(kind="symmetric", rate=0.3, seed=0)
    corruption: CorruptionConfig = CorruptionConfig()
    # the pipeline records raw logit differences so baselines can share the
    # run; the encoder quantizes its own input (see EncoderConfig)
    classifier: ClassifierConfig = ClassifierConfig(signal="logit-difference")
    encoder: EncoderConfig = EncoderConfig()
    eval: EvalConfig = EvalConfig()

    def validate(self) -> None:
        try:
            self.noise.validate(self.data.classes)
            self.corruption.validate()
            self.classifier.validate()
            self.encoder.validate()
            self.eval.validate()
        except (DynacorError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        needs_raw = {"avg_encoder", "aum"} & set(self.eval.methods)
        if needs_raw and self.classifier.signal != "logit-difference":
            raise ConfigError(
                "avg_encoder/aum need classifier.signal = 'logit-difference'")


_TUPLE_FIELDS = {"hidden", "channels", "kernels", "methods"}


def _build_section(cls, raw: dict[str, Any], section: str):
    known = {f.name for f in fields(cls)}
    for key in raw:
        if key not in known:
            raise ConfigError(f"unknown key {key!r} in section {section!r}")
    coerced = {k: (tuple(v) if k in _TUPLE_FIELDS and v is not None else v)
               for k, v in raw.items()}
    try:
        return cls(**coerced)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid section {section!r}: {exc}") from exc


def run_config_from_dict(raw: dict[str, Any]) -> RunConfig:
    """Build and validate a RunConfig; unknown sections or keys are rejected."""
    sections = {
        "data": DataConfig,
        "noise": NoiseSpec,
        "corruption": CorruptionConfig,
        "classifier": ClassifierConfig,
        "encoder": EncoderConfig,
        "eval": EvalConfig,
    }
    section_defaults: dict[str, dict[str, Any]] = {
        "noise": {"kind": "symmetric", "rate": 0.3},
        "classifier": {"signal": "logit-difference"},
    }
    known_top = set(sections) | {"seed", "out_dir"}
    for key in raw:
        if key not in known_top:
            raise ConfigError(f"unknown top-level key {key!r}")

    master = raw.get("seed", 0)
    if not isinstance(master, int):
        raise ConfigError("seed must be an integer")

    kwargs: dict[str, Any] = {"seed": master, "out_dir": raw.get("out_dir", "runs/default")}
    for name, cls in sections.items():
        given = raw.get(name, {})
        if not isinstance(given, dict):
            raise ConfigError(f"section {name!r} must be an object")
        section_raw = {**section_defaults.get(name, {}), **given}
        if name in STAGE_SALTS and "seed" not in section_raw and "seed" in {
                f.name for f in fields(cls)}:
            section_raw["seed"] = stage_seed(master, name)
        kwargs[name] = _build_section(cls, section_raw, name)

    cfg = RunConfig(**kwargs)
    cfg.validate()
    return cfg


def load_run_config(path: str | Path) -> RunConfig:
    try:
        with Path(path).open() as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    return run_config_from_dict(raw)


def with_overrides(cfg: RunConfig, seed: int | None = None,
                   out_dir: str | None = None) -> RunConfig:
    """Apply CLI-level overrides; a new master seed re-derives stage seeds
    that were not explicitly pinned in the original dict (we re-derive all)."""
    if seed is not None:
        cfg = replace(
            cfg, seed=seed,
            data=replace(cfg.data, seed=stage_seed(seed, "data")),
            noise=replace(cfg.noise, seed=stage_seed(seed, "noise")),
            corruption=replace(cfg.corruption, seed=stage_seed(seed, "corruption")),
            classifier=replace(cfg.classifier, seed=stage_seed(seed, "classifier")),
            encoder=replace(cfg.encoder, seed=stage_seed(seed, "encoder")),
        )
    if out_dir is not None:
        cfg = replace(cfg, out_dir=out_dir)
    return cfg
