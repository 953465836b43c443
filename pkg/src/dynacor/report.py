"""Detection report: per-instance verdicts plus run metadata.

Serialized schema (stable field names):
`method, seed, selected_epoch, metric_trajectory[], precision, recall, f1,
verdicts[{id, noisy}]`.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ParseError


@dataclass
class DetectionReport:
    method: str
    seed: int | None = None
    selected_epoch: int | None = None
    metric_trajectory: list[float | None] = field(default_factory=list)
    precision: float | None = None
    recall: float | None = None
    f1: float | None = None
    verdicts: list[dict] = field(default_factory=list)  # [{"id": int, "noisy": bool}]

    def verdict_map(self) -> dict[int, bool]:
        return {int(v["id"]): bool(v["noisy"]) for v in self.verdicts}

    def flagged_ids(self) -> list[int]:
        return [int(v["id"]) for v in self.verdicts if v["noisy"]]

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "seed": self.seed,
            "selected_epoch": self.selected_epoch,
            "metric_trajectory": self.metric_trajectory,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "verdicts": self.verdicts,
        }

    def write_json(self, path: str | Path) -> None:
        with Path(path).open("w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_json(cls, path: str | Path) -> "DetectionReport":
        with Path(path).open() as fh:
            raw = json.load(fh)
        try:
            return cls(
                method=raw["method"],
                seed=raw["seed"],
                selected_epoch=raw["selected_epoch"],
                metric_trajectory=raw["metric_trajectory"],
                precision=raw["precision"],
                recall=raw["recall"],
                f1=raw["f1"],
                verdicts=raw["verdicts"],
            )
        except KeyError as exc:
            raise ParseError(f"report missing field {exc}") from None
