"""Per-round records and their JSON-lines serialization.

Log schema, one object per line, keys in this order:

    round          int, 1-based aggregation index
    defense        str
    accuracy       float in [0, 1]
    benign_ids     sorted list[int], clients whose uploads were aggregated
    malicious_ids  sorted list[int], clients excluded by the defense
    scores         list[float] per client in id order, or null
    sc, lc         float or null, cluster centroids (robustfl only)
    detection      {"precision", "recall", "f1"} or null

The sidecar ``<stem>.summary.json`` holds ``rounds``, ``final_accuracy``,
``mean_precision``, ``mean_recall``, ``mean_f1`` and ``detection_rounds``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path

from .errors import IoError


@dataclass(frozen=True)
class RoundRecord:
    round: int
    defense: str
    accuracy: float
    benign_ids: list
    malicious_ids: list
    scores: list | None = None
    sc: float | None = None
    lc: float | None = None
    detection: dict | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), allow_nan=False)

    @classmethod
    def from_dict(cls, d: dict) -> "RoundRecord":
        return cls(**d)


def summary_path(log_path) -> Path:
    p = Path(log_path)
    return p.with_name(p.stem + ".summary.json")


def summarize(records, from_round: int = 1) -> dict:
    """Final accuracy plus mean detection metrics over rounds >= ``from_round``."""
    records = list(records)
    det = [r.detection for r in records if r.detection is not None and r.round >= from_round]

    def avg(key):
        return sum(d[key] for d in det) / len(det) if det else None

    return {
        "rounds": len(records),
        "final_accuracy": records[-1].accuracy if records else None,
        "mean_precision": avg("precision"),
        "mean_recall": avg("recall"),
        "mean_f1": avg("f1"),
        "detection_rounds": len(det),
        "from_round": from_round,
    }


def write_log(records, path) -> Path:
    """Overwrite ``path`` with one JSON line per record and write the summary sidecar."""
    path = Path(path)
    records = list(records)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for r in records:
                fh.write(r.to_json() + "\n")
        with open(summary_path(path), "w", encoding="utf-8", newline="\n") as fh:
            json.dump(summarize(records), fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write log {path}: {exc}") from exc
    return path


def read_log(path) -> list[RoundRecord]:
    with open(path, encoding="utf-8") as fh:
        return [RoundRecord.from_dict(json.loads(line)) for line in fh if line.strip()]
