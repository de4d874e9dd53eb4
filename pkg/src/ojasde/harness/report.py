"""Experiment reports and their CSV/JSON serialisation."""

from __future__ import annotations

import csv
import json
import platform
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from .. import __version__


@dataclass
class ExperimentReport:
    """Rows of per-parameter results plus an optional fit and summary metrics."""

    experiment: str
    rows: list = field(default_factory=list)
    fit: dict | None = None
    summary: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return _plain({
            "experiment": self.experiment,
            "rows": self.rows,
            "fit": self.fit,
            "summary": self.summary,
            "metadata": self.metadata,
            "notes": self.notes,
        })

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentReport":
        return cls(d["experiment"], d["rows"], d["fit"], d["summary"], d["metadata"], d["notes"])


def _plain(obj):
    """Convert numpy scalars and arrays to plain Python values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def make_metadata(cfg, wall_time: float) -> dict:
    return {
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "versions": {
            "ojasde": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "wall_time": wall_time,
    }


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    if v is None:
        return ""
    if isinstance(v, (list, tuple, dict, np.ndarray)):
        return json.dumps(_plain(v), sort_keys=True)
    return str(v)


def emit_report(report: ExperimentReport, path, fmt: str = "json") -> Path:
    """Write ``report`` as CSV (one row per record) or JSON (sorted keys).

    Both embed the config hash and seed; CSV carries them as leading columns.
    """
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        path.write_text(json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8")
        return path
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    cols = []
    for row in report.rows:
        for k in row:
            if k not in cols:
                cols.append(k)
    meta = report.metadata
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["config_hash", "seed"] + cols)
        for row in report.rows:
            w.writerow([meta.get("config_hash", ""), _cell(meta.get("seed"))] + [_cell(row.get(c)) for c in cols])
    return path


def load_report(path) -> ExperimentReport:
    return ExperimentReport.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
