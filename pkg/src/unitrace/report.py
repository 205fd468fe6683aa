"""Report assembly, JSON/CSV emission and schema validation."""

from __future__ import annotations

import csv
import json
import math
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__
from .dataset import Dataset, content_hash
from .engine import EntropyResult, UniquenessResult
from .stats import GroupedSeries

SCHEMA_ID = "unitrace-report/v1"


def _num(x) -> float | None:
    if x is None:
        return None
    x = float(x)
    return None if math.isnan(x) else x


def envelope(kind: str) -> dict:
    return {"schema": SCHEMA_ID, "kind": kind, "tool_version": __version__}


def dataset_block(dataset: Dataset) -> dict:
    return {
        "n": dataset.n,
        "m": dataset.m,
        "step_seconds": dataset.step_seconds,
        "unit": dataset.unit,
        "domain_max": dataset.domain_max,
        "content_hash": content_hash(dataset),
    }


def uniqueness_block(res: UniquenessResult) -> dict:
    return {
        "mean": _num(res.mean_u),
        "min": _num(res.min_u),
        "max": _num(res.max_u),
        "windows": int(len(res.t)),
        "undefined_windows": res.undefined_windows,
    }


def entropy_block(res: EntropyResult) -> dict:
    return {
        "mean": _num(res.mean_e),
        "min": _num(res.min_e),
        "max": _num(res.max_e),
        "windows": int(len(res.t)),
        "undefined_windows": res.undefined_windows,
    }


def grouped_block(grouped: GroupedSeries) -> dict:
    return grouped.as_dict()


def strip_timing(report: dict) -> dict:
    return {k: v for k, v in report.items() if k != "timing"}


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, allow_nan=False) + "\n"


def write_json(report: dict, path: Path | str) -> Path:
    path = Path(path)
    path.write_text(dumps(report), encoding="utf-8")
    return path


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return "" if math.isnan(x) else repr(x)
    return str(x)


def write_csv(path: Path | str, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(x) for x in row])
    return path


def write_uniqueness_csv(res: UniquenessResult, path: Path | str) -> Path:
    return write_csv(path, ("t", "u", "unique_count", "included_count"), res.per_t)


def write_entropy_csv(res: EntropyResult, path: Path | str) -> Path:
    return write_csv(path, ("t", "e", "class_count", "included_count"), res.per_t)


def write_grouped_csv(grouped: GroupedSeries, path: Path | str) -> Path:
    return write_csv(path, ("group", "mean", "min", "max", "count"), grouped.groups)


def write_pairs_csv(x, y, path: Path | str) -> Path:
    return write_csv(path, ("x", "y"), zip((float(v) for v in x), (float(v) for v in y)))


def load_schema() -> dict:
    text = resources.files("unitrace").joinpath("schemas/unitrace-report-v1.json").read_text(encoding="utf-8")
    return json.loads(text)


def validate_report(report: dict) -> None:
    """Raise ``jsonschema.ValidationError`` if the report violates the schema."""
    import jsonschema

    jsonschema.validate(report, load_schema())
