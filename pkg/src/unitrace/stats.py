"""Temporal aggregation, population summaries and correlations."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, NamedTuple, Sequence

import numpy as np

from .dataset import Dataset
from .errors import AlignmentError, ConfigError, DegenerateInputError, InputError, ParseError, ShapeError

Granularity = Literal["month", "hour_of_day"]


@dataclass(frozen=True, eq=False)
class AuxSeries:
    """Scalar series on a regular or coarser grid; NaN marks an undefined point."""

    timestamps: np.ndarray
    values: np.ndarray
    label: str = ""
    unit: str = ""

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=np.int64).reshape(-1)
        vals = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if len(ts) != len(vals):
            raise ShapeError(f"{len(ts)} timestamps but {len(vals)} values")
        if len(ts) > 1 and np.any(np.diff(ts) <= 0):
            raise InputError("aux timestamps must be strictly increasing")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.timestamps)


def load_aux_csv(path: Path | str, label: str | None = None) -> AuxSeries:
    """Read a ``timestamp,value`` CSV. Empty values are undefined points."""
    path = Path(path)
    ts, vals = [], []
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise InputError(f"{path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["timestamp", "value"]:
            raise ParseError(f"expected header 'timestamp,value', got {header!r}", line=1)
        for row in reader:
            if len(row) != 2:
                raise ParseError(f"expected 2 fields, got {len(row)}", line=reader.line_num)
            try:
                ts.append(int(row[0]))
                vals.append(float(row[1]) if row[1] else math.nan)
            except ValueError:
                raise ParseError(f"bad row {row!r}", line=reader.line_num) from None
    if not ts:
        raise InputError(f"{path}: no data rows")
    return AuxSeries(np.array(ts), np.array(vals), label=label or path.stem)


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ShapeError(f"pearson needs two equal-length vectors, got {x.shape} and {y.shape}")
    if len(x) < 2:
        raise ShapeError("pearson needs at least 2 points")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise DegenerateInputError("pearson is undefined for a constant input")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def population_mean_series(dataset: Dataset) -> AuxSeries:
    """Mean over present values at each timestamp (NaN where all are missing)."""
    counts = dataset.present.sum(axis=0)
    sums = dataset.values.sum(axis=0, dtype=np.int64)  # missing cells hold 0
    with np.errstate(invalid="ignore", divide="ignore"):
        means = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return AuxSeries(dataset.timestamps, means, label="mean_consumption", unit=dataset.unit)


def window_means(mean_series: AuxSeries, starts: np.ndarray, k: int) -> np.ndarray:
    """Average of ``mean_series`` over ``[t, t + k)`` for each start index ``t``."""
    vals = mean_series.values
    csum = np.concatenate([[0.0], np.cumsum(np.nan_to_num(vals))])
    cnt = np.concatenate([[0], np.cumsum(~np.isnan(vals))])
    starts = np.asarray(starts, dtype=np.int64)
    s = csum[starts + k] - csum[starts]
    c = cnt[starts + k] - cnt[starts]
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(c > 0, s / np.maximum(c, 1), np.nan)


class Summary(NamedTuple):
    mean: float
    std: float
    zero_fraction: float
    missing_fraction: float
    count: int


def summary(dataset: Dataset) -> Summary:
    """Mean, population std (divides by N), zero share and missing share.

    Sums are exact integers, so ``std == 0`` exactly when all present values
    are equal.
    """
    total = dataset.n * dataset.m
    count = s1 = s2 = zeros = 0
    for j in range(dataset.m):
        col = dataset.values[dataset.present[:, j], j].astype(np.int64)
        count += col.size
        s1 += int(col.sum())
        s2 += int((col * col).sum())
        zeros += int(np.count_nonzero(col == 0))
    if count == 0:
        raise DegenerateInputError("summary needs at least one present value")
    var_num = count * s2 - s1 * s1  # N^2 * variance, exact
    return Summary(
        mean=s1 / count,
        std=math.sqrt(var_num) / count,
        zero_fraction=zeros / count,
        missing_fraction=(total - count) / total,
        count=count,
    )


# ---------------------------------------------------------------------------
# time grouping


@dataclass(frozen=True)
class EpochMapping:
    """Maps raw timestamps to epoch seconds: ``origin + ts * seconds_per_tick``.

    ``utc_offset_seconds`` shifts wall-clock time for grouping (a fixed
    offset; daylight saving is not modelled).
    """

    origin: int = 0
    seconds_per_tick: int = 1
    utc_offset_seconds: int = 0

    def to_epoch(self, timestamps) -> np.ndarray:
        return self.origin + np.asarray(timestamps, dtype=np.int64) * self.seconds_per_tick

    @classmethod
    def for_dataset(cls, dataset: Dataset, utc_offset_seconds: int = 0) -> "EpochMapping":
        if dataset.epoch_origin is not None:
            return cls(dataset.epoch_origin, dataset.step_seconds, utc_offset_seconds)
        if dataset.tick == dataset.step_seconds:
            return cls(0, 1, utc_offset_seconds)
        raise ConfigError(
            "timestamps are integer indices; set epoch_origin to group by real time"
        )


class Group(NamedTuple):
    key: str | int
    mean: float
    min: float
    max: float
    count: int


@dataclass(frozen=True)
class GroupedSeries:
    granularity: str
    groups: tuple[Group, ...]

    def as_dict(self) -> dict:
        return {
            "granularity": self.granularity,
            "groups": [g._asdict() for g in self.groups],
        }


def group_by_time(
    timestamps: Sequence[int],
    values: Sequence[float],
    granularity: Granularity,
    mapping: EpochMapping | None,
) -> GroupedSeries:
    """Mean/min/max/count of defined values per calendar month or hour of day."""
    if granularity not in ("month", "hour_of_day"):
        raise ConfigError(f"unknown granularity {granularity!r}")
    if mapping is None:
        raise ConfigError("grouping by time needs an epoch mapping")
    ts = np.asarray(timestamps, dtype=np.int64)
    vals = np.asarray(values, dtype=np.float64)
    if ts.shape != vals.shape:
        raise ShapeError(f"{len(ts)} timestamps but {len(vals)} values")
    keep = ~np.isnan(vals)
    local = mapping.to_epoch(ts[keep]) + mapping.utc_offset_seconds
    vals = vals[keep]
    if granularity == "hour_of_day":
        keys = (local % 86_400) // 3_600
        labels = {int(k): int(k) for k in np.unique(keys)}
    else:
        months = local.astype("datetime64[s]").astype("datetime64[M]")
        keys = months.astype(np.int64)
        labels = {int(k): str(np.datetime64(int(k), "M")) for k in np.unique(keys)}
    groups = []
    for key, label in labels.items():
        g = vals[keys == key]
        groups.append(Group(label, float(g.mean()), float(g.min()), float(g.max()), int(g.size)))
    return GroupedSeries(granularity, tuple(groups))


# ---------------------------------------------------------------------------
# alignment


def align(aux: AuxSeries, timestamps: Sequence[int], values: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Pair each point with the aux value whose interval contains it.

    Aux point ``i`` covers ``[ts[i], ts[i+1])``; the last one covers a span
    equal to the preceding spacing (or the point spacing for a single aux
    point). Points outside every interval, or undefined on either side, are
    dropped. Returns ``(point_values, aux_values)``.
    """
    ts = np.asarray(timestamps, dtype=np.int64)
    vals = np.asarray(values, dtype=np.float64)
    if ts.shape != vals.shape:
        raise ShapeError(f"{len(ts)} timestamps but {len(vals)} values")
    if len(aux) == 0 or len(ts) == 0:
        raise AlignmentError("nothing to align")
    if len(aux) > 1:
        last_span = int(aux.timestamps[-1] - aux.timestamps[-2])
    else:
        last_span = int(ts[1] - ts[0]) if len(ts) > 1 else 1
    end = aux.timestamps[-1] + last_span
    if ts[-1] < aux.timestamps[0] or ts[0] >= end:
        raise AlignmentError(
            f"time ranges do not overlap: points [{ts[0]}, {ts[-1]}], "
            f"aux [{aux.timestamps[0]}, {end})"
        )
    idx = np.searchsorted(aux.timestamps, ts, side="right") - 1
    inside = (idx >= 0) & (ts < end)
    a = np.full(len(ts), np.nan)
    a[inside] = aux.values[idx[inside]]
    keep = inside & ~np.isnan(a) & ~np.isnan(vals)
    return vals[keep], a[keep]
