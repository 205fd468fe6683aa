"""Immutable population of integer time series on a regular grid.

Canonical on-disk format is a long CSV::

    series_id,timestamp,value
    A,0,10
    A,1,

An empty ``value`` (or an absent ``(series_id, timestamp)`` pair) is a
missing measure. An optional JSON sidecar next to the CSV (``data.csv`` ->
``data.meta.json``) carries ``unit``, ``step_seconds``, ``domain_max`` and
``epoch_origin``.
"""

from __future__ import annotations

import csv
import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from .errors import (
    BoundsError,
    ConfigError,
    DuplicateError,
    GridError,
    InputError,
    ParseError,
    UnknownSeriesError,
)

DEFAULT_DOMAIN_MAX = 36_000
UNITS = ("W", "Wh")
CSV_HEADER = ("series_id", "timestamp", "value")

_INT_RE = re.compile(r"-?[0-9]+")


@dataclass(frozen=True, eq=False)
class Dataset:
    """Dense ``n x m`` matrix of optional non-negative integer measures.

    Rows are always held in canonical order (lexicographic by series id);
    the constructor reorders them if needed. ``values`` is stored column-major
    so that one timestamp across all series is a contiguous slice. Missing
    cells have ``present == False`` and a stored value of 0.
    """

    series_ids: tuple[str, ...]
    timestamps: np.ndarray
    values: np.ndarray
    present: np.ndarray
    step_seconds: int
    unit: str = "W"
    domain_max: int = DEFAULT_DOMAIN_MAX
    epoch_origin: int | None = None
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ids = tuple(str(s) for s in self.series_ids)
        ts = np.asarray(self.timestamps, dtype=np.int64).reshape(-1)
        values = np.asarray(self.values)
        present = np.asarray(self.present, dtype=bool)

        n, m = len(ids), len(ts)
        if n < 1 or m < 1:
            raise InputError(f"dataset needs n >= 1 and m >= 1, got n={n}, m={m}")
        if values.shape != (n, m) or present.shape != (n, m):
            raise InputError(
                f"values/present must have shape {(n, m)}, got {values.shape} and {present.shape}"
            )
        if not np.issubdtype(values.dtype, np.integer):
            raise InputError(f"values must be integers, got dtype {values.dtype}")
        if any(not s for s in ids):
            raise InputError("series ids must be non-empty")
        if len(set(ids)) != n:
            raise InputError("series ids must be pairwise distinct")
        if self.unit not in UNITS:
            raise InputError(f"unit must be one of {UNITS}, got {self.unit!r}")
        if int(self.step_seconds) <= 0:
            raise InputError(f"step_seconds must be positive, got {self.step_seconds}")
        if int(self.domain_max) < 0:
            raise InputError(f"domain_max must be non-negative, got {self.domain_max}")
        _check_grid(ts)

        # reductions with where= avoid materializing values[present]
        lo = values.min(where=present, initial=0)
        hi = values.max(where=present, initial=0)
        if lo < 0:
            raise InputError(f"negative measure {int(lo)}")
        if hi > self.domain_max:
            raise InputError(f"measure {int(hi)} exceeds domain_max={self.domain_max}")

        order = sorted(range(n), key=ids.__getitem__)
        if order != list(range(n)):
            ids = tuple(ids[i] for i in order)
            values = values[order]
            present = present[order]

        values = np.asfortranarray(values, dtype=np.int32)
        present = np.asfortranarray(present)
        absent = ~present
        if np.count_nonzero(values[absent]):
            values = values.copy(order="F")
            values[absent] = 0
        del absent
        ts, values, present = ts.view(), values.view(), present.view()
        for arr in (ts, values, present):
            arr.flags.writeable = False

        object.__setattr__(self, "series_ids", ids)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "present", present)
        object.__setattr__(self, "step_seconds", int(self.step_seconds))
        object.__setattr__(self, "domain_max", int(self.domain_max))
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(ids)})

    @property
    def n(self) -> int:
        return len(self.series_ids)

    @property
    def m(self) -> int:
        return len(self.timestamps)

    @property
    def missing(self) -> np.ndarray:
        return ~self.present

    @property
    def tick(self) -> int:
        """Spacing between consecutive timestamps, in timestamp units."""
        if self.m > 1:
            return int(self.timestamps[1] - self.timestamps[0])
        return self.step_seconds

    def row(self, series_id: str) -> int:
        try:
            return self._index[series_id]
        except KeyError:
            raise UnknownSeriesError(f"unknown series id {series_id!r}") from None

    def series(self, series_id: str) -> list[int | None]:
        i = self.row(series_id)
        return [int(v) if p else None for v, p in zip(self.values[i], self.present[i])]

    def epoch_times(self) -> np.ndarray:
        """Timestamps as epoch seconds.

        Timestamps spaced by ``step_seconds`` are taken to be epoch seconds
        already. Integer-index timestamps need ``epoch_origin``.
        """
        if self.epoch_origin is not None:
            return self.epoch_origin + self.timestamps * self.step_seconds
        if self.tick == self.step_seconds:
            return self.timestamps.copy()
        raise ConfigError(
            "timestamps are integer indices; an epoch origin is needed to map them to real time"
        )

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.series_ids == other.series_ids
            and self.step_seconds == other.step_seconds
            and self.unit == other.unit
            and self.domain_max == other.domain_max
            and self.epoch_origin == other.epoch_origin
            and np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.present, other.present)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    def __repr__(self) -> str:
        return (
            f"Dataset(n={self.n}, m={self.m}, step_seconds={self.step_seconds}, "
            f"unit={self.unit!r}, missing={int(self.missing.sum())})"
        )

    def replace_values(self, values: np.ndarray) -> "Dataset":
        """Same ids, grid, mask and metadata; new values."""
        return Dataset(
            self.series_ids,
            self.timestamps,
            values,
            self.present,
            step_seconds=self.step_seconds,
            unit=self.unit,
            domain_max=max(self.domain_max, int(np.max(values, where=self.present, initial=0))),
            epoch_origin=self.epoch_origin,
        )

    @classmethod
    def from_rows(
        cls,
        rows: dict[str, Sequence[int | None]],
        timestamps: Sequence[int] | None = None,
        **meta,
    ) -> "Dataset":
        """Build from ``{series_id: [v0, v1, ...]}`` with ``None`` for missing."""
        ids = list(rows)
        m = len(rows[ids[0]]) if ids else 0
        if any(len(rows[s]) != m for s in ids):
            raise InputError("all series must have the same length")
        present = np.array([[v is not None for v in rows[s]] for s in ids], dtype=bool)
        values = np.array([[0 if v is None else v for v in rows[s]] for s in ids], dtype=np.int64)
        if timestamps is None:
            timestamps = np.arange(m)
        meta.setdefault("step_seconds", _default_step(np.asarray(timestamps)))
        return cls(tuple(ids), np.asarray(timestamps), values, present, **meta)


def _default_step(ts: np.ndarray) -> int:
    return int(ts[1] - ts[0]) if len(ts) > 1 else 1


def _check_grid(ts: np.ndarray) -> None:
    if len(ts) < 2:
        return
    d = np.diff(ts)
    if d[0] <= 0:
        raise GridError("timestamps must be strictly increasing")
    bad = np.flatnonzero(d != d[0])
    if bad.size:
        i = int(bad[0])
        raise GridError(
            f"inconsistent timestamp spacing: {int(ts[i])} -> {int(ts[i + 1])} "
            f"(expected step {int(d[0])})"
        )


# ---------------------------------------------------------------------------
# windows


@dataclass(frozen=True)
class WindowSpec:
    """``k`` consecutive timestamps starting at index ``t``."""

    t: int
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise BoundsError(f"window length k must be >= 1, got {self.k}")
        if self.t < 0:
            raise BoundsError(f"window start t must be >= 0, got {self.t}")

    def check(self, m: int) -> None:
        if self.t + self.k > m:
            raise BoundsError(f"window t={self.t}, k={self.k} does not fit in m={m} timestamps")


@dataclass(frozen=True)
class WindowSet:
    spec: WindowSpec
    ids: tuple[str, ...]
    matrix: np.ndarray
    excluded_count: int

    @property
    def rows(self) -> list[tuple[str, tuple[int, ...]]]:
        return [(s, tuple(int(v) for v in vec)) for s, vec in zip(self.ids, self.matrix)]

    def __len__(self) -> int:
        return len(self.ids)


def complete_rows(dataset: Dataset, spec: WindowSpec) -> np.ndarray:
    """Row indices with no missing measure in the window."""
    spec.check(dataset.m)
    block = dataset.present[:, spec.t : spec.t + spec.k]
    return np.flatnonzero(block.all(axis=1))


def window(dataset: Dataset, spec: WindowSpec) -> WindowSet:
    rows = complete_rows(dataset, spec)
    matrix = np.ascontiguousarray(dataset.values[rows, spec.t : spec.t + spec.k])
    ids = tuple(dataset.series_ids[i] for i in rows)
    return WindowSet(spec, ids, matrix, dataset.n - len(rows))


def subsample(dataset: Dataset, ids: Iterable[str]) -> Dataset:
    rows = sorted({dataset.row(s) for s in ids})
    if not rows:
        raise UnknownSeriesError("subsample needs at least one series id")
    return Dataset(
        tuple(dataset.series_ids[i] for i in rows),
        dataset.timestamps,
        dataset.values[rows],
        dataset.present[rows],
        step_seconds=dataset.step_seconds,
        unit=dataset.unit,
        domain_max=dataset.domain_max,
        epoch_origin=dataset.epoch_origin,
    )


# ---------------------------------------------------------------------------
# canonical long CSV


@dataclass(frozen=True)
class ParseOptions:
    """Overrides for metadata; ``None`` falls back to the sidecar, then defaults.

    ``sidecar`` may be a path, ``None`` (look next to the CSV) or ``False``
    (ignore any sidecar).
    """

    unit: str | None = None
    step_seconds: int | None = None
    domain_max: int | None = None
    epoch_origin: int | None = None
    sidecar: Path | str | None | bool = None


def sidecar_path(path: Path | str) -> Path:
    return Path(path).with_suffix(".meta.json")


def _read_sidecar(path: Path, options: ParseOptions) -> dict:
    if options.sidecar is False:
        return {}
    side = Path(options.sidecar) if options.sidecar not in (None, True) else sidecar_path(path)
    if not side.exists():
        if options.sidecar not in (None, True):
            raise InputError(f"sidecar {side} not found")
        return {}
    try:
        meta = json.loads(side.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"sidecar {side}: {exc}") from exc
    unknown = set(meta) - {"unit", "step_seconds", "domain_max", "epoch_origin"}
    if unknown:
        raise InputError(f"sidecar {side}: unknown keys {sorted(unknown)}")
    return meta


def load_long_csv(path: Path | str, options: ParseOptions | None = None) -> Dataset:
    """Load the canonical long CSV into a validated :class:`Dataset`."""
    path = Path(path)
    options = options or ParseOptions()
    if not path.exists():
        raise InputError(f"{path}: no such file")
    meta = _read_sidecar(path, options)
    unit = options.unit or meta.get("unit", "W")
    domain_max = options.domain_max if options.domain_max is not None else meta.get("domain_max", DEFAULT_DOMAIN_MAX)
    epoch_origin = options.epoch_origin if options.epoch_origin is not None else meta.get("epoch_origin")

    with open(path, encoding="utf-8", newline="") as fh:
        header = fh.readline().rstrip("\r\n")
    if header != ",".join(CSV_HEADER):
        raise ParseError(f"expected header {','.join(CSV_HEADER)!r}, got {header!r}", line=1)

    try:
        df = pd.read_csv(
            path,
            dtype={"series_id": "category", "timestamp": np.int64, "value": np.float64},
            keep_default_na=False,
            na_values={"value": [""]},
            engine="c",
            encoding="utf-8",
        )
    except (ValueError, pd.errors.ParserError):
        _scan_rows(path, domain_max)
        raise ParseError(f"{path}: unreadable CSV")
    if _count_commas(path) != 2 * (len(df) + 1):
        _scan_rows(path, domain_max)
        raise ParseError(f"{path}: field count mismatch")
    if df.empty:
        raise InputError(f"{path}: no data rows")

    ts = df["timestamp"].to_numpy()
    vals = df["value"].to_numpy()
    present_rows = ~np.isnan(vals)
    bad = np.flatnonzero(
        present_rows & ((vals < 0) | (vals > domain_max) | (np.floor(vals) != vals))
    )
    bad_ts = np.flatnonzero(ts < 0)
    first = min([int(b[0]) for b in (bad, bad_ts) if b.size], default=None)
    if first is not None:
        _scan_rows(path, domain_max, stop_after=first + 2)
        raise ParseError("invalid row", line=first + 2)
    ids_cat = df["series_id"].cat
    categories = [str(c) for c in ids_cat.categories]
    if any(not c for c in categories):
        line = int(np.flatnonzero(df["series_id"].astype(str).to_numpy() == "")[0]) + 2
        raise ParseError("empty series_id", line=line)

    grid, tidx = np.unique(ts, return_inverse=True)
    _check_grid(grid)
    step_seconds = options.step_seconds or meta.get("step_seconds") or _default_step(grid)
    tick = _default_step(grid) if len(grid) > 1 else step_seconds
    if tick not in (1, step_seconds):
        raise GridError(
            f"timestamp spacing {tick} matches neither an integer index (1) "
            f"nor step_seconds={step_seconds}"
        )

    order = sorted(range(len(categories)), key=categories.__getitem__)
    rank = np.empty(len(categories), dtype=np.int64)
    rank[order] = np.arange(len(categories))
    sid = rank[ids_cat.codes.to_numpy()]
    n, m = len(categories), len(grid)

    cell = sid * m + tidx
    counts = np.bincount(cell, minlength=n * m)
    if counts.max() > 1:
        dup_cell = int(np.flatnonzero(counts > 1)[0])
        lines = (np.flatnonzero(cell == dup_cell) + 2).tolist()
        raise DuplicateError(
            f"duplicate pair (series_id={categories[order[dup_cell // m]]!r}, "
            f"timestamp={int(grid[dup_cell % m])}) on lines {lines}"
        )

    values = np.zeros((n, m), dtype=np.int32, order="F")
    present = np.zeros((n, m), dtype=bool, order="F")
    values[sid[present_rows], tidx[present_rows]] = vals[present_rows].astype(np.int32)
    present[sid[present_rows], tidx[present_rows]] = True
    return Dataset(
        tuple(categories[i] for i in order),
        grid,
        values,
        present,
        step_seconds=step_seconds,
        unit=unit,
        domain_max=domain_max,
        epoch_origin=epoch_origin,
    )


def _count_commas(path: Path) -> int:
    total = 0
    with open(path, "rb") as fh:
        while chunk := fh.read(1 << 24):
            total += chunk.count(b",")
    return total


def _scan_rows(path: Path, domain_max: int, stop_after: int | None = None) -> None:
    """Slow row-by-row validation; raises :class:`ParseError` at the first bad row."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        next(reader, None)
        for row in reader:
            line = reader.line_num
            if stop_after is not None and line > stop_after:
                return
            if len(row) != 3:
                raise ParseError(f"expected 3 fields, got {len(row)}", line=line)
            sid, ts, val = row
            if not sid:
                raise ParseError("empty series_id", line=line)
            if not ts.isdigit():
                raise ParseError(f"timestamp {ts!r} is not a non-negative integer", line=line)
            if val == "":
                continue
            if not _INT_RE.fullmatch(val):
                raise ParseError(f"value {val!r} is not an integer", line=line)
            v = int(val)
            if v < 0:
                raise ParseError(f"negative value {v}", line=line)
            if v > domain_max:
                raise ParseError(f"value {v} exceeds domain_max={domain_max}", line=line)


def write_long_csv(dataset: Dataset, path: Path | str, *, sidecar: bool = True, chunk_rows: int = 20_000) -> Path:
    """Write the canonical long CSV (and its metadata sidecar)."""
    path = Path(path)
    m = dataset.m
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(CSV_HEADER) + "\n")
        for start in range(0, dataset.n, chunk_rows):
            stop = min(start + chunk_rows, dataset.n)
            ids = dataset.series_ids[start:stop]
            vals = pd.array(dataset.values[start:stop].ravel(order="C"), dtype="Int64")
            vals[~dataset.present[start:stop].ravel(order="C")] = pd.NA
            frame = pd.DataFrame(
                {
                    "series_id": pd.Categorical.from_codes(np.repeat(np.arange(len(ids)), m), ids),
                    "timestamp": np.tile(dataset.timestamps, len(ids)),
                    "value": vals,
                }
            )
            frame.to_csv(fh, header=False, index=False, na_rep="", lineterminator="\n")
    if sidecar:
        sidecar_path(path).write_text(json.dumps(_meta(dataset), indent=2) + "\n", encoding="utf-8")
    return path


def _meta(dataset: Dataset) -> dict:
    meta = {"unit": dataset.unit, "step_seconds": dataset.step_seconds, "domain_max": dataset.domain_max}
    if dataset.epoch_origin is not None:
        meta["epoch_origin"] = dataset.epoch_origin
    return meta


# ---------------------------------------------------------------------------
# binary fast path


def save_npz(dataset: Dataset, path: Path | str) -> Path:
    path = Path(path)
    np.savez(
        path,
        series_ids=np.array(dataset.series_ids, dtype=str),
        timestamps=dataset.timestamps,
        values=dataset.values,
        present=dataset.present,
        meta=np.array(json.dumps(_meta(dataset))),
    )
    return path


def load_npz(path: Path | str) -> Dataset:
    try:
        with np.load(path, allow_pickle=False) as z:
            meta = json.loads(str(z["meta"]))
            return Dataset(
                tuple(z["series_ids"].tolist()),
                z["timestamps"],
                z["values"],
                z["present"],
                **meta,
            )
    except (OSError, KeyError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def load_dataset(path: Path | str, options: ParseOptions | None = None) -> Dataset:
    """Load a dataset from ``.csv`` or ``.npz`` by suffix."""
    if Path(path).suffix == ".npz":
        return load_npz(path)
    return load_long_csv(path, options)


def content_hash(dataset: Dataset) -> str:
    """SHA-256 over a canonical binary serialization of the dataset.

    Layout: metadata JSON (sorted keys), NUL, ids joined by ``\\n``, NUL,
    int64 LE timestamps, int32 LE values in row-major order with missing
    cells written as -1.
    """
    h = hashlib.sha256()
    h.update(json.dumps(_meta(dataset), sort_keys=True).encode())
    h.update(b"\0")
    h.update("\n".join(dataset.series_ids).encode())
    h.update(b"\0")
    h.update(dataset.timestamps.astype("<i8").tobytes())
    step = 65_536
    for start in range(0, dataset.n, step):
        block = np.where(dataset.present[start : start + step], dataset.values[start : start + step], -1)
        h.update(np.ascontiguousarray(block, dtype="<i4").tobytes())
    return "sha256:" + h.hexdigest()
