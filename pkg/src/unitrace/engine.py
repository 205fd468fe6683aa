"""Per-timestamp uniqueness and entropy of k-length windows.

For a start index ``t`` every complete series contributes the vector of its
``k`` consecutive (degraded) measures. Vectors are grouped by exact
equality: a series is *unique* when its group has size one, and the window
entropy is the Shannon entropy (bits) of the group-size distribution.

Grouping packs each window into a single int64 key with a mixed-radix
encoding, which is injective, so grouping by key is grouping by vector.
When the next measure would overflow 63 bits the partial key is relabelled
to its dense class index (again injective) and packing continues. Keys are
then sorted; no hashing is involved. Work streams over ``t`` so peak memory
stays at a few ``n``-length arrays per worker.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .dataset import Dataset, WindowSpec, window
from .degrade import check_order, degraded_max, round_array, round_order
from .errors import BoundsError, ConfigError

_INT64_LIMIT = 2**63 - 1


class WindowUniqueness(NamedTuple):
    u: float | None  # None: no complete series in the window
    unique_ids: list[str]
    included_count: int

    @property
    def unique_count(self) -> int:
        return len(self.unique_ids)


class WindowEntropy(NamedTuple):
    e: float | None
    class_count: int
    included_count: int


@dataclass(frozen=True)
class MatchResult:
    query: tuple[int, ...]
    t: int
    order: int
    matches: list[str]

    @property
    def is_unique(self) -> bool:
        return len(self.matches) == 1


def _aggregate(x: np.ndarray) -> tuple[float | None, float | None, float | None]:
    defined = x[~np.isnan(x)]
    if defined.size == 0:
        return None, None, None
    return float(defined.mean()), float(defined.min()), float(defined.max())


@dataclass(frozen=True, eq=False)
class UniquenessResult:
    """Uniqueness of every window of length ``k`` at one rounding order.

    ``u`` is NaN where no series is complete in the window; such windows are
    left out of ``mean_u``/``min_u``/``max_u``. ``unique_rows`` is only filled
    when ids were requested.
    """

    k: int
    order: int
    t: np.ndarray
    u: np.ndarray
    unique_count: np.ndarray
    included_count: np.ndarray
    series_ids: tuple[str, ...] = ()
    unique_rows: tuple[np.ndarray, ...] | None = None

    @property
    def mean_u(self) -> float | None:
        return _aggregate(self.u)[0]

    @property
    def min_u(self) -> float | None:
        return _aggregate(self.u)[1]

    @property
    def max_u(self) -> float | None:
        return _aggregate(self.u)[2]

    @property
    def undefined_windows(self) -> int:
        return int(np.count_nonzero(self.included_count == 0))

    @property
    def per_t(self) -> list[tuple[int, float | None, int, int]]:
        return [
            (int(t), None if math.isnan(u) else float(u), int(c), int(i))
            for t, u, c, i in zip(self.t, self.u, self.unique_count, self.included_count)
        ]

    def unique_ids(self, index: int) -> list[str]:
        if self.unique_rows is None:
            raise ConfigError("unique ids were not materialized; rerun with with_ids=True")
        return [self.series_ids[r] for r in self.unique_rows[index]]


@dataclass(frozen=True, eq=False)
class EntropyResult:
    k: int
    order: int
    t: np.ndarray
    e: np.ndarray
    class_count: np.ndarray
    included_count: np.ndarray

    @property
    def mean_e(self) -> float | None:
        return _aggregate(self.e)[0]

    @property
    def min_e(self) -> float | None:
        return _aggregate(self.e)[1]

    @property
    def max_e(self) -> float | None:
        return _aggregate(self.e)[2]

    @property
    def undefined_windows(self) -> int:
        return int(np.count_nonzero(self.included_count == 0))

    @property
    def per_t(self) -> list[tuple[int, float | None, int, int]]:
        return [
            (int(t), None if math.isnan(e) else float(e), int(c), int(i))
            for t, e, c, i in zip(self.t, self.e, self.class_count, self.included_count)
        ]


def entropy_from_counts(counts: np.ndarray) -> float:
    """Shannon entropy in bits of the distribution given by class sizes."""
    counts = np.asarray(counts, dtype=np.float64)
    if counts.size == 1:
        return 0.0
    total = counts.sum()
    # sum(c log2 c) is exactly 0 when every class is a singleton
    return float(math.log2(total) - np.sum(counts * np.log2(counts)) / total)


# ---------------------------------------------------------------------------
# kernel


class _WindowStats(NamedTuple):
    included: int
    unique: int
    classes: int
    entropy: float
    unique_rows: np.ndarray | None


_EMPTY = _WindowStats(0, 0, 0, math.nan, None)


def _scan_start(
    dataset: Dataset,
    t: int,
    ks: Sequence[int],
    order: int,
    with_ids: bool,
) -> dict[int, _WindowStats]:
    """Stats for every ``k`` in ``ks`` (ascending) of windows starting at ``t``."""
    values, present = dataset.values, dataset.present
    step = 10**order
    radix = degraded_max(dataset.domain_max, order) // step + 1
    wanted = set(ks)
    out: dict[int, _WindowStats] = {}

    rows = np.flatnonzero(present[:, t])
    key = round_array(values[rows, t], order) // step
    bound = radix
    for j in range(ks[-1]):
        if j:
            keep = present[rows, t + j]
            if not keep.all():
                rows = rows[keep]
                key = key[keep]
            if bound > _INT64_LIMIT // radix:
                _, key = np.unique(key, return_inverse=True)
                bound = int(key.max(initial=0)) + 1
            key = key * radix + round_array(values[rows, t + j], order) // step
            bound *= radix
        k = j + 1
        if k not in wanted:
            continue
        if rows.size == 0:
            out[k] = _EMPTY
            continue
        if with_ids:
            _, inverse, counts = np.unique(key, return_inverse=True, return_counts=True)
            singles = rows[counts[inverse] == 1]
        else:
            _, counts = np.unique(key, return_counts=True)
            singles = None
        out[k] = _WindowStats(
            included=int(rows.size),
            unique=int(np.count_nonzero(counts == 1)),
            classes=int(counts.size),
            entropy=entropy_from_counts(counts),
            unique_rows=singles,
        )
    return out


def _check_ks(ks: Iterable[int], m: int) -> list[int]:
    ks = sorted({int(k) for k in ks})
    if not ks:
        raise BoundsError("no window length given")
    if ks[0] < 1:
        raise BoundsError(f"window length k must be >= 1, got {ks[0]}")
    if ks[-1] > m:
        raise BoundsError(f"window length k={ks[-1]} exceeds the number of timestamps m={m}")
    return ks


def compute_curves(
    dataset: Dataset,
    ks: Iterable[int],
    orders: Iterable[int] = (0,),
    *,
    starts: Iterable[int] | None = None,
    threads: int = 1,
    with_ids: bool = False,
    allow_above: bool = False,
) -> dict[tuple[int, int], tuple[UniquenessResult, EntropyResult]]:
    """Uniqueness and entropy curves for every ``(k, order)`` pair.

    All window lengths sharing a start index are computed in one pass.
    ``starts`` restricts which start indices enter the curves. Output does
    not depend on ``threads``: workers own disjoint start indices and write
    to disjoint slots.
    """
    ks = _check_ks(ks, dataset.m)
    orders = [check_order(o, allow_above=allow_above) for o in dict.fromkeys(orders)]
    if not orders:
        raise ConfigError("no rounding order given")
    if threads < 1:
        raise ConfigError(f"threads must be >= 1, got {threads}")
    radix = max(degraded_max(dataset.domain_max, o) // 10**o + 1 for o in orders)
    if dataset.n >= _INT64_LIMIT // radix:
        raise ConfigError("population too large for int64 window keys")

    last = dataset.m - ks[0]
    if starts is None:
        t_all = np.arange(last + 1)
    else:
        t_all = np.unique(np.asarray(list(starts), dtype=np.int64))
        if t_all.size and (t_all[0] < 0 or t_all[-1] >= dataset.m):
            raise BoundsError("start index outside the timestamp grid")
        t_all = t_all[t_all <= last]

    jobs = [(int(t), o) for t in t_all for o in orders]

    def run(job):
        t, o = job
        fitting = [k for k in ks if t + k <= dataset.m]
        return _scan_start(dataset, t, fitting, o, with_ids)

    if threads == 1 or len(jobs) < 2:
        stats = [run(job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            stats = list(pool.map(run, jobs))
    by_job = dict(zip(jobs, stats))

    results = {}
    for k in ks:
        t_k = t_all[t_all <= dataset.m - k]
        for o in orders:
            cells = [by_job[(int(t), o)][k] for t in t_k]
            included = np.array([c.included for c in cells], dtype=np.int64)
            unique = np.array([c.unique for c in cells], dtype=np.int64)
            with np.errstate(invalid="ignore", divide="ignore"):
                u = np.where(included > 0, unique / np.maximum(included, 1), np.nan)
            ures = UniquenessResult(
                k=k,
                order=o,
                t=t_k.copy(),
                u=u,
                unique_count=unique,
                included_count=included,
                series_ids=dataset.series_ids,
                unique_rows=tuple(
                    c.unique_rows if c.unique_rows is not None else np.empty(0, dtype=np.int64)
                    for c in cells
                )
                if with_ids
                else None,
            )
            eres = EntropyResult(
                k=k,
                order=o,
                t=t_k.copy(),
                e=np.array([c.entropy for c in cells], dtype=np.float64),
                class_count=np.array([c.classes for c in cells], dtype=np.int64),
                included_count=included.copy(),
            )
            results[(k, o)] = (ures, eres)
    return results


def uniqueness_curve(dataset: Dataset, k: int, order: int = 0, **kwargs) -> UniquenessResult:
    (pair,) = compute_curves(dataset, [k], [order], **kwargs).values()
    return pair[0]


def entropy_curve(dataset: Dataset, k: int, order: int = 0, **kwargs) -> EntropyResult:
    (pair,) = compute_curves(dataset, [k], [order], **kwargs).values()
    return pair[1]


def uniqueness_at(dataset: Dataset, spec: WindowSpec, order: int = 0) -> WindowUniqueness:
    spec.check(dataset.m)
    stats = _scan_start(dataset, spec.t, [spec.k], check_order(order), with_ids=True)[spec.k]
    if stats.included == 0:
        return WindowUniqueness(None, [], 0)
    return WindowUniqueness(
        stats.unique / stats.included,
        [dataset.series_ids[r] for r in stats.unique_rows],
        stats.included,
    )


def entropy_at(dataset: Dataset, spec: WindowSpec, order: int = 0) -> WindowEntropy:
    spec.check(dataset.m)
    stats = _scan_start(dataset, spec.t, [spec.k], check_order(order), with_ids=False)[spec.k]
    if stats.included == 0:
        return WindowEntropy(None, 0, 0)
    return WindowEntropy(stats.entropy, stats.classes, stats.included)


def match_query(dataset: Dataset, t: int, query: Sequence[int], order: int = 0) -> MatchResult:
    """Series whose window at ``t`` equals ``query`` after both are degraded."""
    query = tuple(int(v) for v in query)
    if not query:
        raise BoundsError("empty query")
    if any(v < 0 for v in query):
        raise ConfigError("query values must be non-negative integers")
    order = check_order(order)
    ws = window(dataset, WindowSpec(t, len(query)))
    target = np.array([round_order(v, order) for v in query], dtype=np.int64)
    hits = np.flatnonzero((round_array(ws.matrix, order) == target).all(axis=1))
    return MatchResult(query=query, t=t, order=order, matches=[ws.ids[i] for i in hits])


def brute_force_uniqueness(dataset: Dataset, spec: WindowSpec, order: int = 0) -> WindowUniqueness:
    """Reference implementation: quadratic pairwise comparison of windows.

    Meant for small populations; shares no grouping code with
    :func:`uniqueness_at`.
    """
    ws = window(dataset, spec)
    order = check_order(order)
    if len(ws) == 0:
        return WindowUniqueness(None, [], 0)
    rounded = np.array(
        [[round_order(v, order) for v in vec] for _, vec in ws.rows], dtype=np.int64
    ).reshape(len(ws), spec.k)
    same = (rounded[:, None, :] == rounded[None, :, :]).all(axis=2)
    alone = same.sum(axis=1) == 1
    unique_ids = [s for s, a in zip(ws.ids, alone) if a]
    return WindowUniqueness(len(unique_ids) / len(ws), unique_ids, len(ws))
