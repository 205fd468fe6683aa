"""Shared test data: the four-series fixture and the randomized corpus."""

import math
from collections import Counter

import numpy as np

from unitrace.dataset import Dataset, window
from unitrace.degrade import round_order

FOUR = {"A": [1, 2, 3, 4], "B": [1, 2, 3, 5], "C": [1, 2, 3, 4], "D": [0, 2, 3, 4]}


def four_series() -> Dataset:
    return Dataset.from_rows(FOUR)


def random_dataset(rng: np.random.Generator, max_n=200, max_m=50, missing=0.10) -> Dataset:
    """Small population with plenty of collisions at every rounding order."""
    n = int(rng.integers(1, max_n + 1))
    m = int(rng.integers(1, max_m + 1))
    alphabet = int(rng.choice([1, 2, 3, 5]))
    spacing = int(rng.choice([1, 7, 45, 450, 5000]))
    jitter = int(rng.choice([1, 10, 100]))
    values = rng.integers(0, alphabet, (n, m)) * spacing + rng.integers(0, jitter, (n, m))
    values = np.minimum(values, 36_000)
    present = rng.random((n, m)) >= missing
    ids = tuple(f"s{i:03d}" for i in rng.permutation(n))
    return Dataset(ids, np.arange(m), values, present, step_seconds=1800)


def corpus(count: int, seed: int, **kwargs):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        yield random_dataset(rng, **kwargs), rng


def direct_entropy(dataset: Dataset, t: int, k: int, order: int):
    """Entropy by counting the multiset of degraded windows with a Counter."""
    from unitrace.dataset import WindowSpec

    ws = window(dataset, WindowSpec(t, k))
    if len(ws) == 0:
        return None, 0, 0
    counts = Counter(tuple(round_order(v, order) for v in vec) for _, vec in ws.rows)
    total = len(ws)
    e = -sum((c / total) * math.log2(c / total) for c in counts.values())
    return e, len(counts), total
