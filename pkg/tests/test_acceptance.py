"""Acceptance gate: one PASS/FAIL line per criterion, printed in the summary.

Run alone with ``pytest tests/test_acceptance.py -v``. The medium-preset
criteria share one generated population and one sweep (module fixtures).
"""

import gzip
import json
import math
import subprocess
import sys
import textwrap
import time
from pathlib import Path

import numpy as np
import pytest
from helpers import corpus, direct_entropy, random_dataset

from unitrace.dataset import Dataset, WindowSpec, subsample, write_long_csv
from unitrace.degrade import round_order
from unitrace.engine import brute_force_uniqueness, compute_curves, entropy_at, uniqueness_at
from unitrace.stats import summary
from unitrace.synth import default_calibrated_config, generate

CORPUS_SIZE = 1_000
CORPUS_SEED = 20_240_601
KS = range(1, 8)
ORDERS = range(4)
TABLE = Path(__file__).parent / "fixtures" / "sql_round_table.csv.gz"
CLI = [sys.executable, "-m", "unitrace.cli"]


def corpus_windows(seed=CORPUS_SEED):
    """Every dataset in the corpus at every (k, order) it admits, one random t each."""
    for i, (d, rng) in enumerate(corpus(CORPUS_SIZE, seed)):
        for k in range(1, min(7, d.m) + 1):
            t = int(rng.integers(0, d.m - k + 1))
            for order in ORDERS:
                yield i, d, WindowSpec(t, k), order


# -- 1 -------------------------------------------------------------------------


def test_c1_oracle_equivalence(gate):
    start = time.perf_counter()
    datasets, windows, mismatches = set(), 0, []
    for i, d, spec, order in corpus_windows():
        datasets.add(i)
        windows += 1
        got = uniqueness_at(d, spec, order)
        want = brute_force_uniqueness(d, spec, order)
        if got != want:
            mismatches.append((spec, order))
    elapsed = time.perf_counter() - start
    gate.check(
        "C1 oracle equivalence",
        not mismatches and len(datasets) == CORPUS_SIZE and elapsed < 60,
        f"{CORPUS_SIZE} datasets, {windows} windows, {len(mismatches)} mismatches, {elapsed:.1f}s",
    )


# -- 2 -------------------------------------------------------------------------


def test_c2_entropy_correctness(gate):
    worst = 0.0
    boundary_bad = 0
    boundary_seen = 0
    for _, d, spec, order in corpus_windows():
        e, classes, included = entropy_at(d, spec, order)
        expected, _, _ = direct_entropy(d, spec.t, spec.k, order)
        if included == 0:
            boundary_bad += e is not None
            continue
        worst = max(worst, abs(e - expected))
        if classes == 1:
            boundary_seen += 1
            boundary_bad += abs(e) > 1e-12
        if classes == included:
            boundary_seen += 1
            boundary_bad += abs(e - math.log2(included)) > 1e-12
    # constructed boundaries at larger N
    for n in (1, 2, 3, 1000, 4097):
        same = Dataset.from_rows({f"s{i:05d}": [7, 7] for i in range(n)})
        distinct = Dataset.from_rows({f"s{i:05d}": [i % 36_001, i // 36_001] for i in range(n)})
        boundary_bad += abs(entropy_at(same, WindowSpec(0, 2)).e) > 1e-12
        boundary_bad += abs(entropy_at(distinct, WindowSpec(0, 2)).e - math.log2(n)) > 1e-12
        boundary_seen += 2
    gate.check(
        "C2 entropy correctness",
        worst <= 1e-9 and boundary_bad == 0,
        f"max |e - direct| = {worst:.2e}, {boundary_seen} boundary windows, {boundary_bad} violations",
    )


# -- 3 -------------------------------------------------------------------------


def test_c3_rounding_bit_exact(gate):
    with gzip.open(TABLE, "rt") as fh:
        engine = fh.readline().strip()
        table = np.loadtxt(fh, delimiter=",", skiprows=1, dtype=np.int64)
    ok = table.shape == (36_001, 5) and np.array_equal(table[:, 0], np.arange(36_001))
    diffs = 0
    for order in ORDERS:
        ours = np.array([round_order(int(v), order) for v in table[:, 0]])
        diffs += int(np.count_nonzero(ours != table[:, order + 1]))
    gate.check("C3 rounding bit-exactness", ok and diffs == 0, f"{table.shape[0]} values x 4 orders vs {engine.lstrip('# ')}, {diffs} differences")


# -- 4 -------------------------------------------------------------------------

CASES = 600


def test_c4_monotonicity(gate):
    rng = np.random.default_rng(CORPUS_SEED + 4)
    bad = {"a": 0, "b": 0, "c": 0}
    seen = {"a": 0, "b": 0, "c": 0}
    while min(seen.values()) < CASES:
        if seen["a"] < CASES:
            d = random_dataset(rng, missing=0.0)
            if d.m >= 2:
                k = int(rng.integers(1, min(7, d.m - 1) + 1))
                t = int(rng.integers(0, d.m - k))
                short = set(uniqueness_at(d, WindowSpec(t, k)).unique_ids)
                long = set(uniqueness_at(d, WindowSpec(t, k + 1)).unique_ids)
                bad["a"] += not short <= long
                seen["a"] += 1
        d = random_dataset(rng)
        k = int(rng.integers(1, min(7, d.m) + 1))
        spec = WindowSpec(int(rng.integers(0, d.m - k + 1)), k)
        raw = set(uniqueness_at(d, spec).unique_ids)
        order = int(rng.integers(1, 4))
        bad["b"] += not set(uniqueness_at(d, spec, order).unique_ids) <= raw
        seen["b"] += 1
        keep = [s for s in d.series_ids if rng.random() < rng.uniform(0.05, 1.0)] or [d.series_ids[0]]
        order = int(rng.integers(0, 4))
        full = set(uniqueness_at(d, spec, order).unique_ids)
        part = set(uniqueness_at(subsample(d, keep), spec, order).unique_ids)
        bad["c"] += not (full & set(keep)) <= part
        seen["c"] += 1
    gate.check(
        "C4 monotonicity properties",
        sum(bad.values()) == 0,
        ", ".join(f"({p}) {seen[p]} cases {bad[p]} violations" for p in "abc"),
    )


# -- 5 -------------------------------------------------------------------------


def test_c5_entropy_uniqueness_equivalence(gate):
    windows = violations = all_unique = 0
    for _, d, spec, order in corpus_windows():
        u, _, included = uniqueness_at(d, spec, order)
        e, _, _ = entropy_at(d, spec, order)
        if included == 0:
            continue
        windows += 1
        all_unique += u == 1
        violations += (u == 1) != (abs(e - math.log2(included)) <= 1e-9)
    gate.check(
        "C5 u=1 iff e=log2 N",
        violations == 0 and 0 < all_unique < windows,
        f"{windows} windows ({all_unique} fully unique), {violations} violations",
    )


# -- medium preset (6, 7, 8, 10) -----------------------------------------------


@pytest.fixture(scope="module")
def medium():
    return generate(default_calibrated_config("medium"))


@pytest.fixture(scope="module")
def medium_sweep(medium):
    start = time.perf_counter()
    curves = compute_curves(medium, KS, ORDERS)
    means = {key: pair[0].mean_u for key, pair in curves.items()}
    return means, time.perf_counter() - start


def _fmt(values):
    return "[" + ", ".join(f"{v:.4f}" for v in values) + "]"


@pytest.mark.slow
def test_c6_trend_reproduction(gate, medium_sweep):
    means, elapsed = medium_sweep
    order0 = [means[(k, 0)] for k in KS]
    at_k7 = [means[(7, r)] for r in ORDERS]
    increasing = all(b > a for a, b in zip(order0, order0[1:]))
    above = any(u > 0.9 for u in order0)
    decreasing = all(b < a for a, b in zip(at_k7, at_k7[1:]))
    gate.check(
        "C6 trend reproduction",
        increasing and above and decreasing and elapsed < 300,
        f"order 0 by k {_fmt(order0)}, k=7 by order {_fmt(at_k7)}, sweep {elapsed:.0f}s",
    )


@pytest.mark.slow
def test_c7_population_size_effect(gate, medium, medium_sweep):
    means, _ = medium_sweep
    rng = np.random.default_rng(CORPUS_SEED + 7)
    keep = rng.choice(medium.n, size=medium.n // 10, replace=False)
    part = subsample(medium, [medium.series_ids[i] for i in keep])
    sub = {key: pair[0].mean_u for key, pair in compute_curves(part, KS, ORDERS).items()}
    short = [key for key in means if sub[key] < means[key]]
    margin = min(sub[key] - means[key] for key in means)
    gate.check(
        "C7 10% subsample uniqueness >= full",
        not short,
        f"{len(means)} (k, order) pairs, {len(short)} below, smallest margin {margin:+.4f}",
    )


@pytest.mark.slow
def test_c8_calibration(gate, medium):
    s = summary(medium)
    gate.check(
        "C8 calibration",
        abs(s.mean - 725) <= 50 and abs(s.std - 950) <= 200 and 0.03 <= s.zero_fraction <= 0.10,
        f"mean {s.mean:.1f} W, std {s.std:.1f} W, zeros {s.zero_fraction:.4f}",
    )


# -- 9 -------------------------------------------------------------------------


def test_c9_thread_determinism(gate, tmp_path):
    d = generate(default_calibrated_config("small", seed=9))
    path = tmp_path / "small.csv"
    write_long_csv(d, path)
    outputs = []
    for threads in (1, 8):
        proc = subprocess.run(
            [*CLI, "audit", str(path), "--k", "1-7", "--round", "0,1,2,3", "--entropy", "--threads", str(threads)],
            capture_output=True,
            text=True,
            check=True,
        )
        report = json.loads(proc.stdout)
        outputs.append((proc.stdout.partition('  "timing": {')[0], report["timing"]["threads"]))
    (one, t1), (eight, t8) = outputs
    gate.check(
        "C9 --threads 1 vs 8 byte-identical",
        one == eight and (t1, t8) == (1, 8),
        f"{len(one)} bytes before the timing block, identical={one == eight}",
    )


# -- 10 ------------------------------------------------------------------------

MEASURE = textwrap.dedent(
    """
    import json, resource, subprocess, sys, time
    start = time.perf_counter()
    proc = subprocess.run(sys.argv[1:], capture_output=True, text=True)
    elapsed = time.perf_counter() - start
    rss = resource.getrusage(resource.RUSAGE_CHILDREN).ru_maxrss * 1024
    print(json.dumps({"code": proc.returncode, "seconds": elapsed, "peak_bytes": rss, "stderr": proc.stderr[-2000:]}))
    """
)

LARGE = textwrap.dedent(
    """
    import json, resource, time
    from unitrace.engine import compute_curves
    from unitrace.synth import default_calibrated_config, generate
    t0 = time.perf_counter()
    d = generate(default_calibrated_config("large"))
    t1 = time.perf_counter()
    (u, _), = compute_curves(d, [5], [0]).values()
    t2 = time.perf_counter()
    print(json.dumps({"n": d.n, "m": d.m, "generate": t1 - t0, "compute": t2 - t1, "mean_u": u.mean_u,
                      "peak_bytes": resource.getrusage(resource.RUSAGE_SELF).ru_maxrss * 1024}))
    """
)


@pytest.mark.slow
def test_c10_performance(gate, medium, tmp_path):
    path = tmp_path / "medium.csv"
    write_long_csv(medium, path)
    run = subprocess.run(
        [sys.executable, "-c", MEASURE, *CLI, "sweep", str(path), "--k", "1-7", "--round", "0,1,2,3", "--out", str(tmp_path / "sweep")],
        capture_output=True,
        text=True,
        check=True,
    )
    sweep = json.loads(run.stdout)
    rows = (tmp_path / "sweep" / "sweep_round0.csv").read_text().splitlines()
    sweep_ok = sweep["code"] == 0 and len(rows) == 8 and sweep["seconds"] < 300 and sweep["peak_bytes"] < 4 * 2**30

    big = json.loads(subprocess.run([sys.executable, "-c", LARGE], capture_output=True, text=True, check=True).stdout)
    big_total = big["generate"] + big["compute"]
    big_ok = (big["n"], big["m"]) == (1_000_000, 336) and big_total < 600

    gate.check(
        "C10 performance",
        sweep_ok and big_ok,
        f"medium CSV sweep {sweep['seconds']:.0f}s peak {sweep['peak_bytes'] / 2**30:.2f} GiB; "
        f"1M k=5 generate {big['generate']:.0f}s + compute {big['compute']:.0f}s, peak {big['peak_bytes'] / 2**30:.2f} GiB",
    )
