"""``unitrace`` command line.

Exit codes: 0 success, 2 input error, 3 parameter error, 4 alignment error,
5 no match (``match`` only).
"""

from __future__ import annotations

import argparse
import datetime as dt
import sys
import time
from dataclasses import asdict, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import report
from .dataset import Dataset, ParseOptions, load_dataset, save_npz, write_long_csv
from .degrade import parse_orders
from .engine import compute_curves, match_query
from .errors import AlignmentError, ConfigError, InputError, ParameterError, UnitraceError
from .stats import (
    EpochMapping,
    align,
    group_by_time,
    load_aux_csv,
    pearson,
    population_mean_series,
    window_means,
)
from .synth import PRESET_SIZES, SynthConfig, default_calibrated_config, generate

EXIT_OK, EXIT_INPUT, EXIT_PARAM, EXIT_ALIGN, EXIT_NO_MATCH = 0, 2, 3, 4, 5


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARAM, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# argument parsing helpers


def parse_ks(text: str) -> list[int]:
    """``"2,4"``, ``"1-7"`` or ``"1..7"`` (and mixes such as ``"1-3,6"``)."""
    ks: list[int] = []
    try:
        for part in text.split(","):
            part = part.strip()
            if not part:
                continue
            sep = ".." if ".." in part else ("-" if "-" in part[1:] else None)
            if sep:
                lo, hi = (int(x) for x in part.split(sep, 1))
                ks.extend(range(lo, hi + 1))
            else:
                ks.append(int(part))
    except ValueError:
        raise ConfigError(f"invalid k list {text!r}") from None
    if not ks:
        raise ConfigError(f"k list {text!r} is empty")
    if min(ks) < 1:
        raise ConfigError(f"window lengths must be >= 1, got {min(ks)}")
    return sorted(set(ks))


def _parse_time(text: str) -> int:
    if text.lstrip("-").isdigit():
        return int(text)
    try:
        moment = dt.datetime.fromisoformat(text)
    except ValueError:
        raise ConfigError(f"invalid date {text!r}") from None
    if moment.tzinfo is None:
        moment = moment.replace(tzinfo=dt.timezone.utc)
    return int(moment.timestamp())


def _parse_hours(text: str) -> set[int]:
    hours: set[int] = set()
    try:
        for part in text.split(","):
            part = part.strip()
            if "-" in part:
                lo, hi = (int(x) for x in part.split("-", 1))
                hours.update(range(lo, hi + 1))
            elif part:
                hours.add(int(part))
    except ValueError:
        raise ConfigError(f"invalid hour list {text!r}") from None
    if not hours or min(hours) < 0 or max(hours) > 23:
        raise ConfigError(f"hours must lie in 0-23, got {text!r}")
    return hours


def select_starts(dataset: Dataset, args) -> list[int] | None:
    """Start indices passing ``--from``/``--to``/``--hours``; None if unfiltered."""
    if args.date_from is None and args.date_to is None and args.hours is None:
        return None
    mapping = EpochMapping.for_dataset(dataset, args.utc_offset)
    epoch = mapping.to_epoch(dataset.timestamps)
    keep = np.ones(dataset.m, dtype=bool)
    if args.date_from is not None:
        keep &= epoch >= _parse_time(args.date_from)
    if args.date_to is not None:
        keep &= epoch < _parse_time(args.date_to)
    if args.hours is not None:
        hour = ((epoch + mapping.utc_offset_seconds) % 86_400) // 3_600
        keep &= np.isin(hour, sorted(_parse_hours(args.hours)))
    return np.flatnonzero(keep).tolist()


def _single_order(text: str) -> int:
    orders = parse_orders(str(text))
    if len(orders) != 1:
        raise ConfigError(f"expected a single rounding order, got {text!r}")
    return orders[0]


def _load(args) -> Dataset:
    options = ParseOptions(
        unit=args.unit,
        step_seconds=args.step_seconds,
        domain_max=args.domain_max,
        epoch_origin=args.epoch_origin,
        sidecar=args.meta,
    )
    return load_dataset(args.input, options)


def _filters(args) -> dict:
    return {"from": args.date_from, "to": args.date_to, "hours": args.hours}


def _emit(payload: dict, out_dir: Path | None, name: str) -> None:
    if out_dir is None:
        sys.stdout.write(report.dumps(payload))
    else:
        path = report.write_json(payload, out_dir / name)
        print(f"wrote {path}", file=sys.stderr)


def _out_dir(args, required: bool = False) -> Path | None:
    if args.out is None:
        if required:
            raise ConfigError("--out is required")
        if getattr(args, "format", "json") == "csv":
            raise ConfigError("--format csv needs --out")
        return None
    path = Path(args.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


# ---------------------------------------------------------------------------
# commands


def cmd_audit(args) -> int:
    t0 = time.perf_counter()
    ks = parse_ks(args.k)
    orders = parse_orders(args.round)
    out_dir = _out_dir(args)
    dataset = _load(args)
    t1 = time.perf_counter()
    starts = select_starts(dataset, args)
    curves = compute_curves(dataset, ks, orders, starts=starts, threads=args.threads)
    t2 = time.perf_counter()

    results = []
    for k in ks:
        for order in orders:
            ures, eres = curves[(k, order)]
            results.append(
                {
                    "k": k,
                    "round": order,
                    "uniqueness": report.uniqueness_block(ures),
                    "entropy": report.entropy_block(eres) if args.entropy else None,
                }
            )
            if out_dir is not None and args.format == "csv":
                report.write_uniqueness_csv(ures, out_dir / f"uniqueness_k{k}_round{order}.csv")
                if args.entropy:
                    report.write_entropy_csv(eres, out_dir / f"entropy_k{k}_round{order}.csv")

    payload = report.envelope("audit")
    payload["dataset"] = report.dataset_block(dataset)
    payload["parameters"] = {"k": ks, "round": orders, "entropy": bool(args.entropy), "filters": _filters(args)}
    payload["results"] = results
    payload["timing"] = _timing(args.threads, t0, t1, t2)
    _emit(payload, out_dir, "report.json")
    return EXIT_OK


def cmd_sweep(args) -> int:
    t0 = time.perf_counter()
    ks = parse_ks(args.k)
    orders = parse_orders(args.round)
    out_dir = _out_dir(args, required=True)
    dataset = _load(args)
    t1 = time.perf_counter()
    curves = compute_curves(dataset, ks, orders, starts=select_starts(dataset, args), threads=args.threads)
    t2 = time.perf_counter()

    rows = []
    for order in orders:
        table = []
        for k in ks:
            ures = curves[(k, order)][0]
            table.append((k, ures.mean_u, ures.min_u, ures.max_u))
            rows.append({"k": k, "round": order, "uniqueness": report.uniqueness_block(ures)})
        report.write_csv(out_dir / f"sweep_round{order}.csv", ("k", "mean_u", "min_u", "max_u"), table)

    payload = report.envelope("sweep")
    payload["dataset"] = report.dataset_block(dataset)
    payload["parameters"] = {"k": ks, "round": orders, "filters": _filters(args)}
    payload["results"] = rows
    payload["timing"] = _timing(args.threads, t0, t1, t2)
    _emit(payload, out_dir, "sweep.json")
    return EXIT_OK


def _correlation(x_label, y_label, x, y) -> dict:
    entry = {"x": x_label, "y": y_label, "points": int(len(x)), "r": None}
    try:
        entry["r"] = pearson(x, y)
    except ParameterError as exc:
        entry["undefined"] = str(exc)
    return entry


def cmd_correlate(args) -> int:
    t0 = time.perf_counter()
    k = int(args.k)
    order = _single_order(args.round)
    out_dir = _out_dir(args)
    groupings = [g.strip() for g in args.group.split(",") if g.strip()] if args.group else []
    for g in groupings:
        if g not in ("month", "hour", "hour_of_day"):
            raise ConfigError(f"unknown grouping {g!r}; use month and/or hour")
    aux_series = [load_aux_csv(p) for p in args.aux or []]
    dataset = _load(args)
    t1 = time.perf_counter()

    starts = select_starts(dataset, args)
    ures, eres = compute_curves(dataset, [k], [order], starts=starts, threads=args.threads)[(k, order)]
    t_idx = ures.t
    stamps = dataset.timestamps[t_idx]
    mean_series = population_mean_series(dataset)
    consumption = window_means(mean_series, t_idx, k)
    point_mean = mean_series.values[t_idx]

    pairs = {}

    def defined(a, b):
        keep = ~np.isnan(a) & ~np.isnan(b)
        return a[keep], b[keep]

    pairs[("uniqueness", "entropy")] = defined(ures.u, eres.e)
    pairs[("uniqueness", "mean_consumption")] = defined(ures.u, consumption)
    for aux in aux_series:
        cons, a = align(aux, stamps, point_mean)
        pairs[(aux.label, "mean_consumption")] = (a, cons)
        uu, a2 = align(aux, stamps, ures.u)
        pairs[(aux.label, "uniqueness")] = (a2, uu)

    correlations = [_correlation(xl, yl, x, y) for (xl, yl), (x, y) in pairs.items()]
    if out_dir is not None and args.format == "csv":
        for (xl, yl), (x, y) in pairs.items():
            report.write_pairs_csv(x, y, out_dir / f"pairs_{xl}_{yl}.csv")

    groups = {}
    if groupings:
        mapping = EpochMapping.for_dataset(dataset, args.utc_offset)
        for g in groupings:
            gran = "month" if g == "month" else "hour_of_day"
            for name, vals in (("uniqueness", ures.u), ("entropy", eres.e)):
                grouped = group_by_time(stamps, vals, gran, mapping)
                groups.setdefault(name, {})[gran] = report.grouped_block(grouped)
                if out_dir is not None and args.format == "csv":
                    report.write_grouped_csv(grouped, out_dir / f"{name}_by_{gran}.csv")
    t2 = time.perf_counter()

    payload = report.envelope("correlate")
    payload["dataset"] = report.dataset_block(dataset)
    payload["parameters"] = {
        "k": k,
        "round": order,
        "aux": [a.label for a in aux_series],
        "group": ["month" if g == "month" else "hour_of_day" for g in groupings],
        "filters": _filters(args),
    }
    payload["uniqueness"] = report.uniqueness_block(ures)
    payload["entropy"] = report.entropy_block(eres)
    payload["correlations"] = correlations
    payload["groups"] = groups
    payload["timing"] = _timing(args.threads, t0, t1, t2)
    _emit(payload, out_dir, "correlate.json")
    return EXIT_OK


def cmd_match(args) -> int:
    try:
        query = [int(v) for v in args.query.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"invalid query {args.query!r}") from None
    order = _single_order(args.round)
    dataset = _load(args)
    result = match_query(dataset, args.t, query, order)
    payload = report.envelope("match")
    payload.update(
        {
            "dataset": report.dataset_block(dataset),
            "t": result.t,
            "timestamp": int(dataset.timestamps[result.t]),
            "round": result.order,
            "query": list(result.query),
            "matches": result.matches,
            "is_unique": result.is_unique,
        }
    )
    sys.stdout.write(report.dumps(payload))
    return EXIT_OK if result.matches else EXIT_NO_MATCH


_SYNTH_FLAGS = {
    "n": int,
    "m": int,
    "step_seconds": int,
    "scale_mu": float,
    "scale_sigma": float,
    "noise_sigma": float,
    "zero_prob": float,
    "zero_burst_len": float,
    "missing_prob": float,
    "missing_burst_len": float,
    "time_shift_max": int,
    "seasonal_amplitude": float,
    "start_epoch": int,
}


def cmd_generate(args) -> int:
    overrides = {name: getattr(args, name) for name in _SYNTH_FLAGS if getattr(args, name) is not None}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.config:
        config = replace(SynthConfig.from_json(args.config), **overrides)
    else:
        config = default_calibrated_config(args.preset, **overrides)
    dataset = generate(config, workers=args.threads)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if out.suffix == ".npz":
        save_npz(dataset, out)
    else:
        write_long_csv(dataset, out)
    payload = report.envelope("generate")
    payload["config"] = asdict(config)
    payload["output"] = str(out)
    payload["dataset"] = report.dataset_block(dataset)
    sys.stdout.write(report.dumps(payload))
    return EXIT_OK


def _timing(threads: int, t0: float, t1: float, t2: float) -> dict:
    return {
        "threads": threads,
        "load_seconds": t1 - t0,
        "compute_seconds": t2 - t1,
        "total_seconds": time.perf_counter() - t0,
    }


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="unitrace", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    data = _Parser(add_help=False)
    data.add_argument("input", help="canonical long CSV or .npz dataset")
    data.add_argument("--meta", help="metadata sidecar JSON (default: <input>.meta.json if present)")
    data.add_argument("--unit", choices=["W", "Wh"])
    data.add_argument("--step-seconds", type=int)
    data.add_argument("--domain-max", type=int)
    data.add_argument("--epoch-origin", type=int, help="epoch seconds of timestamp index 0")

    run = _Parser(add_help=False)
    run.add_argument("--threads", type=int, default=1)
    run.add_argument("--out", help="output directory")
    run.add_argument("--format", choices=["json", "csv"], default="json")
    run.add_argument("--from", dest="date_from", help="first window start (ISO date/time or epoch seconds)")
    run.add_argument("--to", dest="date_to", help="exclusive upper bound on window start")
    run.add_argument("--hours", help="hours of day for window starts, e.g. 18-22 or 0,12")
    run.add_argument("--utc-offset", type=int, default=0, help="seconds added to UTC for wall-clock time")

    p = sub.add_parser("audit", parents=[data, run], help="uniqueness (and entropy) per k and rounding order")
    p.add_argument("--k", required=True, help="window lengths: list or range, e.g. 2,4 or 1-7")
    p.add_argument("--round", default="0", help="rounding orders, e.g. 0,1,2,3")
    p.add_argument("--entropy", action="store_true")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("sweep", parents=[data, run], help="plot-ready k x rounding grid")
    p.add_argument("--k", required=True)
    p.add_argument("--round", default="0,1,2,3")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("correlate", parents=[data, run], help="Pearson correlations and time grouping")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--round", default="0")
    p.add_argument("--aux", action="append", help="aux series CSV (timestamp,value); repeatable")
    p.add_argument("--group", help="month, hour, or month,hour")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("match", parents=[data], help="which series match known consecutive measures")
    p.add_argument("--t", type=int, required=True, help="start index of the known measures")
    p.add_argument("--query", required=True, help="comma-separated measures")
    p.add_argument("--round", default="0")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("generate", help="write a synthetic population")
    p.add_argument("--out", required=True, help="output .csv (with sidecar) or .npz")
    p.add_argument("--preset", choices=sorted(PRESET_SIZES), default="small")
    p.add_argument("--config", help="SynthConfig JSON file")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, default=1)
    for name, typ in _SYNTH_FLAGS.items():
        p.add_argument("--" + name.replace("_", "-"), dest=name, type=typ)
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"unitrace: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ParameterError as exc:
        print(f"unitrace: parameter error: {exc}", file=sys.stderr)
        return EXIT_PARAM
    except AlignmentError as exc:
        print(f"unitrace: alignment error: {exc}", file=sys.stderr)
        return EXIT_ALIGN
    except UnitraceError as exc:  # pragma: no cover - every family is handled above
        print(f"unitrace: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
