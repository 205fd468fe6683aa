"""Precision degradation by rounding to orders of magnitude.

Rounding follows SQL ``ROUND(x, -order)``: nearest multiple of ``10**order``,
ties away from zero. Python's ``round`` (banker's rounding) is *not* used.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .dataset import Dataset
from .errors import ConfigError

MAX_ORDER = 3


def check_order(order: int, *, allow_above: bool = False) -> int:
    """Validate a rounding order (0 = none, 1 = tens, 2 = hundreds, 3 = thousands)."""
    order = int(order)
    if order < 0:
        raise ConfigError(f"rounding order must be >= 0, got {order}")
    if order > MAX_ORDER and not allow_above:
        raise ConfigError(
            f"rounding order {order} exceeds {MAX_ORDER}; pass allow_above=True to override"
        )
    return order


def round_order(value: int, order: int) -> int:
    value = int(value)
    if value < 0:
        raise ValueError(f"value must be non-negative, got {value}")
    if order == 0:
        return value
    step = 10**order
    return (value + step // 2) // step * step


def round_array(values: np.ndarray, order: int) -> np.ndarray:
    """Vectorized :func:`round_order` on non-negative integers (returns int64)."""
    values = np.asarray(values, dtype=np.int64)
    if order == 0:
        return values
    step = 10**order
    return (values + step // 2) // step * step


def degraded_max(domain_max: int, order: int) -> int:
    """Largest value a degraded measure can take."""
    return round_order(domain_max, order)


def degrade_dataset(dataset: Dataset, order: int, *, allow_above: bool = False) -> Dataset:
    order = check_order(order, allow_above=allow_above)
    if order == 0:
        return dataset
    rounded = np.empty(dataset.values.shape, dtype=np.int32, order="F")
    # column at a time keeps the int64 temporary small
    for j in range(dataset.m):
        rounded[:, j] = round_array(dataset.values[:, j], order)
    return dataset.replace_values(rounded)


def parse_orders(text: str | Iterable[int], *, allow_above: bool = False) -> list[int]:
    """Parse ``"0,1,2,3"`` (or an iterable) into a list of distinct orders."""
    if isinstance(text, str):
        parts = [p.strip() for p in text.split(",") if p.strip()]
        try:
            orders = [int(p) for p in parts]
        except ValueError:
            raise ConfigError(f"invalid rounding order list {text!r}") from None
    else:
        orders = [int(o) for o in text]
    if not orders:
        raise ConfigError("empty rounding order list")
    out: list[int] = []
    for o in orders:
        check_order(o, allow_above=allow_above)
        if o not in out:
            out.append(o)
    return out
