"""Seeded synthetic load-profile populations.

This is a statistical mimic, not a behaviour model: a shared diurnal shape,
shifted and scaled per household, modulated by season, with multiplicative
log-normal noise, bursty zero readings and bursty missing data.

Randomness: households are generated in fixed blocks of ``BLOCK``; block
``b`` draws from ``PCG64(SeedSequence(seed, spawn_key=(b,)))``. The block
size is part of the output contract, so results do not depend on how many
workers generate blocks.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Literal

import numpy as np

from .dataset import DEFAULT_DOMAIN_MAX, Dataset
from .errors import ConfigError

BLOCK = 1024
DAY = 86_400
YEAR = 365.25 * DAY
# 2020-01-15T00:00Z, seasonal peak (mid-winter)
SEASON_PEAK_EPOCH = 1_579_046_400
# 2020-09-01T00:00Z
DEFAULT_START = 1_598_918_400

TARGET_MEAN_W = 725.0


@dataclass(frozen=True)
class SynthConfig:
    n: int = 1_000
    m: int = 336
    step_seconds: int = 1800
    seed: int = 0
    base_profile: tuple[float, ...] | None = None
    scale_mu: float = 6.35
    scale_sigma: float = 0.75
    noise_sigma: float = 0.45
    zero_prob: float = 0.05
    zero_burst_len: float = 8.0
    missing_prob: float = 0.005
    missing_burst_len: float = 4.0
    time_shift_max: int = 4
    seasonal_amplitude: float = 0.25
    start_epoch: int = DEFAULT_START
    domain_max: int = DEFAULT_DOMAIN_MAX
    unit: str = "W"

    def __post_init__(self):
        if self.base_profile is not None:
            object.__setattr__(self, "base_profile", tuple(float(x) for x in self.base_profile))
        self.validate()

    @property
    def period(self) -> int:
        """Number of steps in one diurnal cycle."""
        return DAY // self.step_seconds

    def validate(self) -> None:
        if self.n < 1 or self.m < 1:
            raise ConfigError(f"n and m must be >= 1, got n={self.n}, m={self.m}")
        if self.step_seconds <= 0 or DAY % self.step_seconds:
            raise ConfigError(f"step_seconds must divide one day, got {self.step_seconds}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.base_profile is not None:
            if len(self.base_profile) != self.period:
                raise ConfigError(
                    f"base_profile has {len(self.base_profile)} points; "
                    f"one day at step {self.step_seconds}s needs {self.period}"
                )
            if any(x < 0 or not math.isfinite(x) for x in self.base_profile):
                raise ConfigError("base_profile values must be finite and non-negative")
        for name in ("scale_sigma", "noise_sigma", "seasonal_amplitude"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.seasonal_amplitude > 1:
            raise ConfigError("seasonal_amplitude above 1 would make consumption negative")
        if self.time_shift_max < 0:
            raise ConfigError("time_shift_max must be >= 0")
        for prob, burst in (("zero_prob", "zero_burst_len"), ("missing_prob", "missing_burst_len")):
            p, b = getattr(self, prob), getattr(self, burst)
            if not 0 <= p <= 1:
                raise ConfigError(f"{prob} must be in [0, 1], got {p}")
            if b < 1:
                raise ConfigError(f"{burst} must be >= 1, got {b}")
            if b > 1 and 0 < p < 1 and p / (1 - p) > b:
                raise ConfigError(f"{prob}={p} is unreachable with mean burst length {b}")
        if self.domain_max < 0:
            raise ConfigError("domain_max must be >= 0")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_dict(cls, data: dict) -> "SynthConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path: Path | str) -> "SynthConfig":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(data)


def default_profile(period: int) -> np.ndarray:
    """Two-peak diurnal shape (noon and evening, small morning bump), mean 1."""
    hours = (np.arange(period) + 0.5) * 24 / period

    def bump(centre, width):
        d = np.abs(hours - centre)
        d = np.minimum(d, 24 - d)
        return np.exp(-0.5 * (d / width) ** 2)

    shape = 0.45 + 0.35 * bump(7.5, 1.2) + 0.9 * bump(12.5, 1.5) + 1.3 * bump(19.5, 2.0)
    return shape / shape.mean()


def seasonal_factor(epoch: np.ndarray, amplitude: float) -> np.ndarray:
    return 1.0 + amplitude * np.cos(2 * np.pi * (np.asarray(epoch) - SEASON_PEAK_EPOCH) / YEAR)


def timestamps(config: SynthConfig) -> np.ndarray:
    return config.start_epoch + config.step_seconds * np.arange(config.m, dtype=np.int64)


def _bursty_mask(rng: np.random.Generator, shape: tuple[int, int], prob: float, burst: float) -> np.ndarray:
    """Two-state Markov chain with stationary share ``prob`` and mean run ``burst``."""
    if prob <= 0:
        return np.zeros(shape, dtype=bool)
    if prob >= 1:
        return np.ones(shape, dtype=bool)
    draws = rng.random(shape)
    if burst == 1:
        return draws < prob
    stay = 1 - 1 / burst
    enter = prob * (1 - stay) / (1 - prob)
    out = np.empty(shape, dtype=bool)
    state = draws[:, 0] < prob
    out[:, 0] = state
    for j in range(1, shape[1]):
        state = np.where(state, draws[:, j] < stay, draws[:, j] < enter)
        out[:, j] = state
    return out


def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))


def _generate_block(config: SynthConfig, block: int, profile: np.ndarray, season: np.ndarray, phase: np.ndarray):
    lo = block * BLOCK
    b = min(BLOCK, config.n - lo)
    rng = _block_rng(config.seed, block)
    p = len(profile)

    scale = np.exp(config.scale_mu + config.scale_sigma * rng.standard_normal(b))
    shift = rng.integers(-config.time_shift_max, config.time_shift_max + 1, size=b)
    noise = np.exp(
        config.noise_sigma * rng.standard_normal((b, config.m)) - config.noise_sigma**2 / 2
    )
    shape = profile[(phase[None, :] + shift[:, None]) % p]
    level = shape * (scale[:, None] * season[None, :]) * noise
    values = np.clip(np.rint(level), 0, config.domain_max).astype(np.int32)

    values[_bursty_mask(rng, (b, config.m), config.zero_prob, config.zero_burst_len)] = 0
    missing = _bursty_mask(rng, (b, config.m), config.missing_prob, config.missing_burst_len)
    return lo, values, ~missing


def generate(config: SynthConfig, *, workers: int = 1) -> Dataset:
    config.validate()
    ts = timestamps(config)
    profile = np.asarray(config.base_profile) if config.base_profile is not None else default_profile(config.period)
    season = seasonal_factor(ts, config.seasonal_amplitude)
    phase = (ts % DAY) // config.step_seconds

    values = np.empty((config.n, config.m), dtype=np.int32, order="F")
    present = np.empty((config.n, config.m), dtype=bool, order="F")
    n_blocks = -(-config.n // BLOCK)

    def fill(block):
        lo, v, pr = _generate_block(config, block, profile, season, phase)
        values[lo : lo + len(v)] = v
        present[lo : lo + len(v)] = pr

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, range(n_blocks)))
    else:
        for block in range(n_blocks):
            fill(block)

    width = len(str(config.n - 1))
    ids = tuple(f"h{i:0{width}d}" for i in range(config.n))
    return Dataset(
        ids,
        ts,
        values,
        present,
        step_seconds=config.step_seconds,
        unit=config.unit,
        domain_max=config.domain_max,
    )


PRESET_SIZES = {"small": 1_000, "medium": 100_000, "large": 1_000_000}


def calibrated_scale_mu(config: SynthConfig, target_mean: float = TARGET_MEAN_W) -> float:
    """Log-scale location that puts the expected population mean at ``target_mean``."""
    profile = np.asarray(config.base_profile) if config.base_profile is not None else default_profile(config.period)
    ts = timestamps(config)
    shape = profile[(ts % DAY) // config.step_seconds].mean()
    season = seasonal_factor(ts, config.seasonal_amplitude).mean()
    level = target_mean / ((1 - config.zero_prob) * shape * season)
    return float(math.log(level) - config.scale_sigma**2 / 2)


def default_calibrated_config(scale: Literal["small", "medium", "large"] = "small", **overrides) -> SynthConfig:
    """Preset whose population targets mean 725 W, std ~950 W, 5% zeros."""
    if scale not in PRESET_SIZES:
        raise ConfigError(f"unknown preset {scale!r}; choose from {sorted(PRESET_SIZES)}")
    config = replace(SynthConfig(n=PRESET_SIZES[scale]), **overrides)
    if "scale_mu" not in overrides:
        config = replace(config, scale_mu=calibrated_scale_mu(config))
    return config
