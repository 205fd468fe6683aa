"""Re-identification risk of time-series populations.

Measures how many series are singled out by ``k`` consecutive measures
(uniqueness), how diverse those windows are (entropy), and how both react
to rounding.
"""

__version__ = "0.1.0"

from .dataset import (  # noqa: E402
    Dataset,
    ParseOptions,
    WindowSet,
    WindowSpec,
    load_dataset,
    load_long_csv,
    subsample,
    window,
    write_long_csv,
)
from .degrade import degrade_dataset, round_order  # noqa: E402
from .engine import (  # noqa: E402
    EntropyResult,
    MatchResult,
    UniquenessResult,
    brute_force_uniqueness,
    compute_curves,
    entropy_at,
    entropy_curve,
    match_query,
    uniqueness_at,
    uniqueness_curve,
)
from .stats import (  # noqa: E402
    AuxSeries,
    GroupedSeries,
    align,
    group_by_time,
    pearson,
    population_mean_series,
    summary,
)
from .synth import SynthConfig, default_calibrated_config, generate  # noqa: E402

__all__ = [
    "AuxSeries",
    "Dataset",
    "EntropyResult",
    "GroupedSeries",
    "MatchResult",
    "ParseOptions",
    "SynthConfig",
    "UniquenessResult",
    "WindowSet",
    "WindowSpec",
    "align",
    "brute_force_uniqueness",
    "compute_curves",
    "default_calibrated_config",
    "degrade_dataset",
    "entropy_at",
    "entropy_curve",
    "generate",
    "group_by_time",
    "load_dataset",
    "load_long_csv",
    "match_query",
    "pearson",
    "population_mean_series",
    "round_order",
    "subsample",
    "summary",
    "uniqueness_at",
    "uniqueness_curve",
    "window",
    "write_long_csv",
]
