"""Latency distribution estimation and tail quality under inference-time thresholds."""

from ._tailq import (
    DEFAULT_BASELINE_COUNT,
    ConfigError,
    DataError,
    DensityModel,
    EstimationResult,
    EstimatorConfig,
    InstanceMeta,
    TailQualityResult,
    TimingStore,
    budget_ratio,
    delta,
    estimate_replay,
    estimate_synthetic,
    eval_density,
    fit_kde,
    generalization,
    jsd,
    jsd_grid,
    ols_fit,
    quality_threshold_sweep,
    resolve_threshold,
    rjsd,
    silverman_bandwidth,
    tail_quality,
    time_subprocess,
)

__all__ = [
    "DEFAULT_BASELINE_COUNT",
    "ConfigError",
    "DataError",
    "DensityModel",
    "EstimationResult",
    "EstimatorConfig",
    "InstanceMeta",
    "TailQualityResult",
    "TimingStore",
    "budget_ratio",
    "delta",
    "estimate_replay",
    "estimate_synthetic",
    "eval_density",
    "fit_kde",
    "generalization",
    "jsd",
    "jsd_grid",
    "ols_fit",
    "quality_threshold_sweep",
    "resolve_threshold",
    "rjsd",
    "silverman_bandwidth",
    "tail_quality",
    "time_subprocess",
]
