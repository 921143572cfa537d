"""Reproducible artificial noise injection into runtime measurements.

Noise is additive and non-negative: a selected measurement y becomes
y * (1 + intensity * s) with s sampled in [0, 1] from the chosen pattern,
so an intensity of 0.75 means up to +75% runtime. Effort metrics
(basic-block counts, bytes) are never touched.

Every measurement gets its own random stream derived from the global seed
and its (call path, coordinate, repetition) identity, which makes
injection order-independent and lets it commute with repetition
subsetting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import METRIC_TIME, ExperimentSet, MetricSeries
from .errors import ValidationError

PATTERN_NAMES = (
    "none",
    "uniform",
    "truncated_normal",
    "scaled_poisson",
    "scaled_exponential",
)


@dataclass(frozen=True)
class NoisePattern:
    """A noise distribution, parameterized as in the evaluation setup."""

    kind: str
    a: float = 0.0
    b: float = 1.0
    mu: float = 0.0
    sigma: float = 1.0
    lam: float = 1000.0
    scale: float = 1000.0

    def __post_init__(self):
        if self.kind not in PATTERN_NAMES:
            raise ValidationError(f"unknown noise pattern {self.kind!r}")
        if not self.a <= self.b:
            raise ValidationError("pattern bounds require a <= b")


@dataclass(frozen=True)
class NoiseConfig:
    pattern: NoisePattern
    intensity: float
    selection_fraction: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.pattern, str):
            object.__setattr__(self, "pattern", NoisePattern(self.pattern))
        if not (math.isfinite(self.intensity) and self.intensity >= 0):
            raise ValidationError("intensity must be a non-negative fraction")
        if not (0 < self.selection_fraction <= 1):
            raise ValidationError("selection_fraction must be in (0, 1]")
        if self.seed < 0:
            raise ValidationError("seed must be non-negative")


def sample(pattern: NoisePattern, rng: np.random.Generator) -> float:
    """Draw one noise factor in [0, 1]."""
    if pattern.kind == "none":
        return 0.0
    if pattern.kind == "uniform":
        return float(rng.uniform(pattern.a, pattern.b))
    if pattern.kind == "truncated_normal":
        while True:
            s = abs(float(rng.normal(pattern.mu, pattern.sigma)))
            if pattern.a <= s <= pattern.b:
                return s
    if pattern.kind == "scaled_poisson":
        return float(min(max(rng.poisson(pattern.lam) / pattern.scale, 0.0), 1.0))
    if pattern.kind == "scaled_exponential":
        return float(min(max(rng.exponential(1.0 / pattern.lam) * pattern.scale, 0.0), 1.0))
    raise ValidationError(f"unknown noise pattern {pattern.kind!r}")


def inject(exp: ExperimentSet, config: NoiseConfig) -> ExperimentSet:
    """Perturb time measurements; all other series are carried unchanged."""
    if config.intensity == 0 or config.pattern.kind == "none":
        return exp
    callpaths = []
    for cp_idx, (cp, metrics) in enumerate(exp.callpaths):
        new_metrics = {}
        for metric, series in metrics.items():
            if metric != METRIC_TIME:
                new_metrics[metric] = series
                continue
            data = {}
            for coord_idx, coord in enumerate(series.coordinates()):
                reps = []
                for pos, rep_id in enumerate(series.rep_ids):
                    y = series.data[coord][pos]
                    rng = np.random.default_rng(
                        [config.seed, cp_idx, coord_idx, rep_id]
                    )
                    if rng.random() <= config.selection_fraction:
                        s = sample(config.pattern, rng)
                        y = y * (1.0 + config.intensity * s)
                    reps.append(y)
                data[coord] = tuple(reps)
            new_metrics[metric] = MetricSeries(metric, data, series.rep_ids)
        callpaths.append((cp, new_metrics))
    return ExperimentSet(exp.space, tuple(callpaths))
