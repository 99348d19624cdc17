"""Sliding periods, disjoint sub-windows, and quantile training pairs.

A period of ``t`` consecutive points starting at index ``k`` is split into
``w`` disjoint windows of ``m = t / w`` points each. For every start position
the inputs are the per-window sample quantiles and the label is the quantile
of the period shifted one position forward. A series of length ``n`` yields
``n - t`` pairs: the final period has no shifted successor to label it with.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .series import TimeSeries

# Table of per-dataset (window_len m, period t) defaults for the public
# benchmark files this package can ingest; synthetic runs default to
# WindowConfig(period_len=9, window_count=3).
DATASET_WINDOW_DEFAULTS = {
    "aws_1": (84, 168),
    "aws_2": (38, 152),
    "aws_3": (38, 152),
    "yahoo_1": (20, 60),
    "yahoo_2": (30, 90),
    "yahoo_3": (10, 120),
    "yahoo_4": (105, 210),
    "yahoo_5": (24, 72),
    "yahoo_6": (74, 148),
    "yahoo_7": (125, 250),
    "yahoo_8": (116, 232),
    "yahoo_9": (30, 90),
    "machine_temperature": (38, 114),
}


@dataclass(frozen=True)
class WindowConfig:
    """Period length t and window count w with m = t / w exact."""

    period_len: int
    window_count: int

    def __post_init__(self):
        t, w = self.period_len, self.window_count
        if not (isinstance(t, int) and isinstance(w, int)):
            raise ConfigError("period_len and window_count must be integers")
        if w < 1 or t < w:
            raise ConfigError(f"need period_len >= window_count >= 1, got t={t} w={w}")
        if t % w != 0:
            raise ConfigError(f"period_len {t} not divisible by window_count {w}")

    @property
    def window_len(self) -> int:
        return self.period_len // self.window_count


def window_config_for_dataset(dataset: str) -> WindowConfig:
    key = dataset.lower()
    if key not in DATASET_WINDOW_DEFAULTS:
        raise ConfigError(f"no window defaults for dataset {dataset!r}")
    m, t = DATASET_WINDOW_DEFAULTS[key]
    return WindowConfig(period_len=t, window_count=t // m)


@dataclass(frozen=True)
class QuantileTrainingSet:
    """Supervised pairs: w window-quantiles -> next-period quantile.

    ``origin_indices[k]`` is the 0-based start position of the period the
    k-th pair was built from.
    """

    tau: float
    inputs: np.ndarray          # [N, w]
    labels: np.ndarray          # [N]
    origin_indices: np.ndarray  # [N]

    def __post_init__(self):
        if not (len(self.inputs) == len(self.labels) == len(self.origin_indices)):
            raise DataError("training set arrays must have equal length")
        if not (np.all(np.isfinite(self.inputs)) and np.all(np.isfinite(self.labels))):
            raise DataError("training set contains non-finite entries")

    def __len__(self):
        return len(self.labels)


def _check_quantile_args(data: np.ndarray, tau: float) -> None:
    if data.size == 0:
        raise DataError("empty data")
    if not np.all(np.isfinite(data)):
        raise DataError("non-finite element in quantile input")
    if not 0.0 <= tau <= 1.0:
        raise ConfigError(f"tau must be in [0,1], got {tau}")


def _quantile_of_sorted_rows(sorted_rows: np.ndarray, tau: float) -> np.ndarray:
    """Linear-interpolation order statistic along axis 1 of pre-sorted rows."""
    n = sorted_rows.shape[1]
    h = (n - 1) * tau
    lo = int(math.floor(h))
    hi = min(lo + 1, n - 1)
    frac = h - lo
    return sorted_rows[:, lo] * (1.0 - frac) + sorted_rows[:, hi] * frac


def sample_quantile(data, tau: float) -> float:
    """Sample quantile by linear interpolation between order statistics.

    With sorted data s_0..s_{N-1} and h = (N-1)*tau the result is
    s_floor(h) + (h - floor(h)) * (s_floor(h)+1 - s_floor(h)); tau 0 and 1
    return the minimum and maximum exactly.
    """
    arr = np.asarray(data, dtype=np.float64).ravel()
    _check_quantile_args(arr, tau)
    return float(_quantile_of_sorted_rows(np.sort(arr)[None, :], tau)[0])


def _window_quantiles(values: np.ndarray, cfg: WindowConfig, tau: float):
    """Quantiles of every sub-window and every period, for all start offsets."""
    n = len(values)
    t, m = cfg.period_len, cfg.window_len
    sub = np.sort(np.lib.stride_tricks.sliding_window_view(values, m), axis=1)
    sub_q = _quantile_of_sorted_rows(sub, tau)        # quantile of m points from i
    per = np.sort(np.lib.stride_tricks.sliding_window_view(values, t), axis=1)
    per_q = _quantile_of_sorted_rows(per, tau)        # quantile of t points from i
    return sub_q, per_q


def _require_pairs(series: TimeSeries, cfg: WindowConfig) -> int:
    n = len(series)
    if n < cfg.period_len + 1:
        raise DataError(
            f"series of length {n} shorter than period_len+1 = {cfg.period_len + 1}"
        )
    return n - cfg.period_len


def build_training_set(series: TimeSeries, cfg: WindowConfig, tau: float) -> QuantileTrainingSet:
    """Training pairs over every period start k = 0..n-t-1.

    Input vector k holds the tau-quantiles of the w disjoint windows of the
    period starting at k; the label is the tau-quantile of the full period
    shifted one position (start k+1).
    """
    if not 0.0 <= tau <= 1.0:
        raise ConfigError(f"tau must be in [0,1], got {tau}")
    n_pairs = _require_pairs(series, cfg)
    t, w, m = cfg.period_len, cfg.window_count, cfg.window_len
    sub_q, per_q = _window_quantiles(series.values, cfg, tau)

    starts = np.arange(n_pairs)
    inputs = np.empty((n_pairs, w))
    for j in range(w):
        inputs[:, j] = sub_q[starts + j * m]
    labels = per_q[starts + 1]
    return QuantileTrainingSet(tau, inputs, labels, starts)


def detection_pairs(series: TimeSeries, cfg: WindowConfig, tau: float):
    """Same inputs as training, paired with the raw next observation.

    Returns ``(inputs [N,w], observed [N], observed_index [N])`` where the
    observed value is the newest point of the shifted period, i.e. the point
    at position k + t for pair k. Anomaly labels are never consulted.
    """
    training = build_training_set(series, cfg, tau)
    observed_index = training.origin_indices + cfg.period_len
    observed = series.values[observed_index]
    return training.inputs, observed, observed_index
