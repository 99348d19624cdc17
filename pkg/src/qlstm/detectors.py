"""Anomaly decision procedures built on trained quantile forecasters.

Three detectors share one pipeline: normalize on the training prefix, build
per-tau quantile training pairs from the prefix (skipping pairs whose span
touches a labeled anomaly), train one forecaster per tau, then emit one
verdict per detection pair over the whole series.

* ``quantile``: flag observations strictly outside the forecast
  (q_low, q_high) band.
* ``iqr``: flag outside median +/- multiplier * (forecast q75 - q25).
* ``median``: threshold the observed-minus-forecast-median stream at
  mu_p +/- w * sigma_p per consecutive block of one period length.

Labels are never read during fit (beyond exclusion of labeled training
spans) or detect; they exist for evaluation only.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DataError
from .model import LstmModel, init_model
from .series import DEFAULT_TRAIN_FRAC, NormalizationParams, TimeSeries
from .training import TrainConfig, predict_batch, train
from .windows import QuantileTrainingSet, WindowConfig, build_training_set, detection_pairs
from .activations import PARAM_ELLIOT, Activation

KIND_QUANTILE = "quantile"
KIND_IQR = "iqr"
KIND_MEDIAN = "median"
KINDS = (KIND_QUANTILE, KIND_IQR, KIND_MEDIAN)

MIN_TRAINING_PAIRS = 10
_ZERO_BAND = 1e-12
# Numerical guard on the strict band inequalities: deviations at or below
# this (in normalized units) are float round-off, not exceedances. Keeps a
# constant series from flagging everything once predictions have converged
# to within solver precision of the constant.
BAND_TOLERANCE = 1e-6


@dataclass(frozen=True)
class DetectorConfig:
    kind: str = KIND_QUANTILE
    q_low: float = 0.1
    q_high: float = 0.9
    iqr_multiplier: float = 1.5
    median_w: float = 2.0
    window: WindowConfig = field(default_factory=lambda: WindowConfig(9, 3))
    train_frac: float = DEFAULT_TRAIN_FRAC
    hidden_size: int = 16
    depth: int = 1
    activation: str = PARAM_ELLIOT
    alpha0: float = 1.5

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown detector kind {self.kind!r}")
        if not (0.0 < self.q_low < 0.5):
            raise ConfigError(f"q_low must lie in (0, 0.5), got {self.q_low}")
        if not (0.5 < self.q_high < 1.0):
            raise ConfigError(f"q_high must lie in (0.5, 1), got {self.q_high}")
        if self.iqr_multiplier <= 0:
            raise ConfigError("iqr_multiplier must be positive")
        if self.median_w <= 0:
            raise ConfigError("median_w must be positive")
        if not (0.0 < self.train_frac <= 1.0):
            raise ConfigError("train_frac must lie in (0, 1]")

    def taus(self) -> tuple[float, ...]:
        if self.kind == KIND_QUANTILE:
            return (self.q_low, self.q_high)
        if self.kind == KIND_IQR:
            return (0.25, 0.5, 0.75)
        return (0.5,)


@dataclass
class DetectorVerdict:
    index: int
    observed: float
    predicted_low: float | None
    predicted_high: float | None
    predicted_median: float | None
    score: float
    is_anomaly: bool
    rule: str


@dataclass(frozen=True)
class MedianThresholds:
    """Per-block statistics of the difference stream: upper = mu + w*sigma."""

    block_index: int
    mu: float
    sigma: float
    upper: float
    lower: float


@dataclass
class FittedDetector:
    config: DetectorConfig
    train_config: TrainConfig
    models: dict[float, LstmModel]
    normalization: NormalizationParams
    train_len: int
    series_name: str

    @property
    def kind(self) -> str:
        return self.config.kind


def _exclude_labeled_pairs(data: QuantileTrainingSet, series: TimeSeries,
                           period_len: int) -> QuantileTrainingSet:
    """Drop pairs whose period or label span covers a labeled anomaly."""
    if series.labels is None or not series.labels.any():
        return data
    bad_points = np.flatnonzero(series.labels)
    keep = np.ones(len(data), dtype=bool)
    for k_pos, start in enumerate(data.origin_indices):
        span_hit = (bad_points >= start) & (bad_points <= start + period_len)
        if span_hit.any():
            keep[k_pos] = False
    return QuantileTrainingSet(data.tau, data.inputs[keep], data.labels[keep],
                               data.origin_indices[keep])


def _model_seed(base_seed: int, tau: float) -> int:
    return base_seed * 1000 + int(round(tau * 100))


def _fit_one(norm_prefix: TimeSeries, cfg: DetectorConfig, train_cfg: TrainConfig,
             tau: float):
    data = build_training_set(norm_prefix, cfg.window, tau)
    data = _exclude_labeled_pairs(data, norm_prefix, cfg.window.period_len)
    if len(data) < MIN_TRAINING_PAIRS:
        raise DataError(
            f"insufficient data: {len(data)} training pairs for tau={tau}, "
            f"need >= {MIN_TRAINING_PAIRS}")
    alpha = cfg.alpha0 if cfg.activation == PARAM_ELLIOT else None
    model = init_model(1, cfg.hidden_size, Activation(cfg.activation, alpha),
                       seed=_model_seed(train_cfg.seed, tau), depth=cfg.depth)
    model, traces = train(model, data, train_cfg)
    return tau, model, traces


def fit_normalization(series: TimeSeries, train_len: int) -> NormalizationParams:
    """Min-max parameters from the training prefix.

    A constant prefix cannot define a min-max map, so it gets a unit-wide
    window centered on the constant; the series then normalizes to 0.5 and a
    forecaster trained on it predicts the constant, flagging nothing.
    """
    prefix = series.values[:train_len]
    lo, hi = float(np.min(prefix)), float(np.max(prefix))
    if hi > lo:
        return NormalizationParams(lo, hi)
    return NormalizationParams(lo - 0.5, hi + 0.5)


def fit_detector(series: TimeSeries, cfg: DetectorConfig, train_cfg: TrainConfig,
                 jobs: int = 1, collect_traces: bool = False):
    """Train the detector's member forecasters on the series' training prefix.

    Member models are independent and may train in parallel (``jobs`` > 1).
    Returns the fitted detector, plus per-tau epoch traces when requested.
    """
    n = len(series)
    train_len = max(2, int(n * cfg.train_frac))
    params = fit_normalization(series, train_len)
    scaled = (series.values - params.min) / (params.max - params.min)
    prefix = TimeSeries(series.timestamps[:train_len], scaled[:train_len],
                        None if series.labels is None else series.labels[:train_len],
                        series.name)
    if train_len < cfg.window.period_len + 1:
        raise DataError(
            f"insufficient data: training prefix of {train_len} points is shorter "
            f"than one period ({cfg.window.period_len}) plus a label")

    taus = cfg.taus()
    results = {}
    traces = {}
    if jobs > 1 and len(taus) > 1:
        with ThreadPoolExecutor(max_workers=min(jobs, 3)) as pool:
            futures = [pool.submit(_fit_one, prefix, cfg, train_cfg, tau) for tau in taus]
            for fut in futures:
                tau, model, tr = fut.result()
                results[tau] = model
                traces[tau] = tr
    else:
        for tau in taus:
            tau, model, tr = _fit_one(prefix, cfg, train_cfg, tau)
            results[tau] = model
            traces[tau] = tr
    fitted = FittedDetector(cfg, train_cfg, results, params,
                            train_len, series.name)
    return (fitted, traces) if collect_traces else fitted


def quantile_band_verdicts(observed, lows, highs, indices, scale=1.0, offset=0.0):
    """Apply the band rule to prediction arrays; returns (verdicts, repairs).

    Crossing bands (low > high) are repaired by swapping and counted. The
    score is the signed distance to the violated bound in band widths.
    ``scale``/``offset`` de-normalize the reported values.
    """
    observed = np.asarray(observed, dtype=np.float64)
    lows = np.asarray(lows, dtype=np.float64).copy()
    highs = np.asarray(highs, dtype=np.float64).copy()
    crossed = lows > highs
    repairs = int(crossed.sum())
    if repairs:
        lows[crossed], highs[crossed] = highs[crossed], lows[crossed]
    widths = np.maximum(highs - lows, _ZERO_BAND)
    verdicts = []
    for k in range(len(observed)):
        x, lo, hi = observed[k], lows[k], highs[k]
        if x > hi + BAND_TOLERANCE:
            rule, score, flag = "above q_high", (x - hi) / widths[k], True
        elif x < lo - BAND_TOLERANCE:
            rule, score, flag = "below q_low", (x - lo) / widths[k], True
        else:
            rule, score, flag = "", 0.0, False
        verdicts.append(DetectorVerdict(
            int(indices[k]), x * scale + offset,
            lo * scale + offset, hi * scale + offset, None,
            float(score), flag, rule))
    return verdicts, repairs


def iqr_band_verdicts(observed, q25, q50, q75, multiplier, indices,
                      scale=1.0, offset=0.0):
    """Median +/- multiplier * IQR band; quartile crossings repaired first."""
    q25 = np.asarray(q25, dtype=np.float64).copy()
    q75 = np.asarray(q75, dtype=np.float64).copy()
    q50 = np.asarray(q50, dtype=np.float64)
    crossed = q25 > q75
    repairs = int(crossed.sum())
    if repairs:
        q25[crossed], q75[crossed] = q75[crossed], q25[crossed]
    iqr = q75 - q25
    lows = q50 - multiplier * iqr
    highs = q50 + multiplier * iqr
    verdicts, band_repairs = quantile_band_verdicts(observed, lows, highs, indices,
                                                    scale, offset)
    for v, med in zip(verdicts, q50):
        v.predicted_median = float(med * scale + offset)
        if v.rule:
            v.rule = v.rule.replace("q_high", "median+iqr").replace("q_low", "median-iqr")
    return verdicts, repairs + band_repairs


def median_difference_verdicts(observed, medians, indices, block_len, w,
                               scale=1.0, offset=0.0):
    """Block-thresholded difference stream d_k = observed_k - predicted median.

    The stream is cut into consecutive blocks of ``block_len``; a trailing
    partial block uses its own statistics. Population sigma; strict
    inequalities, so a sigma of zero flags nothing.
    """
    observed = np.asarray(observed, dtype=np.float64)
    medians = np.asarray(medians, dtype=np.float64)
    diffs = observed - medians
    n = len(diffs)
    verdicts = []
    thresholds = []
    for p, start in enumerate(range(0, n, block_len)):
        block = diffs[start:start + block_len]
        mu = float(np.mean(block))
        sigma = float(np.std(block))
        upper = mu + w * sigma
        lower = mu - w * sigma
        thresholds.append(MedianThresholds(p, mu * scale, sigma * scale,
                                           upper * scale, lower * scale))
        for j, d in enumerate(block):
            k = start + j
            if d > upper:
                rule, flag = "above median band", True
            elif d < lower:
                rule, flag = "below median band", True
            else:
                rule, flag = "", False
            score = 0.0 if sigma == 0.0 else (d - mu) / sigma
            verdicts.append(DetectorVerdict(
                int(indices[k]), observed[k] * scale + offset,
                (medians[k] + lower) * scale + offset,
                (medians[k] + upper) * scale + offset,
                medians[k] * scale + offset,
                float(score), flag, rule))
    return verdicts, thresholds


def detect(fitted: FittedDetector, series: TimeSeries):
    """Emit one verdict per detection pair of the full series.

    Returns (verdicts, extras) where extras carries the band-repair count and,
    for the median detector, the per-block thresholds.
    """
    cfg = fitted.config
    params = fitted.normalization
    scaled = (series.values - params.min) / (params.max - params.min)
    normed = TimeSeries(series.timestamps, scaled, None, series.name)
    scale = params.max - params.min
    offset = params.min

    inputs, observed, indices = detection_pairs(normed, cfg.window, cfg.taus()[0])
    preds = {tau: predict_batch(fitted.models[tau], inputs) for tau in cfg.taus()}

    extras = {"repairs": 0, "thresholds": None}
    if cfg.kind == KIND_QUANTILE:
        verdicts, repairs = quantile_band_verdicts(
            observed, preds[cfg.q_low], preds[cfg.q_high], indices, scale, offset)
        extras["repairs"] = repairs
    elif cfg.kind == KIND_IQR:
        verdicts, repairs = iqr_band_verdicts(
            observed, preds[0.25], preds[0.5], preds[0.75],
            cfg.iqr_multiplier, indices, scale, offset)
        extras["repairs"] = repairs
    else:
        verdicts, thresholds = median_difference_verdicts(
            observed, preds[0.5], indices, cfg.window.period_len,
            cfg.median_w, scale, offset)
        extras["thresholds"] = thresholds
    return verdicts, extras


def fit_quantile_lstm(series: TimeSeries, cfg: DetectorConfig,
                      train_cfg: TrainConfig, jobs: int = 1) -> FittedDetector:
    return fit_detector(series, replace(cfg, kind=KIND_QUANTILE), train_cfg, jobs)


def detect_quantile(fitted: FittedDetector, series: TimeSeries) -> list[DetectorVerdict]:
    return detect(fitted, series)[0]


def fit_iqr_lstm(series: TimeSeries, cfg: DetectorConfig,
                 train_cfg: TrainConfig, jobs: int = 1) -> FittedDetector:
    return fit_detector(series, replace(cfg, kind=KIND_IQR), train_cfg, jobs)


def detect_iqr(fitted: FittedDetector, series: TimeSeries) -> list[DetectorVerdict]:
    return detect(fitted, series)[0]


def fit_median_lstm(series: TimeSeries, cfg: DetectorConfig,
                    train_cfg: TrainConfig, jobs: int = 1) -> FittedDetector:
    return fit_detector(series, replace(cfg, kind=KIND_MEDIAN), train_cfg, jobs)


def detect_median(fitted: FittedDetector, series: TimeSeries):
    verdicts, extras = detect(fitted, series)
    return verdicts, extras["thresholds"]


VERDICT_COLUMNS = ("index", "observed", "predicted_low", "predicted_high",
                   "predicted_median", "score", "is_anomaly", "rule")


def verdicts_to_csv(verdicts, path, meta: dict | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for key in sorted(meta) if meta else ():
            fh.write(f"# {key}={meta[key]}\n")
        writer = csv.writer(fh)
        writer.writerow(VERDICT_COLUMNS)
        for v in verdicts:
            writer.writerow([
                v.index, f"{v.observed:.17g}",
                "" if v.predicted_low is None else f"{v.predicted_low:.17g}",
                "" if v.predicted_high is None else f"{v.predicted_high:.17g}",
                "" if v.predicted_median is None else f"{v.predicted_median:.17g}",
                f"{v.score:.17g}", int(v.is_anomaly), v.rule])


def verdicts_from_csv(path) -> list[DetectorVerdict]:
    verdicts = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(line for line in fh if not line.startswith("#"))
        for row in reader:
            verdicts.append(DetectorVerdict(
                int(row["index"]), float(row["observed"]),
                float(row["predicted_low"]) if row["predicted_low"] else None,
                float(row["predicted_high"]) if row["predicted_high"] else None,
                float(row["predicted_median"]) if row["predicted_median"] else None,
                float(row["score"]), row["is_anomaly"] == "1", row["rule"]))
    return verdicts


def summary_json(verdicts, extras, config_echo: dict) -> str:
    flagged = sum(v.is_anomaly for v in verdicts)
    payload = {
        "config": {k: config_echo[k] for k in sorted(config_echo)},
        "evaluated_points": len(verdicts),
        "flagged": flagged,
        "band_repairs": extras.get("repairs", 0),
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"
