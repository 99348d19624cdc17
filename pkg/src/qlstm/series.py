"""Univariate labeled time series: loading, validation, normalization, synthesis.

A :class:`TimeSeries` is the universal input of the package. Values are stored
as immutable float64 arrays; anomaly labels are optional. All operations here
are pure and return new series objects.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from .errors import ConfigError, DataError

# Indices earlier than this fraction of the series are treated as the training
# prefix by default; synthetic anomaly injection never touches them.
DEFAULT_TRAIN_FRAC = 0.4

_ROLLING_MEDIAN_HALF_WIDTH = 12


@dataclass(frozen=True)
class NormalizationParams:
    """Affine min-max map fitted on (a prefix of) a series; max > min."""

    min: float
    max: float

    def __post_init__(self):
        if not (math.isfinite(self.min) and math.isfinite(self.max)):
            raise DataError("normalization bounds must be finite")
        if not self.max > self.min:
            raise DataError("constant series: max == min, cannot normalize")


@dataclass(frozen=True)
class SeriesPoint:
    timestamp: float
    value: float
    is_anomaly: bool | None = None


@dataclass(frozen=True)
class CsvSchema:
    """Column mapping for CSV ingestion.

    Covers both the two-column (timestamp,value) and the three-column
    (timestamp,value,is_anomaly) layouts; if ``label`` is missing from the
    file header the series is loaded unlabeled.
    """

    timestamp: str = "timestamp"
    value: str = "value"
    label: str = "is_anomaly"


@dataclass(frozen=True)
class TimeSeries:
    """Ordered (timestamp, value, optional label) triples.

    Invariants: timestamps strictly increasing, all values finite,
    length >= 1. Arrays are frozen after construction and safe to share
    across threads.
    """

    timestamps: np.ndarray
    values: np.ndarray
    labels: np.ndarray | None = None
    name: str = "series"
    normalization: NormalizationParams | None = None

    def __post_init__(self):
        ts = np.asarray(self.timestamps, dtype=np.float64)
        vals = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "values", vals)
        if ts.ndim != 1 or vals.ndim != 1 or ts.shape != vals.shape:
            raise DataError("timestamps and values must be 1-d arrays of equal length")
        if len(vals) < 1:
            raise DataError("series must contain at least one point")
        if not np.all(np.isfinite(vals)):
            raise DataError("series contains non-finite values")
        if len(ts) > 1 and not np.all(np.diff(ts) > 0):
            bad = int(np.argmax(~(np.diff(ts) > 0))) + 1
            raise DataError(f"non-monotonic at row {bad + 1}")
        if self.labels is not None:
            lab = np.asarray(self.labels, dtype=bool)
            if lab.shape != vals.shape:
                raise DataError("labels must match series length")
            object.__setattr__(self, "labels", lab)
            lab.flags.writeable = False
        ts.flags.writeable = False
        vals.flags.writeable = False

    def __len__(self):
        return len(self.values)

    def point(self, i: int) -> SeriesPoint:
        label = None if self.labels is None else bool(self.labels[i])
        return SeriesPoint(float(self.timestamps[i]), float(self.values[i]), label)

    @property
    def points(self) -> list[SeriesPoint]:
        return [self.point(i) for i in range(len(self))]

    def anomaly_count(self) -> int:
        return 0 if self.labels is None else int(self.labels.sum())

    def with_values(self, values, normalization=None) -> "TimeSeries":
        return TimeSeries(self.timestamps, values, self.labels, self.name, normalization)

    def without_labels(self) -> "TimeSeries":
        return TimeSeries(self.timestamps, self.values, None, self.name, self.normalization)


def _parse_timestamp(cell: str, row: int) -> float:
    try:
        return float(cell)
    except ValueError:
        pass
    try:
        dt = datetime.fromisoformat(cell.strip())
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        return dt.timestamp()
    except ValueError:
        raise DataError(f"unparseable timestamp {cell!r} at row {row}") from None


def load_csv(path, schema: CsvSchema = CsvSchema(), name: str | None = None) -> TimeSeries:
    """Load a series from a UTF-8 CSV file with a header row.

    Timestamps may be numeric or ISO datetimes; the label column is optional
    (absent means every label is unset). Rows are 1-indexed in error messages,
    counting from the first data row.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        for col in (schema.timestamp, schema.value):
            if col not in header:
                raise DataError(f"{path}: missing column {col!r}")
        t_idx = header.index(schema.timestamp)
        v_idx = header.index(schema.value)
        l_idx = header.index(schema.label) if schema.label in header else None

        timestamps, values, labels = [], [], []
        for row_no, row in enumerate(reader, start=1):
            if not row:
                continue
            timestamps.append(_parse_timestamp(row[t_idx], row_no))
            try:
                values.append(float(row[v_idx]))
            except ValueError:
                raise DataError(
                    f"non-numeric value {row[v_idx]!r} at row {row_no}"
                ) from None
            if l_idx is not None:
                labels.append(row[l_idx].strip() not in ("", "0", "0.0", "false", "False"))

    if not values:
        raise DataError(f"{path}: no data rows")
    ts = np.asarray(timestamps)
    if len(ts) > 1:
        diffs = np.diff(ts)
        if not np.all(diffs > 0):
            bad = int(np.argmax(~(diffs > 0))) + 2
            raise DataError(f"non-monotonic at row {bad}")
    return TimeSeries(
        ts,
        np.asarray(values),
        np.asarray(labels, dtype=bool) if l_idx is not None else None,
        name=name or str(path),
    )


def write_csv(series: TimeSeries, path, schema: CsvSchema = CsvSchema(),
              meta: dict | None = None) -> None:
    """Write a series as CSV; label column emitted as 0/1 when present.

    ``meta`` entries are written as leading ``# key=value`` comment lines
    (sorted by key) so artifacts can embed their generating configuration.
    """
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for key in sorted(meta) if meta else ():
            fh.write(f"# {key}={meta[key]}\n")
        cols = [schema.timestamp, schema.value]
        if series.labels is not None:
            cols.append(schema.label)
        writer = csv.writer(fh)
        writer.writerow(cols)
        for i in range(len(series)):
            t = series.timestamps[i]
            row = [repr(int(t)) if float(t).is_integer() else f"{t:.17g}",
                   f"{series.values[i]:.17g}"]
            if series.labels is not None:
                row.append("1" if series.labels[i] else "0")
            writer.writerow(row)


def normalize(series: TimeSeries, fit_end: int | None = None) -> TimeSeries:
    """Map values affinely to [0,1] using min/max fitted on ``values[:fit_end]``.

    With the default ``fit_end=None`` the whole series defines the map (all
    outputs land in [0,1]); detectors fit on the training prefix only, in
    which case later values may exceed the unit interval. Labels and
    timestamps are preserved and the parameters recorded for de-normalization.
    """
    if len(series) < 2:
        raise DataError("normalization needs at least 2 points")
    fit = series.values[: fit_end if fit_end is not None else len(series)]
    if len(fit) < 2:
        raise DataError("normalization prefix too short")
    lo, hi = float(np.min(fit)), float(np.max(fit))
    params = NormalizationParams(lo, hi)
    scaled = (series.values - lo) / (hi - lo)
    return series.with_values(scaled, normalization=params)


def denormalize(series: TimeSeries) -> TimeSeries:
    """Invert :func:`normalize`; identity within float round-off."""
    params = series.normalization
    if params is None:
        raise DataError("series carries no normalization parameters")
    restored = series.values * (params.max - params.min) + params.min
    return series.with_values(restored, normalization=None)


def _rolling_median(values: np.ndarray, index: int) -> float:
    lo = max(0, index - _ROLLING_MEDIAN_HALF_WIDTH)
    hi = min(len(values), index + _ROLLING_MEDIAN_HALF_WIDTH + 1)
    return float(np.median(values[lo:hi]))


def inject_anomalies(series: TimeSeries, count: int, magnitude: float, seed: int,
                     train_frac: float = DEFAULT_TRAIN_FRAC) -> TimeSeries:
    """Replace ``count`` seeded-random points with spikes and label them.

    Each chosen point (never inside the training prefix, never already
    labeled) becomes ``local rolling median +/- magnitude * scale`` with a
    seeded random sign, where ``scale`` is the global standard deviation of
    the pre-injection values, floored at ``max(0.1*|median|, 1e-3)`` so
    constant series still produce visible spikes. Deterministic per seed.
    """
    n = len(series)
    if count >= n:
        raise DataError(f"count {count} >= series length {n}")
    if count > 0 and magnitude <= 0:
        raise ConfigError("magnitude must be positive")
    if count >= 0.05 * n and count > 0:
        raise DataError(f"count {count} exceeds 5% of series length {n}")
    if count == 0:
        return series

    values = series.values.copy()
    labels = series.labels.copy() if series.labels is not None else np.zeros(n, dtype=bool)
    start = int(n * train_frac)
    candidates = np.flatnonzero(~labels[start:]) + start
    if len(candidates) < count:
        raise DataError("not enough unlabeled points outside the training prefix")

    sigma = float(np.std(values))
    scale = max(sigma, 0.1 * abs(float(np.median(values))), 1e-3)
    delta = magnitude * scale

    rng = np.random.default_rng(seed)
    chosen = rng.choice(candidates, size=count, replace=False)
    signs = rng.choice(np.array([-1.0, 1.0]), size=count)
    for idx, sign in zip(chosen, signs):
        values[idx] = _rolling_median(series.values, int(idx)) + sign * delta
        labels[idx] = True
    return TimeSeries(series.timestamps, values, labels, series.name, series.normalization)


def generate_synthetic(kind: str, length: int, seed: int, *,
                       period: int = 100, amplitude: float = 1.0,
                       noise_std: float = 0.0, quantize_step: float = 0.0,
                       amplitude_decay: float = 0.0,
                       trend_slope: float = 0.02, name: str | None = None) -> TimeSeries:
    """Deterministic unlabeled test series of the given kind.

    Kinds: ``sine`` (optionally damped, noisy, and sensor-quantized),
    ``trend+noise`` (linear ramp plus noise), ``bimodal`` (two noisy levels
    with seeded regime switches). ``amplitude_decay`` shrinks the sine
    envelope linearly to ``(1 - decay)`` of its initial amplitude by the end
    of the series, mimicking a damped oscillation.
    """
    if length < 100:
        raise ConfigError("length must be >= 100")
    if not 0.0 <= amplitude_decay < 1.0:
        raise ConfigError("amplitude_decay must lie in [0, 1)")
    rng = np.random.default_rng(seed)
    idx = np.arange(length)
    kind_key = kind.replace("_", "+")
    if kind_key == "sine":
        envelope = amplitude * (1.0 - amplitude_decay * idx / length)
        vals = envelope * np.sin(2.0 * np.pi * idx / period)
        if noise_std > 0:
            vals = vals + rng.normal(0.0, noise_std, size=length)
        if quantize_step > 0:
            vals = np.round(vals / quantize_step) * quantize_step
    elif kind_key == "trend+noise":
        sigma = noise_std if noise_std > 0 else 0.1
        vals = trend_slope * idx + rng.normal(0.0, sigma, size=length)
    elif kind_key == "bimodal":
        sigma = noise_std if noise_std > 0 else 0.1
        n_blocks = length // 20 + 1
        levels = rng.choice(np.array([-amplitude, amplitude]), size=n_blocks)
        vals = np.repeat(levels, 20)[:length] + rng.normal(0.0, sigma, size=length)
    else:
        raise ConfigError(f"unknown synthetic kind {kind!r}")
    return TimeSeries(idx.astype(np.float64), vals, None,
                      name=name or f"{kind_key}-{length}-{seed}")
