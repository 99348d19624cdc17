"""Scoring, probability bounds, threshold sweeps, false alarms, ablation.

Precision and recall are computed point-wise against exact indices by
default; a window-tolerant match (+/- k positions) exists behind a flag but
is off everywhere. The probability-bound report counts labeled anomalies
beyond empirical sample quantiles of the series under two normalizations
(per series length and per anomaly count), since published figures mix both.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .activations import ELLIOT, PARAM_ELLIOT
from .detectors import DetectorConfig, DetectorVerdict, detect, fit_detector
from .errors import ConfigError, DataError
from .series import TimeSeries
from .training import TrainConfig
from .windows import sample_quantile

HIGH_THRESHOLDS = (0.75, 0.9, 0.95)
LOW_THRESHOLDS = (0.25, 0.10)


@dataclass(frozen=True)
class EvalReport:
    true_positives: int
    false_positives: int
    false_negatives: int
    true_negatives: int
    precision: float
    recall: float
    dataset: str = ""
    detector: str = ""

    @property
    def evaluated_points(self) -> int:
        return (self.true_positives + self.false_positives
                + self.false_negatives + self.true_negatives)


def _ratio(num: int, den: int) -> float:
    return 0.0 if den == 0 else num / den


def make_report(tp, fp, fn, tn, dataset="", detector="") -> EvalReport:
    return EvalReport(tp, fp, fn, tn, _ratio(tp, tp + fp), _ratio(tp, tp + fn),
                      dataset, detector)


def score(verdicts: list[DetectorVerdict], truth: TimeSeries,
          match: str = "exact_index", tolerance: int = 0,
          detector: str = "") -> EvalReport:
    """Point-wise confusion counts of verdicts against labeled truth.

    Only indices covered by verdicts are evaluated; the truth series must be
    labeled. ``match='window'`` credits a flag within +/- ``tolerance``
    positions of a true anomaly (off by default; published evaluations use
    exact indices).
    """
    if truth.labels is None:
        raise DataError("unlabeled truth span: truth series carries no labels")
    if match not in ("exact_index", "window"):
        raise ConfigError(f"unknown match policy {match!r}")

    if match == "exact_index" or tolerance == 0:
        tp = fp = fn = tn = 0
        for v in verdicts:
            actual = bool(truth.labels[v.index])
            if v.is_anomaly and actual:
                tp += 1
            elif v.is_anomaly:
                fp += 1
            elif actual:
                fn += 1
            else:
                tn += 1
        return make_report(tp, fp, fn, tn, truth.name, detector)

    flagged = np.array([v.index for v in verdicts if v.is_anomaly], dtype=int)
    covered = np.array([v.index for v in verdicts], dtype=int)
    anomalies = np.intersect1d(np.flatnonzero(truth.labels), covered)
    tp_flags = np.zeros(len(flagged), dtype=bool)
    detected = np.zeros(len(anomalies), dtype=bool)
    for fi, fidx in enumerate(flagged):
        hits = np.abs(anomalies - fidx) <= tolerance
        if hits.any():
            tp_flags[fi] = True
            detected |= hits
    tp = int(tp_flags.sum())
    fp = int(len(flagged) - tp)
    fn = int(len(anomalies) - detected.sum())
    tn = len(covered) - tp - fp - fn
    return make_report(tp, fp, fn, tn, truth.name, detector)


@dataclass(frozen=True)
class ProbabilityBoundRow:
    """Empirical mass of labeled anomalies beyond each quantile threshold.

    ``p_anomaly`` is the two-sided total for the configured (high, low) pair;
    the two point sets are disjoint so the sum is exact.
    """

    dataset: str
    normalization: str            # "series" (per n) or "anomalies" (per count)
    p_above: dict[float, float]
    p_below: dict[float, float]
    pair: tuple[float, float]
    p_anomaly: float


def probability_bound(series: TimeSeries,
                      high_thresholds=HIGH_THRESHOLDS,
                      low_thresholds=LOW_THRESHOLDS,
                      pair: tuple[float, float] = (0.9, 0.1),
                      normalization: str = "series") -> ProbabilityBoundRow:
    """Fractions of points that are labeled anomalies beyond each threshold."""
    if series.labels is None or not series.labels.any():
        raise DataError("no labels: probability bound needs a labeled series")
    if normalization not in ("series", "anomalies"):
        raise ConfigError(f"unknown normalization {normalization!r}")
    values = series.values
    labels = series.labels
    denom = len(series) if normalization == "series" else int(labels.sum())

    def above(tau):
        q = sample_quantile(values, tau)
        return int(np.sum(labels & (values > q))) / denom

    def below(tau):
        q = sample_quantile(values, tau)
        return int(np.sum(labels & (values < q))) / denom

    p_above = {tau: above(tau) for tau in sorted(set(high_thresholds) | {pair[0]})}
    p_below = {tau: below(tau) for tau in sorted(set(low_thresholds) | {pair[1]})}
    if pair[1] >= pair[0]:
        raise ConfigError("pair must be (high, low) with low < high")
    return ProbabilityBoundRow(series.name, normalization, p_above, p_below,
                               pair, p_above[pair[0]] + p_below[pair[1]])


def run_detector(series: TimeSeries, cfg: DetectorConfig, train_cfg: TrainConfig,
                 jobs: int = 1):
    """Fit on the training prefix, detect over the full series.

    Returns (verdicts, extras, fitted); evaluation against labels should be
    restricted to verdicts with ``index >= fitted.train_len``.
    """
    fitted = fit_detector(series, cfg, train_cfg, jobs=jobs)
    verdicts, extras = detect(fitted, series)
    return verdicts, extras, fitted


def evaluate_detector(series: TimeSeries, cfg: DetectorConfig, train_cfg: TrainConfig,
                      jobs: int = 1, detector_name: str | None = None) -> EvalReport:
    """End-to-end fit/detect/score on the post-prefix remainder."""
    verdicts, _, fitted = run_detector(series, cfg, train_cfg, jobs=jobs)
    tail = [v for v in verdicts if v.index >= fitted.train_len]
    return score(tail, series, detector=detector_name or cfg.kind)


def _pair_as_taus(high: float, low: float) -> tuple[float, float]:
    # sweeps accept raw percentile pairs verbatim: "99.25 and 0.75" means
    # quantiles (0.9925, 0.0075); a pair is percentile-scaled as a unit
    if high > 1.0:
        return high / 100.0, low / 100.0
    return high, low


@dataclass(frozen=True)
class SweepCell:
    q_low: float
    q_high: float
    report: EvalReport


def threshold_sweep(series: TimeSeries, cfg: DetectorConfig, train_cfg: TrainConfig,
                    grid: list[tuple[float, float]], jobs: int = 1) -> list[SweepCell]:
    """One EvalReport per (upper, lower) grid cell.

    Grid entries are (high, low) pairs in either quantile or percentile
    units. Cells are independent and evaluate in parallel when jobs > 1.
    """
    if not grid:
        raise ConfigError("empty grid")
    cells = []
    for high, low in grid:
        q_high, q_low = _pair_as_taus(high, low)
        if not q_low < q_high:
            raise ConfigError(f"grid cell ({high}, {low}) is not a (high, low) pair")
        cells.append((q_low, q_high))

    def run(cell):
        q_low, q_high = cell
        cell_cfg = replace(cfg, kind="quantile", q_low=q_low, q_high=q_high)
        report = evaluate_detector(series, cell_cfg, train_cfg,
                                   detector_name=f"quantile({q_low},{q_high})")
        return SweepCell(q_low, q_high, report)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run, cells))
    return [run(cell) for cell in cells]


def false_alarm_count(series: TimeSeries, cfg: DetectorConfig,
                      train_cfg: TrainConfig, jobs: int = 1) -> int:
    """Number of flagged points when the series contains no anomalies."""
    if series.labels is not None and series.labels.any():
        raise DataError("false-alarm counting expects a series without anomalies")
    verdicts, _, _ = run_detector(series.without_labels(), cfg, train_cfg, jobs=jobs)
    return sum(v.is_anomaly for v in verdicts)


@dataclass(frozen=True)
class AblationResult:
    fixed: EvalReport             # plain Elliot cell activation
    learnable: EvalReport         # parameterized Elliot
    alpha_initial: float
    alpha_final: float
    seed: int


def ablation_fixed_vs_learnable(series: TimeSeries, cfg: DetectorConfig,
                                train_cfg: TrainConfig, jobs: int = 1) -> AblationResult:
    """Two end-to-end runs differing only in the cell activation, same seed."""
    fixed_cfg = replace(cfg, activation=ELLIOT)
    learn_cfg = replace(cfg, activation=PARAM_ELLIOT)
    fixed_report = evaluate_detector(series, fixed_cfg, train_cfg, jobs=jobs,
                                     detector_name=f"{cfg.kind}+elliot")
    verdicts, _, fitted = run_detector(series, learn_cfg, train_cfg, jobs=jobs)
    tail = [v for v in verdicts if v.index >= fitted.train_len]
    learn_report = score(tail, series, detector=f"{cfg.kind}+param_elliot")
    final_alpha = fitted.models[learn_cfg.taus()[0]].alpha
    return AblationResult(fixed_report, learn_report, learn_cfg.alpha0,
                          float(final_alpha), train_cfg.seed)


# EF/PEF are the usual shorthands for the two Elliot variants
ablation_ef_vs_pef = ablation_fixed_vs_learnable


def report_rows(reports: list[EvalReport]) -> list[dict]:
    return [{
        "dataset": r.dataset, "detector": r.detector,
        "tp": r.true_positives, "fp": r.false_positives,
        "fn": r.false_negatives, "tn": r.true_negatives,
        "precision": r.precision, "recall": r.recall,
    } for r in reports]


def rows_to_csv_text(rows: list[dict], meta: dict | None = None) -> str:
    buf = io.StringIO()
    for key in sorted(meta) if meta else ():
        buf.write(f"# {key}={meta[key]}\n")
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (f"{v:.6g}" if isinstance(v, float) else v)
                             for k, v in row.items()})
    return buf.getvalue()


def rows_to_table_text(rows: list[dict]) -> str:
    if not rows:
        return "(empty)\n"
    cols = list(rows[0].keys())
    rendered = [[(f"{row[c]:.4g}" if isinstance(row[c], float) else str(row[c]))
                 for c in cols] for row in rows]
    widths = [max(len(c), *(len(r[ci]) for r in rendered)) for ci, c in enumerate(cols)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(cols, widths))]
    for r in rendered:
        lines.append("  ".join(v.ljust(w) for v, w in zip(r, widths)))
    return "\n".join(lines) + "\n"
