"""Command-line surface: synth, train, detect, eval, probe, sweep, ablate.

Every artifact embeds its fully-resolved configuration as ``# key=value``
comment lines (CSV) or a ``config`` object (JSON); feeding those lines back
through ``--config`` reproduces the artifact byte for byte. Precedence is
flags > config file > built-in defaults. Exit codes: 0 success, 2 config or
data error, 3 numeric failure, 4 model file error.
"""

from __future__ import annotations

import argparse
import contextlib
import os
import sys
from . import backend
from .detectors import (DetectorConfig, FittedDetector, detect, fit_detector,
                        fit_normalization, summary_json, verdicts_from_csv,
                        verdicts_to_csv)
from .errors import (ConfigError, DataError, ModelFormatError,
                     TrainingDivergenceError)
from .evaluation import (ablation_fixed_vs_learnable, probability_bound,
                         report_rows, rows_to_csv_text, rows_to_table_text,
                         score, threshold_sweep)
from .model import load_model, save_model
from .series import (CsvSchema, generate_synthetic, inject_anomalies, load_csv,
                     write_csv)
from .svg import write_line_svg
from .training import GATES, TrainConfig
from .windows import WindowConfig

DATA_DIR_ENV = "QLSTM_DATA_DIR"


def _bool(text: str) -> bool:
    if text.lower() in ("1", "true", "yes"):
        return True
    if text.lower() in ("0", "false", "no"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _optional_int(text: str):
    return None if text.lower() == "none" else int(text)


# dest -> (converter, default); one table shared by all subcommands.
OPTIONS = {
    "data": (str, None),
    "out": (str, "."),
    "timestamp_col": (str, "timestamp"),
    "value_col": (str, "value"),
    "label_col": (str, "is_anomaly"),
    "detector": (str, "quantile"),
    "q_low": (float, 0.1),
    "q_high": (float, 0.9),
    "iqr_mult": (float, 1.5),
    "median_w": (float, 2.0),
    "period": (int, 9),
    "windows": (int, 3),
    "train_frac": (float, 0.4),
    "hidden": (int, 16),
    "depth": (int, 1),
    "activation": (str, "param_elliot"),
    "alpha0": (float, 1.5),
    "epochs": (int, 200),
    "lr": (float, 0.05),
    "grad_clip": (float, 5.0),
    "seed": (int, 0),
    "jobs": (int, 1),
    "trace": (_bool, False),
    "svg": (_bool, False),
    "models": (str, None),
    "verdicts": (str, None),
    "eval_start": (_optional_int, None),
    "match_tolerance": (int, 0),
    "pair_high": (float, 0.9),
    "pair_low": (float, 0.1),
    "grid": (str, "99.25,0.75;99.75,0.25;99.9,0.1"),
    "kind": (str, "sine"),
    "length": (int, 2000),
    "noise_std": (float, 0.0),
    "quantize_step": (float, 0.0),
    "amplitude": (float, 1.0),
    "amplitude_decay": (float, 0.0),
    "sine_period": (int, 100),
    "inject_count": (int, 0),
    "inject_magnitude": (float, 5.0),
    "inject_seed": (int, 1),
    "backend": (str, "auto"),
    "command": (str, None),
}

_COMMAND_KEYS = {
    "synth": ["out", "kind", "length", "seed", "noise_std", "quantize_step",
              "amplitude", "amplitude_decay", "sine_period", "inject_count",
              "inject_magnitude", "inject_seed", "backend"],
    "train": ["data", "out", "timestamp_col", "value_col", "label_col",
              "detector", "q_low", "q_high", "iqr_mult", "median_w", "period",
              "windows", "train_frac", "hidden", "depth", "activation",
              "alpha0", "epochs", "lr", "grad_clip", "seed", "jobs", "trace",
              "svg", "backend"],
    "detect": ["data", "out", "models", "timestamp_col", "value_col",
               "label_col", "detector", "q_low", "q_high", "iqr_mult",
               "median_w", "period", "windows", "train_frac", "seed", "svg",
               "backend"],
    "eval": ["data", "out", "verdicts", "timestamp_col", "value_col",
             "label_col", "eval_start", "train_frac", "match_tolerance",
             "detector", "seed", "backend"],
    "probe": ["data", "out", "timestamp_col", "value_col", "label_col",
              "pair_high", "pair_low", "seed", "backend"],
    "sweep": ["data", "out", "timestamp_col", "value_col", "label_col", "grid",
              "period", "windows", "train_frac", "hidden", "depth",
              "activation", "alpha0", "epochs", "lr", "grad_clip", "seed",
              "jobs", "backend"],
    "ablate": ["data", "out", "timestamp_col", "value_col", "label_col",
               "detector", "q_low", "q_high", "iqr_mult", "median_w", "period",
               "windows", "train_frac", "hidden", "depth", "alpha0", "epochs",
               "lr", "grad_clip", "seed", "jobs", "backend"],
}

_REQUIRED = {
    "synth": ["out"],
    "train": ["data"],
    "detect": ["data", "models"],
    "eval": ["data", "verdicts"],
    "probe": ["data"],
    "sweep": ["data"],
    "ablate": ["data"],
}

_HELP = {
    "synth": "generate a synthetic series CSV (optionally with injected anomalies)",
    "train": "train detector member models, write model files (+ traces)",
    "detect": "run a fitted detector over a series, write verdicts + summary",
    "eval": "score a verdict file against labeled data",
    "probe": "empirical anomaly probability beyond quantile thresholds",
    "sweep": "precision/recall over a grid of (upper, lower) thresholds",
    "ablate": "paired runs: fixed Elliot vs learnable-alpha cell activation",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qlstm",
        description="Quantile-forecasting LSTM anomaly detection toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for command, keys in _COMMAND_KEYS.items():
        p = sub.add_parser(command, help=_HELP[command])
        p.add_argument("--config", default=None,
                       help="key=value file; explicit flags win")
        for key in keys:
            conv, _ = OPTIONS[key]
            flag = "--" + key.replace("_", "-")
            if conv is _bool:
                p.add_argument(flag, dest=key, nargs="?", const="true",
                               default=None, metavar="BOOL")
            else:
                p.add_argument(flag, dest=key, default=None)
    return parser


def _read_config_file(path) -> dict[str, str]:
    overrides = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for line_no, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{line_no}: expected key=value")
                key, value = line.split("=", 1)
                overrides[key.strip()] = value.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return overrides


def _resolve(ns: argparse.Namespace) -> dict:
    command = ns.command
    file_overrides = _read_config_file(ns.config) if ns.config else {}
    keys = _COMMAND_KEYS[command]
    for key in file_overrides:
        if key == "command":
            if file_overrides[key] != command:
                raise ConfigError(
                    f"config file is for command {file_overrides[key]!r}, "
                    f"running {command!r}")
            continue
        if key not in keys:
            raise ConfigError(f"unknown config key {key!r} for command {command}")
    merged = {"command": command}
    for key in keys:
        conv, default = OPTIONS[key]
        cli_value = getattr(ns, key)
        if cli_value is not None:
            merged[key] = conv(cli_value)
        elif key in file_overrides:
            value = file_overrides[key]
            merged[key] = None if value == "none" else conv(value)
        else:
            merged[key] = default
    for key in _REQUIRED[command]:
        if merged.get(key) is None:
            raise ConfigError(f"missing required option --{key.replace('_', '-')}")
    return merged


def _echo(cfg: dict) -> dict:
    out = {}
    for key in sorted(cfg):
        value = cfg[key]
        if isinstance(value, bool):
            value = "true" if value else "false"
        elif value is None:
            value = "none"
        out[key] = value
    return out


@contextlib.contextmanager
def _atomic(path):
    tmp = str(path) + ".tmp"
    yield tmp
    os.replace(tmp, path)


def _write_text(path, text: str) -> None:
    with _atomic(path) as tmp:
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write(text)


def _data_path(path: str) -> str:
    if os.path.exists(path) or os.path.isabs(path):
        return path
    base = os.environ.get(DATA_DIR_ENV)
    if base:
        candidate = os.path.join(base, path)
        if os.path.exists(candidate):
            return candidate
    return path


def _schema(cfg: dict) -> CsvSchema:
    return CsvSchema(cfg["timestamp_col"], cfg["value_col"], cfg["label_col"])


def _load_series(cfg: dict):
    return load_csv(_data_path(cfg["data"]), _schema(cfg))


def _detector_config(cfg: dict) -> DetectorConfig:
    return DetectorConfig(
        kind=cfg.get("detector", "quantile"),
        q_low=cfg.get("q_low", 0.1), q_high=cfg.get("q_high", 0.9),
        iqr_multiplier=cfg.get("iqr_mult", 1.5), median_w=cfg.get("median_w", 2.0),
        window=WindowConfig(cfg["period"], cfg["windows"]),
        train_frac=cfg["train_frac"],
        hidden_size=cfg.get("hidden", 16), depth=cfg.get("depth", 1),
        activation=cfg.get("activation", "param_elliot"),
        alpha0=cfg.get("alpha0", 1.5))


def _train_config(cfg: dict) -> TrainConfig:
    clip = cfg.get("grad_clip", 5.0)
    return TrainConfig(learning_rate=cfg["lr"], epochs=cfg["epochs"],
                       seed=cfg["seed"], record_traces=cfg.get("trace", False),
                       grad_clip=None if clip == 0 else clip)


def _model_filename(tau: float) -> str:
    return f"model_q{tau:g}.txt"


def _cmd_synth(cfg: dict) -> int:
    series = generate_synthetic(
        cfg["kind"], cfg["length"], cfg["seed"], period=cfg["sine_period"],
        amplitude=cfg["amplitude"], noise_std=cfg["noise_std"],
        quantize_step=cfg["quantize_step"], amplitude_decay=cfg["amplitude_decay"])
    if cfg["inject_count"] > 0:
        series = inject_anomalies(series, cfg["inject_count"],
                                  cfg["inject_magnitude"], cfg["inject_seed"])
    with _atomic(cfg["out"]) as tmp:
        write_csv(series, tmp, meta=_echo(cfg))
    print(f"wrote {cfg['out']} ({len(series)} points, "
          f"{series.anomaly_count()} labeled anomalies)")
    return 0


def _cmd_train(cfg: dict) -> int:
    series = _load_series(cfg)
    det_cfg = _detector_config(cfg)
    train_cfg = _train_config(cfg)
    fitted, traces = fit_detector(series, det_cfg, train_cfg,
                                  jobs=cfg["jobs"], collect_traces=True)
    os.makedirs(cfg["out"], exist_ok=True)
    echo = _echo(cfg)
    for tau, model in fitted.models.items():
        path = os.path.join(cfg["out"], _model_filename(tau))
        with _atomic(path) as tmp:
            save_model(model, tmp, meta=echo)
        print(f"wrote {path}")
    if cfg["trace"]:
        for tau, rows in traces.items():
            path = os.path.join(cfg["out"], f"trace_q{tau:g}.csv")
            lines = [f"# {k}={v}" for k, v in echo.items()]
            lines.append("epoch," + ",".join(f"mean_abs_{g}" for g in GATES)
                         + ",alpha,loss")
            for tr in rows:
                gate_vals = ",".join(f"{tr.layer_value_summary[g]:.17g}" for g in GATES)
                alpha = "" if tr.alpha_value is None else f"{tr.alpha_value:.17g}"
                lines.append(f"{tr.epoch},{gate_vals},{alpha},{tr.loss_value:.17g}")
            _write_text(path, "\n".join(lines) + "\n")
            print(f"wrote {path}")
            if cfg["svg"]:
                epochs = [tr.epoch for tr in rows]
                curves = {g: (epochs, [tr.layer_value_summary[g] for tr in rows])
                          for g in GATES}
                svg_path = os.path.join(cfg["out"], f"trace_q{tau:g}.svg")
                with _atomic(svg_path) as tmp:
                    write_line_svg(tmp, curves, title=f"gate activity tau={tau:g}", meta=echo)
                print(f"wrote {svg_path}")
    return 0


def _reconstruct_fitted(cfg: dict, series) -> FittedDetector:
    det_cfg = _detector_config(cfg)
    models = {}
    for tau in det_cfg.taus():
        path = os.path.join(cfg["models"], _model_filename(tau))
        models[tau] = load_model(path)
    train_len = max(2, int(len(series) * det_cfg.train_frac))
    if train_len < det_cfg.window.period_len + 1:
        raise DataError("insufficient data: training prefix shorter than one period")
    params = fit_normalization(series, train_len)
    return FittedDetector(det_cfg, TrainConfig(seed=cfg["seed"]), models,
                          params, train_len, series.name)


def _cmd_detect(cfg: dict) -> int:
    series = _load_series(cfg)
    fitted = _reconstruct_fitted(cfg, series)
    verdicts, extras = detect(fitted, series)
    os.makedirs(cfg["out"], exist_ok=True)
    echo = _echo(cfg)

    verdict_path = os.path.join(cfg["out"], "verdicts.csv")
    with _atomic(verdict_path) as tmp:
        verdicts_to_csv(verdicts, tmp, meta=echo)
    summary_path = os.path.join(cfg["out"], "summary.json")
    _write_text(summary_path, summary_json(verdicts, extras, echo))
    print(f"wrote {verdict_path}")
    print(f"wrote {summary_path}")

    if cfg["detector"] == "median" and extras["thresholds"] is not None:
        th_path = os.path.join(cfg["out"], "thresholds.csv")
        lines = [f"# {k}={v}" for k, v in echo.items()]
        lines.append("block,mu,sigma,upper,lower")
        for th in extras["thresholds"]:
            lines.append(f"{th.block_index},{th.mu:.17g},{th.sigma:.17g},"
                         f"{th.upper:.17g},{th.lower:.17g}")
        _write_text(th_path, "\n".join(lines) + "\n")
        print(f"wrote {th_path}")

    if cfg["svg"]:
        idx = [v.index for v in verdicts]
        curves = {"observed": (idx, [v.observed for v in verdicts])}
        if verdicts and verdicts[0].predicted_low is not None:
            curves["low"] = (idx, [v.predicted_low for v in verdicts])
            curves["high"] = (idx, [v.predicted_high for v in verdicts])
        svg_path = os.path.join(cfg["out"], "bands.svg")
        with _atomic(svg_path) as tmp:
            write_line_svg(tmp, curves, title=f"{cfg['detector']} bands",
                           meta=echo)
        print(f"wrote {svg_path}")
    flagged = sum(v.is_anomaly for v in verdicts)
    print(f"{flagged} of {len(verdicts)} points flagged; "
          f"{extras['repairs']} band repairs")
    return 0


def _cmd_eval(cfg: dict) -> int:
    truth = _load_series(cfg)
    verdicts = verdicts_from_csv(_data_path(cfg["verdicts"]))
    start = cfg["eval_start"]
    if start is None:
        start = int(len(truth) * cfg["train_frac"])
    tail = [v for v in verdicts if v.index >= start]
    match = "window" if cfg["match_tolerance"] > 0 else "exact_index"
    report = score(tail, truth, match=match, tolerance=cfg["match_tolerance"],
                   detector=cfg.get("detector", ""))
    rows = report_rows([report])
    os.makedirs(cfg["out"], exist_ok=True)
    path = os.path.join(cfg["out"], "eval.csv")
    _write_text(path, rows_to_csv_text(rows, meta=_echo(cfg)))
    print(rows_to_table_text(rows), end="")
    print(f"wrote {path}")
    return 0


def _cmd_probe(cfg: dict) -> int:
    series = _load_series(cfg)
    pair = (cfg["pair_high"], cfg["pair_low"])
    rows = []
    for norm in ("series", "anomalies"):
        row = probability_bound(series, pair=pair, normalization=norm)
        flat = {"dataset": row.dataset, "normalization": row.normalization}
        flat.update({f"p_above_{tau:g}": p for tau, p in row.p_above.items()})
        flat.update({f"p_below_{tau:g}": p for tau, p in row.p_below.items()})
        flat["p_anomaly"] = row.p_anomaly
        rows.append(flat)
    os.makedirs(cfg["out"], exist_ok=True)
    path = os.path.join(cfg["out"], "probe.csv")
    _write_text(path, rows_to_csv_text(rows, meta=_echo(cfg)))
    print(rows_to_table_text(rows), end="")
    print(f"wrote {path}")
    return 0


def _parse_grid(text: str) -> list[tuple[float, float]]:
    cells = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split(",")
        if len(parts) != 2:
            raise ConfigError(f"grid cell {chunk!r} is not 'upper,lower'")
        cells.append((float(parts[0]), float(parts[1])))
    if not cells:
        raise ConfigError("empty grid")
    return cells


def _cmd_sweep(cfg: dict) -> int:
    series = _load_series(cfg)
    cells = threshold_sweep(series, _detector_config(cfg), _train_config(cfg),
                            _parse_grid(cfg["grid"]), jobs=cfg["jobs"])
    rows = []
    for cell in cells:
        row = {"q_low": cell.q_low, "q_high": cell.q_high}
        row.update(report_rows([cell.report])[0])
        rows.append(row)
    os.makedirs(cfg["out"], exist_ok=True)
    path = os.path.join(cfg["out"], "sweep.csv")
    _write_text(path, rows_to_csv_text(rows, meta=_echo(cfg)))
    print(rows_to_table_text(rows), end="")
    print(f"wrote {path}")
    return 0


def _cmd_ablate(cfg: dict) -> int:
    series = _load_series(cfg)
    result = ablation_fixed_vs_learnable(series, _detector_config(cfg),
                                         _train_config(cfg), jobs=cfg["jobs"])
    rows = report_rows([result.fixed, result.learnable])
    rows[0].update({"activation": "elliot", "alpha_final": ""})
    rows[1].update({"activation": "param_elliot",
                    "alpha_final": f"{result.alpha_final:.17g}"})
    os.makedirs(cfg["out"], exist_ok=True)
    path = os.path.join(cfg["out"], "ablate.csv")
    _write_text(path, rows_to_csv_text(rows, meta=_echo(cfg)))
    print(rows_to_table_text(rows), end="")
    print(f"wrote {path}")
    return 0


_RUNNERS = {
    "synth": _cmd_synth,
    "train": _cmd_train,
    "detect": _cmd_detect,
    "eval": _cmd_eval,
    "probe": _cmd_probe,
    "sweep": _cmd_sweep,
    "ablate": _cmd_ablate,
}


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = _resolve(ns)
        backend.use_backend(cfg.get("backend", "auto"))
        cfg["backend"] = backend.active_backend()
        return _RUNNERS[cfg["command"]](cfg)
    except (ConfigError, DataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TrainingDivergenceError as exc:
        print(f"training diverged: {exc}", file=sys.stderr)
        return 3
    except ModelFormatError as exc:
        print(f"model file error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
