"""Quantile-forecasting LSTM anomaly detection for univariate time series.

Three detectors (quantile band, IQR band, median-difference thresholding)
built on a from-scratch LSTM whose cell activation can be the learnable
parameterized Elliot function, plus evaluation tooling: precision/recall
scoring, probability-bound tables, threshold sweeps, and a fixed-vs-learnable
activation ablation.
"""

from .activations import (ELLIOT, PARAM_ELLIOT, SIGMOID, TANH, Activation,
                          activation_eval, activation_grad)
from .backend import active_backend, use_backend
from .detectors import (DetectorConfig, DetectorVerdict, FittedDetector,
                        MedianThresholds, detect, detect_iqr, detect_median,
                        detect_quantile, fit_detector, fit_iqr_lstm,
                        fit_median_lstm, fit_quantile_lstm)
from .errors import (ConfigError, DataError, ModelFormatError, QlstmError,
                     TrainingDivergenceError)
from .evaluation import (AblationResult, EvalReport, ProbabilityBoundRow,
                         SweepCell, ablation_ef_vs_pef,
                         ablation_fixed_vs_learnable, evaluate_detector,
                         false_alarm_count, probability_bound, run_detector,
                         score, threshold_sweep)
from .model import LstmModel, init_model, load_model, save_model
from .series import (CsvSchema, NormalizationParams, SeriesPoint, TimeSeries,
                     denormalize, generate_synthetic, inject_anomalies,
                     load_csv, normalize, write_csv)
from .training import (EpochTrace, Gradients, TrainConfig, backward,
                       backward_batch, forward, forward_batch, predict_batch,
                       train)
from .windows import (QuantileTrainingSet, WindowConfig, build_training_set,
                      detection_pairs, sample_quantile,
                      window_config_for_dataset)

__version__ = "0.1.0"
