"""Forward/backward passes and full-batch gradient-descent training.

The loss is half the mean squared error between the linear head output at the
final step and the quantile label. All parameters, including the learnable
activation alphas, descend their gradient with a fixed step; the alpha
gradient flows through both the candidate activation and the activated cell
state (summed when the model shares a single alpha).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .activations import ACT_CODES, PARAM_ELLIOT
from .errors import ConfigError, DataError, TrainingDivergenceError
from .model import LayerParams, LstmModel
from .windows import QuantileTrainingSet

GATES = ("forget", "input", "output", "candidate")


@dataclass
class TrainConfig:
    learning_rate: float = 0.05
    epochs: int = 200
    seed: int = 0
    loss: str = "squared_error"
    record_traces: bool = False
    grad_clip: float | None = 5.0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.loss != "squared_error":
            raise ConfigError(f"unsupported loss {self.loss!r}")
        if self.grad_clip is not None and self.grad_clip <= 0:
            raise ConfigError("grad_clip must be positive or None")


@dataclass
class EpochTrace:
    """Per-epoch instrumentation: mean |activation| per gate, alpha, loss."""

    epoch: int
    layer_value_summary: dict[str, float]
    alpha_value: float | None
    loss_value: float


@dataclass
class Tape:
    """Cached intermediates of one forward pass, consumed by backward."""

    X: np.ndarray                 # [T, N, I] layer-0 inputs
    layer_tapes: list[tuple]      # per layer: (f, i, o, a_c, chat, C, actC, h)
    prediction: np.ndarray        # [N, 1]
    model_id: int


@dataclass
class Gradients:
    layers: list[LayerParams]
    dW_v: np.ndarray
    db_v: np.ndarray
    d_alpha_cell: float = 0.0
    d_alpha_cand: float = 0.0

    def all_arrays(self):
        out = []
        for layer in self.layers:
            out.extend(layer.arrays())
        out.extend([self.dW_v, self.db_v])
        return out


def _as_batch(sequence) -> np.ndarray:
    X = np.asarray(sequence, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim == 2:
        X = X[:, None, :]          # [T, I] -> [T, 1, I]
    return np.ascontiguousarray(X)


def forward_batch(model: LstmModel, X: np.ndarray) -> Tape:
    """Run the stacked layers over a [T, N, I] batch; h_0 = C_0 = 0."""
    if X.ndim != 3:
        raise DataError("batch input must be [T, N, I]")
    if X.shape[0] < 1:
        raise DataError("sequence must be non-empty")
    if X.shape[2] != model.input_size:
        raise DataError(f"input size {X.shape[2]} != model input_size {model.input_size}")
    kernels = backend.get_kernels()
    code = ACT_CODES[model.cell_activation.kind]
    alpha_cell = model.alpha if model.alpha is not None else 1.0
    alpha_cand = model.effective_candidate_alpha()

    layer_tapes = []
    inputs = X
    for layer in model.layers:
        tape = kernels.lstm_layer_forward(
            inputs, layer.W_f, layer.b_f, layer.W_i, layer.b_i,
            layer.W_c, layer.b_c, layer.W_o, layer.b_o,
            code, alpha_cand, alpha_cell)
        layer_tapes.append(tape)
        inputs = tape[7]           # h of this layer feeds the next
    h_last = layer_tapes[-1][7][-1]
    prediction = h_last @ model.W_v + model.b_v
    return Tape(X, layer_tapes, prediction, id(model))


def forward(model: LstmModel, sequence):
    """Single-sequence forward pass: returns (prediction vector, tape)."""
    tape = forward_batch(model, _as_batch(sequence))
    return tape.prediction[0], tape


def backward_batch(model: LstmModel, tape: Tape, d_prediction: np.ndarray) -> Gradients:
    """Accumulate gradients for every parameter from d(loss)/d(prediction)."""
    if tape.model_id != id(model):
        raise DataError("tape was produced by a different model")
    d_prediction = np.asarray(d_prediction, dtype=np.float64).reshape(-1, 1)
    kernels = backend.get_kernels()
    code = ACT_CODES[model.cell_activation.kind]
    alpha_cell = model.alpha if model.alpha is not None else 1.0
    alpha_cand = model.effective_candidate_alpha()

    h_top_last = tape.layer_tapes[-1][7][-1]
    dW_v = h_top_last.T @ d_prediction
    db_v = d_prediction.sum(axis=0)

    T, N, _ = tape.X.shape
    H = model.hidden_size
    d_h = np.zeros((T, N, H))
    d_h[-1] = d_prediction @ model.W_v.T

    layer_grads: list[LayerParams | None] = [None] * model.depth
    d_alpha_cand = 0.0
    d_alpha_cell = 0.0
    for li in range(model.depth - 1, -1, -1):
        layer = model.layers[li]
        inputs = tape.X if li == 0 else tape.layer_tapes[li - 1][7]
        f, i, o, a_c, chat, C, actC, h = tape.layer_tapes[li]
        out = kernels.lstm_layer_backward(
            inputs, f, i, o, a_c, chat, C, actC, h,
            layer.W_f, layer.W_i, layer.W_c, layer.W_o, d_h,
            code, alpha_cand, alpha_cell)
        (dW_f, db_f, dW_i, db_i, dW_c, db_c, dW_o, db_o,
         dX, da_cand, da_cell) = out
        layer_grads[li] = LayerParams(dW_f, db_f, dW_i, db_i, dW_c, db_c, dW_o, db_o)
        d_alpha_cand += da_cand
        d_alpha_cell += da_cell
        d_h = dX                   # feeds the layer below at every step

    return Gradients(layer_grads, dW_v, db_v, d_alpha_cell, d_alpha_cand)


def backward(model: LstmModel, tape: Tape, d_loss_d_prediction) -> Gradients:
    """Single-sequence counterpart of :func:`backward_batch`."""
    return backward_batch(model, tape, d_loss_d_prediction)


def _clip_gradients(grads: Gradients, max_norm: float, is_pef: bool) -> None:
    total = 0.0
    for arr in grads.all_arrays():
        total += float(np.sum(arr * arr))
    if is_pef:
        total += grads.d_alpha_cell ** 2 + grads.d_alpha_cand ** 2
    norm = np.sqrt(total)
    if norm > max_norm:
        scale = max_norm / norm
        for arr in grads.all_arrays():
            arr *= scale
        grads.d_alpha_cell *= scale
        grads.d_alpha_cand *= scale


def _apply_update(model: LstmModel, grads: Gradients, lr: float) -> None:
    for layer, g in zip(model.layers, grads.layers):
        for arr, garr in zip(layer.arrays(), g.arrays()):
            arr -= lr * garr
    model.W_v -= lr * grads.dW_v
    model.b_v -= lr * grads.db_v
    if model.cell_activation.kind == PARAM_ELLIOT:
        if model.candidate_alpha is None:
            model.cell_activation.alpha -= lr * (grads.d_alpha_cell + grads.d_alpha_cand)
        else:
            model.cell_activation.alpha -= lr * grads.d_alpha_cell
            model.candidate_alpha -= lr * grads.d_alpha_cand


def _gate_summary(tape: Tape) -> dict[str, float]:
    sums = dict.fromkeys(GATES, 0.0)
    for f, i, o, a_c, chat, C, actC, h in tape.layer_tapes:
        sums["forget"] += float(np.mean(np.abs(f)))
        sums["input"] += float(np.mean(np.abs(i)))
        sums["output"] += float(np.mean(np.abs(o)))
        sums["candidate"] += float(np.mean(np.abs(chat)))
    depth = len(tape.layer_tapes)
    return {k: v / depth for k, v in sums.items()}


def training_batch(data: QuantileTrainingSet):
    """Arrange window-quantile inputs as a [w, N, 1] batch with labels [N]."""
    if len(data) == 0:
        raise DataError("training set is empty")
    X = np.ascontiguousarray(data.inputs.T[:, :, None])
    y = np.asarray(data.labels, dtype=np.float64)
    return X, y


def train(model: LstmModel, data: QuantileTrainingSet, cfg: TrainConfig):
    """Full-batch gradient descent; returns (model, traces).

    Deterministic for a fixed seed and configuration. Aborts with
    :class:`TrainingDivergenceError` if the loss becomes non-finite.
    """
    if model.input_size != 1:
        raise ConfigError("quantile training feeds one window-quantile per step")
    X, y = training_batch(data)
    n = len(y)
    traces: list[EpochTrace] = []
    is_pef = model.cell_activation.kind == PARAM_ELLIOT
    for epoch in range(cfg.epochs):
        tape = forward_batch(model, X)
        resid = tape.prediction[:, 0] - y
        with np.errstate(over="ignore"):
            loss = 0.5 * float(np.mean(resid * resid))
        if not np.isfinite(loss):
            raise TrainingDivergenceError(f"loss became non-finite at epoch {epoch}")
        grads = backward_batch(model, tape, (resid / n)[:, None])
        if cfg.grad_clip is not None:
            _clip_gradients(grads, cfg.grad_clip, is_pef)
        _apply_update(model, grads, cfg.learning_rate)
        if cfg.record_traces:
            traces.append(EpochTrace(epoch, _gate_summary(tape),
                                     model.alpha if is_pef else None, loss))
    return model, traces


def predict_batch(model: LstmModel, inputs: np.ndarray) -> np.ndarray:
    """Predictions for [N, w] window-quantile inputs (no training)."""
    X = np.ascontiguousarray(np.asarray(inputs, dtype=np.float64).T[:, :, None])
    tape = forward_batch(model, X)
    return tape.prediction[:, 0]
