"""LSTM model parameters, initialization, and versioned text serialization."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .activations import PARAM_ELLIOT, SIGMOID, Activation
from .errors import ConfigError, ModelFormatError

FORMAT_NAME = "qlstm-model"
FORMAT_VERSION = 1

_GATE_PARAMS = ("W_f", "b_f", "W_i", "b_i", "W_c", "b_c", "W_o", "b_o")


@dataclass
class LayerParams:
    """Gate weights over the concatenated [h_prev, x_t] plus biases."""

    W_f: np.ndarray
    b_f: np.ndarray
    W_i: np.ndarray
    b_i: np.ndarray
    W_c: np.ndarray
    b_c: np.ndarray
    W_o: np.ndarray
    b_o: np.ndarray

    def arrays(self):
        return [getattr(self, name) for name in _GATE_PARAMS]


@dataclass
class LstmModel:
    """Stacked LSTM with a linear head and a configurable cell activation.

    Gates are always sigmoid. ``cell_activation`` drives both the candidate
    and the activated cell state; for the parameterized Elliot its alpha is
    learned. ``candidate_alpha`` is None when the candidate shares the cell
    alpha, or a separately-learned value otherwise.
    """

    input_size: int
    hidden_size: int
    layers: list[LayerParams]
    W_v: np.ndarray
    b_v: np.ndarray
    cell_activation: Activation
    gate_activation: Activation = field(default_factory=lambda: Activation(SIGMOID))
    candidate_alpha: float | None = None

    def __post_init__(self):
        if self.gate_activation.kind != SIGMOID:
            raise ConfigError("gate activation is fixed to sigmoid")
        if self.candidate_alpha is not None and self.cell_activation.kind != PARAM_ELLIOT:
            raise ConfigError("candidate_alpha requires the parameterized Elliot cell")
        H, I = self.hidden_size, self.input_size
        for li, layer in enumerate(self.layers):
            expect_in = I if li == 0 else H
            for name in ("W_f", "W_i", "W_c", "W_o"):
                W = getattr(layer, name)
                if W.shape != (H + expect_in, H):
                    raise ConfigError(
                        f"layer {li} {name} shape {W.shape} != {(H + expect_in, H)}")
        if self.W_v.shape != (H, 1) or self.b_v.shape != (1,):
            raise ConfigError("output head must map hidden state to one value")

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def alpha(self) -> float | None:
        return self.cell_activation.alpha

    def effective_candidate_alpha(self) -> float:
        if self.cell_activation.kind != PARAM_ELLIOT:
            return 1.0
        return self.candidate_alpha if self.candidate_alpha is not None else self.alpha

    def all_arrays(self):
        out = []
        for layer in self.layers:
            out.extend(layer.arrays())
        out.extend([self.W_v, self.b_v])
        return out

    def copy(self) -> "LstmModel":
        layers = [LayerParams(*[a.copy() for a in layer.arrays()]) for layer in self.layers]
        return LstmModel(self.input_size, self.hidden_size, layers,
                         self.W_v.copy(), self.b_v.copy(),
                         Activation(self.cell_activation.kind, self.cell_activation.alpha),
                         Activation(SIGMOID), self.candidate_alpha)


def init_model(input_size: int, hidden_size: int, cell_activation: Activation,
               seed: int, depth: int = 1,
               separate_candidate_alpha: bool = False) -> LstmModel:
    """Seeded uniform init in [-1/sqrt(H), +1/sqrt(H)] for all weights."""
    if hidden_size < 1 or input_size < 1 or depth < 1:
        raise ConfigError("input_size, hidden_size, and depth must be >= 1")
    rng = np.random.default_rng(seed)
    bound = 1.0 / math.sqrt(hidden_size)

    def uniform(*shape):
        return rng.uniform(-bound, bound, size=shape)

    layers = []
    for li in range(depth):
        in_size = input_size if li == 0 else hidden_size
        layers.append(LayerParams(
            W_f=uniform(hidden_size + in_size, hidden_size), b_f=uniform(hidden_size),
            W_i=uniform(hidden_size + in_size, hidden_size), b_i=uniform(hidden_size),
            W_c=uniform(hidden_size + in_size, hidden_size), b_c=uniform(hidden_size),
            W_o=uniform(hidden_size + in_size, hidden_size), b_o=uniform(hidden_size),
        ))
    W_v = uniform(hidden_size, 1)
    b_v = uniform(1)
    candidate_alpha = None
    if separate_candidate_alpha:
        if cell_activation.kind != PARAM_ELLIOT:
            raise ConfigError("separate candidate alpha requires the parameterized Elliot")
        candidate_alpha = cell_activation.alpha
    return LstmModel(input_size, hidden_size, layers, W_v, b_v,
                     Activation(cell_activation.kind, cell_activation.alpha),
                     candidate_alpha=candidate_alpha)


def _write_array(fh, name: str, arr: np.ndarray) -> None:
    arr = np.atleast_2d(arr)
    fh.write(f"param {name} {arr.shape[0]} {arr.shape[1]}\n")
    for row in arr:
        fh.write(" ".join(f"{v:.17g}" for v in row) + "\n")


def save_model(model: LstmModel, path, meta: dict | None = None) -> None:
    """Write a self-describing text file; floats carry 17 significant digits."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{FORMAT_NAME} {FORMAT_VERSION}\n")
        for key in sorted(meta) if meta else ():
            fh.write(f"# {key}={meta[key]}\n")
        fh.write(f"input_size {model.input_size}\n")
        fh.write(f"hidden_size {model.hidden_size}\n")
        fh.write(f"depth {model.depth}\n")
        fh.write(f"cell_activation {model.cell_activation.kind}\n")
        alpha = model.cell_activation.alpha
        fh.write(f"alpha {'none' if alpha is None else format(alpha, '.17g')}\n")
        cand = model.candidate_alpha
        fh.write(f"candidate_alpha {'shared' if cand is None else format(cand, '.17g')}\n")
        for li, layer in enumerate(model.layers):
            for name, arr in zip(_GATE_PARAMS, layer.arrays()):
                _write_array(fh, f"layer{li}.{name}", arr)
        _write_array(fh, "W_v", model.W_v)
        _write_array(fh, "b_v", model.b_v)


def _read_meaningful(lines):
    for raw in lines:
        line = raw.rstrip("\n")
        if line.startswith("#") or not line.strip():
            continue
        yield line


def load_model(path) -> LstmModel:
    """Load a model file, validating the format version and completeness."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = list(_read_meaningful(fh))
    except OSError as exc:
        raise ModelFormatError(f"cannot read model file {path}: {exc}") from exc
    if not lines:
        raise ModelFormatError(f"{path}: empty model file")
    head = lines[0].split()
    if len(head) != 2 or head[0] != FORMAT_NAME:
        raise ModelFormatError(f"{path}: not a {FORMAT_NAME} file")
    if head[1] != str(FORMAT_VERSION):
        raise ModelFormatError(
            f"{path}: unsupported format version {head[1]}, expected {FORMAT_VERSION}")

    scalars: dict[str, str] = {}
    arrays: dict[str, np.ndarray] = {}
    pos = 1
    while pos < len(lines):
        parts = lines[pos].split()
        if parts[0] == "param":
            if len(parts) != 4:
                raise ModelFormatError(f"{path}: malformed param header {lines[pos]!r}")
            name, rows, cols = parts[1], int(parts[2]), int(parts[3])
            if pos + rows >= len(lines) + 1 and rows > 0:
                raise ModelFormatError(f"{path}: unexpected end of file in {name}")
            data = []
            for r in range(rows):
                pos += 1
                if pos >= len(lines):
                    raise ModelFormatError(f"{path}: unexpected end of file in {name}")
                row = lines[pos].split()
                if len(row) != cols:
                    raise ModelFormatError(
                        f"{path}: row {r} of {name} has {len(row)} values, expected {cols}")
                try:
                    data.append([float(v) for v in row])
                except ValueError as exc:
                    raise ModelFormatError(f"{path}: bad float in {name}: {exc}") from exc
            arrays[name] = np.asarray(data)
        else:
            if len(parts) != 2:
                raise ModelFormatError(f"{path}: malformed line {lines[pos]!r}")
            scalars[parts[0]] = parts[1]
        pos += 1

    try:
        input_size = int(scalars["input_size"])
        hidden_size = int(scalars["hidden_size"])
        depth = int(scalars["depth"])
        kind = scalars["cell_activation"]
        alpha = None if scalars["alpha"] == "none" else float(scalars["alpha"])
        cand = scalars["candidate_alpha"]
        candidate_alpha = None if cand == "shared" else float(cand)
    except KeyError as exc:
        raise ModelFormatError(f"{path}: missing field {exc}") from exc

    layers = []
    for li in range(depth):
        vals = []
        for name in _GATE_PARAMS:
            key = f"layer{li}.{name}"
            if key not in arrays:
                raise ModelFormatError(f"{path}: missing parameter {key}")
            arr = arrays[key]
            vals.append(arr.ravel() if name.startswith("b") else arr)
        layers.append(LayerParams(*vals))
    for key in ("W_v", "b_v"):
        if key not in arrays:
            raise ModelFormatError(f"{path}: missing parameter {key}")
    return LstmModel(input_size, hidden_size, layers,
                     arrays["W_v"], arrays["b_v"].ravel(),
                     Activation(kind, alpha), candidate_alpha=candidate_alpha)
