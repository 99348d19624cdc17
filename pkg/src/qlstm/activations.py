"""Pluggable activations: sigmoid, tanh, Elliot, and its learnable variant.

The parameterized Elliot function alpha*x/(1+|x|) keeps a nonzero derivative
alpha/(1+|x|)^2 far from the origin, decaying quadratically instead of
exponentially; at x=0 the derivative equals alpha itself. The plain Elliot
function is the alpha=1 case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

SIGMOID = "sigmoid"
TANH = "tanh"
ELLIOT = "elliot"
PARAM_ELLIOT = "param_elliot"

KINDS = (SIGMOID, TANH, ELLIOT, PARAM_ELLIOT)

# Integer codes shared with the compute kernels.
ACT_CODES = {SIGMOID: 0, TANH: 1, ELLIOT: 2, PARAM_ELLIOT: 3}

DEFAULT_ALPHA = 1.5


@dataclass
class Activation:
    """Activation kind plus the learnable shape parameter (PEF only)."""

    kind: str
    alpha: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown activation kind {self.kind!r}")
        if self.kind == PARAM_ELLIOT:
            if self.alpha is None:
                self.alpha = DEFAULT_ALPHA
            if not math.isfinite(self.alpha):
                raise ConfigError("alpha must be finite")
        elif self.alpha is not None:
            raise ConfigError(f"{self.kind} takes no alpha parameter")


def activation_eval(a: Activation, x):
    """Evaluate the activation at x (scalar or array)."""
    x = np.asarray(x, dtype=np.float64)
    if a.kind == SIGMOID:
        out = 1.0 / (1.0 + np.exp(-x))
    elif a.kind == TANH:
        out = np.tanh(x)
    elif a.kind == ELLIOT:
        out = x / (1.0 + np.abs(x))
    else:
        out = a.alpha * x / (1.0 + np.abs(x))
    return float(out) if out.ndim == 0 else out


def activation_grad(a: Activation, x):
    """Analytic first derivative of :func:`activation_eval` at x."""
    x = np.asarray(x, dtype=np.float64)
    if a.kind == SIGMOID:
        s = 1.0 / (1.0 + np.exp(-x))
        out = s * (1.0 - s)
    elif a.kind == TANH:
        out = 1.0 - np.tanh(x) ** 2
    elif a.kind == ELLIOT:
        out = 1.0 / (1.0 + np.abs(x)) ** 2
    else:
        out = a.alpha / (1.0 + np.abs(x)) ** 2
    return float(out) if out.ndim == 0 else out
