"""Kernel backend selection.

``QLSTM_BACKEND`` picks the implementation of the LSTM layer kernels:
``numba`` (default when importable), ``numpy`` (pure-numpy fallback), or
``auto``. Both backends implement identical contracts; the benchmark under
``benchmarks/`` compares them.
"""

from __future__ import annotations

import os

from .errors import ConfigError

_ENV_VAR = "QLSTM_BACKEND"
_active: str | None = None
_kernels = None


def _load(name: str):
    if name == "numpy":
        from . import kernels_numpy
        return kernels_numpy
    from . import kernels_numba
    return kernels_numba


def use_backend(name: str) -> None:
    """Force a backend for this process ('numba', 'numpy', or 'auto')."""
    global _active, _kernels
    if name not in ("auto", "numba", "numpy"):
        raise ConfigError(f"unknown backend {name!r}")
    if name == "auto":
        _active, _kernels = None, None
        return
    if name == "numba":
        try:
            kernels = _load("numba")
        except ImportError as exc:
            raise ConfigError(f"numba backend requested but unavailable: {exc}") from exc
    else:
        kernels = _load("numpy")
    _active, _kernels = name, kernels


def get_kernels():
    """Return the active kernel module, resolving the env var on first use."""
    global _active, _kernels
    if _kernels is None:
        requested = os.environ.get(_ENV_VAR, "auto")
        if requested == "numpy":
            use_backend("numpy")
        elif requested == "numba":
            use_backend("numba")
        elif requested == "auto":
            try:
                _kernels = _load("numba")
                _active = "numba"
            except ImportError:
                _kernels = _load("numpy")
                _active = "numpy"
        else:
            raise ConfigError(f"{_ENV_VAR} must be auto, numba, or numpy, "
                              f"got {requested!r}")
    return _kernels


def active_backend() -> str:
    get_kernels()
    return _active
