import numpy as np
import pytest

from oracles import analytic_gradients
from qlstm import Activation, ConfigError, forward_batch, init_model
from qlstm import backend
from qlstm.activations import PARAM_ELLIOT


def _run_both(fn):
    results = {}
    for name in ("numpy", "numba"):
        backend.use_backend(name)
        results[name] = fn()
    backend.use_backend("auto")
    return results


def test_forward_parity(rng):
    model = init_model(1, 8, Activation(PARAM_ELLIOT, 1.5), seed=3)
    X = rng.normal(0, 1, (5, 16, 1))

    out = _run_both(lambda: forward_batch(model, X))
    np.testing.assert_allclose(out["numpy"].prediction, out["numba"].prediction,
                               rtol=1e-12, atol=1e-14)
    for a, b in zip(out["numpy"].layer_tapes[0], out["numba"].layer_tapes[0]):
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)


def test_gradient_parity(rng):
    model = init_model(1, 6, Activation(PARAM_ELLIOT, 1.5), seed=7, depth=2)
    X = rng.normal(0, 1, (4, 8, 1))
    y = rng.normal(0, 1, 8)

    out = _run_both(lambda: analytic_gradients(model, X, y))
    for a, b in zip(out["numpy"].all_arrays(), out["numba"].all_arrays()):
        np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-13)
    assert out["numpy"].d_alpha_cell == pytest.approx(out["numba"].d_alpha_cell,
                                                      rel=1e-10)
    assert out["numpy"].d_alpha_cand == pytest.approx(out["numba"].d_alpha_cand,
                                                      rel=1e-10)


def test_env_flag_selects_backend(monkeypatch):
    monkeypatch.setenv("QLSTM_BACKEND", "numpy")
    backend.use_backend("auto")        # force re-resolution from the env
    assert backend.active_backend() == "numpy"
    monkeypatch.setenv("QLSTM_BACKEND", "numba")
    backend.use_backend("auto")
    assert backend.active_backend() == "numba"
    backend.use_backend("auto")


def test_unknown_backend_rejected():
    with pytest.raises(ConfigError):
        backend.use_backend("fortran")


def test_bad_env_value(monkeypatch):
    monkeypatch.setenv("QLSTM_BACKEND", "gpu")
    backend.use_backend("auto")
    with pytest.raises(ConfigError):
        backend.get_kernels()
    monkeypatch.delenv("QLSTM_BACKEND")
    backend.use_backend("auto")
