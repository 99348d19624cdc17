import math

import numpy as np
import pytest

from qlstm import (ConfigError, Activation, activation_eval, activation_grad)
from qlstm.activations import ELLIOT, PARAM_ELLIOT, SIGMOID, TANH, KINDS


class TestEval:
    def test_param_elliot_at_origin(self):
        assert activation_eval(Activation(PARAM_ELLIOT, 1.5), 0.0) == 0.0

    def test_param_elliot_at_one(self):
        assert activation_eval(Activation(PARAM_ELLIOT, 1.5), 1.0) == 0.75

    def test_elliot_negative(self):
        assert activation_eval(Activation(ELLIOT), -1.0) == -0.5

    def test_sigmoid_tanh(self):
        assert activation_eval(Activation(SIGMOID), 0.0) == 0.5
        assert activation_eval(Activation(TANH), 0.0) == 0.0

    def test_array_input(self):
        out = activation_eval(Activation(ELLIOT), np.array([0.0, 1.0, -1.0]))
        np.testing.assert_allclose(out, [0.0, 0.5, -0.5])


class TestGrad:
    def test_param_elliot_origin_equals_alpha(self):
        assert activation_grad(Activation(PARAM_ELLIOT, 1.5), 0.0) == 1.5
        assert activation_grad(Activation(PARAM_ELLIOT, 0.1), 0.0) == 0.1

    def test_slow_saturation_at_five(self):
        pef = activation_grad(Activation(PARAM_ELLIOT, 1.0), 5.0)
        sig = activation_grad(Activation(SIGMOID), 5.0)
        assert pef == pytest.approx(1.0 / 36.0)
        assert pef > sig

    def test_sigmoid_at_origin(self):
        assert activation_grad(Activation(SIGMOID), 0.0) == 0.25

    @pytest.mark.parametrize("kind", KINDS)
    def test_matches_central_difference(self, kind, rng):
        act = Activation(kind, 1.5 if kind == PARAM_ELLIOT else None)
        xs = rng.uniform(-10, 10, 1000)
        eps = 1e-6
        fd = (activation_eval(act, xs + eps) - activation_eval(act, xs - eps)) / (2 * eps)
        np.testing.assert_allclose(activation_grad(act, xs), fd, atol=1e-6)

    def test_saturation_ordering_on_grid(self):
        # for |x| in [5, 10] the alpha=1 parameterized Elliot derivative
        # dominates both classic saturating activations
        xs = np.concatenate([np.linspace(5, 10, 200), np.linspace(-10, -5, 200)])
        pef = activation_grad(Activation(PARAM_ELLIOT, 1.0), xs)
        sig = activation_grad(Activation(SIGMOID), xs)
        tan = activation_grad(Activation(TANH), xs)
        assert np.all(pef > sig)
        assert np.all(pef > tan)


class TestRanges:
    def test_output_ranges(self, rng):
        # float64 sigmoid stays strictly inside (0,1) only up to |x| ~ 36
        xs = rng.uniform(-30, 30, 500)
        sig = activation_eval(Activation(SIGMOID), xs)
        assert np.all((sig > 0) & (sig < 1))
        ell = activation_eval(Activation(ELLIOT), xs)
        assert np.all((ell > -1) & (ell < 1))
        alpha = 1.5
        pef = activation_eval(Activation(PARAM_ELLIOT, alpha), xs)
        assert np.all((pef > -alpha) & (pef < alpha))


class TestValidation:
    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            Activation("relu")

    def test_alpha_only_for_param_elliot(self):
        with pytest.raises(ConfigError):
            Activation(SIGMOID, 1.0)

    def test_default_alpha(self):
        assert Activation(PARAM_ELLIOT).alpha == 1.5

    def test_alpha_must_be_finite(self):
        with pytest.raises(ConfigError):
            Activation(PARAM_ELLIOT, math.inf)
