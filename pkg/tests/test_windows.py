import numpy as np
import pytest

from oracles import brute_quantile
from qlstm import (ConfigError, DataError, TimeSeries, WindowConfig,
                   build_training_set, detection_pairs, sample_quantile,
                   window_config_for_dataset)


class TestSampleQuantile:
    def test_exact_median_odd(self):
        assert sample_quantile([1, 2, 3], 0.5) == 2.0

    def test_interpolated(self):
        # h = 3 * 0.25 = 0.75 -> between 1 and 2
        assert sample_quantile([1, 2, 3, 4], 0.25) == 1.75

    def test_singleton(self):
        assert sample_quantile([5], 0.9) == 5.0

    def test_extremes(self):
        data = [3.0, 1.0, 9.0]
        assert sample_quantile(data, 0.0) == 1.0
        assert sample_quantile(data, 1.0) == 9.0

    def test_errors(self):
        with pytest.raises(DataError, match="empty"):
            sample_quantile([], 0.5)
        with pytest.raises(ConfigError):
            sample_quantile([1.0], 1.5)
        with pytest.raises(DataError):
            sample_quantile([1.0, np.inf], 0.5)

    def test_against_brute_force(self, rng):
        for _ in range(300):
            n = int(rng.integers(1, 51))
            data = rng.normal(0, 10, n)
            tau = float(rng.random())
            assert sample_quantile(data, tau) == pytest.approx(
                brute_quantile(data, tau), abs=1e-12)

    def test_monotone_in_tau(self, rng):
        data = rng.normal(0, 1, 37)
        taus = np.sort(rng.random(20))
        qs = [sample_quantile(data, t) for t in taus]
        assert all(a <= b + 1e-15 for a, b in zip(qs, qs[1:]))

    def test_bounds(self, rng):
        data = rng.normal(0, 5, 23)
        for tau in rng.random(20):
            q = sample_quantile(data, float(tau))
            assert data.min() <= q <= data.max()

    def test_affine_equivariance(self, rng):
        data = rng.normal(0, 1, 19)
        a, b = 2.5, -7.0
        for tau in (0.1, 0.33, 0.5, 0.9):
            assert sample_quantile(a * data + b, tau) == pytest.approx(
                a * sample_quantile(data, tau) + b, abs=1e-10)


class TestWindowConfig:
    def test_window_len(self):
        cfg = WindowConfig(9, 3)
        assert cfg.window_len == 3

    def test_indivisible(self):
        with pytest.raises(ConfigError, match="not divisible"):
            WindowConfig(10, 3)

    def test_degenerate(self):
        with pytest.raises(ConfigError):
            WindowConfig(2, 3)
        with pytest.raises(ConfigError):
            WindowConfig(4, 0)

    def test_dataset_defaults(self):
        cfg = window_config_for_dataset("aws_1")
        assert cfg.period_len == 168 and cfg.window_len == 84
        with pytest.raises(ConfigError):
            window_config_for_dataset("nope")


def _series(values):
    return TimeSeries(np.arange(len(values)).astype(float),
                      np.asarray(values, dtype=float))


class TestBuildTrainingSet:
    def test_worked_example_layout(self):
        # ten points, one period of nine split into three windows of three
        x = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0, 5.0, 3.0]
        out = build_training_set(_series(x), WindowConfig(9, 3), 0.5)
        assert len(out) == 1
        expected_inputs = [brute_quantile(x[0:3], 0.5),
                           brute_quantile(x[3:6], 0.5),
                           brute_quantile(x[6:9], 0.5)]
        np.testing.assert_allclose(out.inputs[0], expected_inputs)
        assert out.labels[0] == pytest.approx(brute_quantile(x[1:10], 0.5))
        assert out.origin_indices[0] == 0

    def test_constant_series(self):
        out = build_training_set(_series([4.0] * 20), WindowConfig(9, 3), 0.8)
        assert np.all(out.inputs == 4.0)
        assert np.all(out.labels == 4.0)

    def test_minimum_length_single_pair(self):
        out = build_training_set(_series(np.arange(10.0)), WindowConfig(9, 3), 0.3)
        assert len(out) == 1

    def test_pair_count(self, rng):
        for n in (15, 40, 100):
            series = _series(rng.normal(0, 1, n))
            out = build_training_set(series, WindowConfig(12, 4), 0.5)
            assert len(out) == n - 12

    def test_too_short(self):
        with pytest.raises(DataError, match="shorter than"):
            build_training_set(_series(np.arange(9.0)), WindowConfig(9, 3), 0.5)

    def test_matches_brute_force(self, rng):
        values = rng.normal(0, 3, 60)
        cfg = WindowConfig(12, 3)
        out = build_training_set(_series(values), cfg, 0.9)
        m = cfg.window_len
        for k in range(len(out)):
            for j in range(3):
                window = values[k + j * m: k + (j + 1) * m]
                assert out.inputs[k, j] == pytest.approx(
                    brute_quantile(window, 0.9), abs=1e-12)
            assert out.labels[k] == pytest.approx(
                brute_quantile(values[k + 1: k + 13], 0.9), abs=1e-12)

    def test_windows_partition_period(self):
        # concatenating the w windows reproduces the period exactly
        values = np.arange(30.0)
        cfg = WindowConfig(12, 4)
        m = cfg.window_len
        for k in range(5):
            windows = [values[k + j * m: k + (j + 1) * m] for j in range(4)]
            np.testing.assert_array_equal(np.concatenate(windows),
                                          values[k: k + 12])


class TestDetectionPairs:
    def test_single_pair_observed(self):
        x = list(range(1, 11))
        inputs, observed, idx = detection_pairs(_series(x), WindowConfig(9, 3), 0.5)
        assert observed.tolist() == [10.0]
        assert idx.tolist() == [9]

    def test_index_arithmetic(self, rng):
        series = _series(rng.normal(0, 1, 30))
        _, observed, idx = detection_pairs(series, WindowConfig(8, 2), 0.5)
        np.testing.assert_array_equal(idx, np.arange(8, 30))
        np.testing.assert_array_equal(observed, series.values[8:])

    def test_labels_never_read(self, rng):
        values = rng.normal(0, 1, 40)
        plain = TimeSeries(np.arange(40).astype(float), values)
        labeled = TimeSeries(np.arange(40).astype(float), values,
                             np.ones(40, dtype=bool))
        cfg = WindowConfig(10, 5)
        a = detection_pairs(plain, cfg, 0.7)
        b = detection_pairs(labeled, cfg, 0.7)
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])
