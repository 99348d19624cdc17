#!/usr/bin/env python3
"""Compare the numba and pure-numpy LSTM kernel backends.

Times full training epochs (forward + backward + update) on synthetic
quantile training sets of a few sizes. The numba path pays a one-off JIT
compile on first call; a warmup epoch is excluded from the timings.

    python3 benchmarks/kernel_benchmark.py [--epochs 30]
"""

import argparse
import time

from qlstm import (Activation, TrainConfig, WindowConfig, backend,
                   build_training_set, generate_synthetic, init_model, train)
from qlstm.activations import PARAM_ELLIOT


def make_data(n_points, period_len, window_count):
    series = generate_synthetic("sine", n_points, seed=0, noise_std=0.05)
    return build_training_set(series, WindowConfig(period_len, window_count), 0.9)


def time_training(backend_name, data, hidden, epochs):
    backend.use_backend(backend_name)
    warm = init_model(1, hidden, Activation(PARAM_ELLIOT, 1.5), seed=0)
    train(warm, data, TrainConfig(epochs=1, seed=0))    # JIT warmup / cache
    model = init_model(1, hidden, Activation(PARAM_ELLIOT, 1.5), seed=0)
    started = time.perf_counter()
    train(model, data, TrainConfig(epochs=epochs, seed=0))
    elapsed = time.perf_counter() - started
    backend.use_backend("auto")
    return elapsed / epochs


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--epochs", type=int, default=30)
    args = parser.parse_args()

    cases = [
        ("small  (n=2000, t=100, w=4,  H=16)", make_data(2000, 100, 4), 16),
        ("wide   (n=2000, t=100, w=20, H=16)", make_data(2000, 100, 20), 16),
        ("large  (n=8000, t=152, w=4,  H=32)", make_data(8000, 152, 4), 32),
    ]
    print(f"{'case':38s} {'numpy ms/epoch':>15s} {'numba ms/epoch':>15s} {'speedup':>8s}")
    for name, data, hidden in cases:
        t_numpy = time_training("numpy", data, hidden, args.epochs)
        t_numba = time_training("numba", data, hidden, args.epochs)
        print(f"{name:38s} {t_numpy * 1e3:15.2f} {t_numba * 1e3:15.2f} "
              f"{t_numpy / t_numba:7.2f}x")


if __name__ == "__main__":
    main()
