"""Benchmark the compiled split kernel against the numpy fallback.

Trains the same boosted ensemble with each backend on a synthetic design
matrix sized like the acceptance corpus, reports wall times, and checks
the two backends still agree prediction-for-prediction.

    python benchmarks/bench_split_kernel.py [--rows 3200] [--cols 290]
"""
import argparse
import sys
import time

import numpy as np

from fakerank import _split_kernel_py
from fakerank.scoring import TrainConfig, train_gbdt

try:
    from fakerank import _split_kernel
except ImportError:
    _split_kernel = None


def make_matrix(rows, cols, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(rows, cols))
    x[:, :20] = rng.poisson(1.0, size=(rows, 20))  # tie-heavy columns
    logits = x[:, 0] * 1.5 + x[:, 1] - 0.5 * x[:, 2] + rng.normal(size=rows)
    y = (logits > np.quantile(logits, 0.9)).astype(int)
    return x, y


def run(kernel, x, y, config, repeats):
    timings = []
    model = None
    for _ in range(repeats):
        started = time.perf_counter()
        model = train_gbdt(x, y, config, kernel=kernel)
        timings.append(time.perf_counter() - started)
    return min(timings), model


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--rows", type=int, default=3200)
    parser.add_argument("--cols", type=int, default=290)
    parser.add_argument("--rounds", type=int, default=40)
    parser.add_argument("--depth", type=int, default=6)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    x, y = make_matrix(args.rows, args.cols)
    config = TrainConfig(max_depth=args.depth, learning_rate=0.3,
                         num_rounds=args.rounds)
    print(f"matrix {args.rows}x{args.cols}, depth {args.depth}, "
          f"{args.rounds} rounds, best of {args.repeats}")

    t_py, m_py = run(_split_kernel_py, x, y, config, args.repeats)
    print(f"  python kernel : {t_py:8.3f}s")

    if _split_kernel is None:
        print("  cython kernel : not built (pip install -e . rebuilds it)")
        return 0

    t_cy, m_cy = run(_split_kernel, x, y, config, args.repeats)
    print(f"  cython kernel : {t_cy:8.3f}s   ({t_py / t_cy:.2f}x faster)")

    p_py = m_py.predict_proba(x)
    p_cy = m_cy.predict_proba(x)
    if not np.array_equal(p_py, p_cy):
        print("  MISMATCH: backends disagree on predictions", file=sys.stderr)
        return 1
    print("  predictions identical across backends")
    return 0


if __name__ == "__main__":
    sys.exit(main())
