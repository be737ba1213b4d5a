"""Benchmark the numba kernels against the pure-numpy fallbacks.

Times the raw conv/pool kernels and one full small-CNN training step on a
PAMAP2-shaped batch under both backends. Run:

    python benchmarks/bench_kernels.py [--repeats 20]
"""

import argparse
import time

import numpy as np

from harood import kernels
from harood.algorithms import AlgorithmConfig, DomainBatch, create_algorithm
from harood.models import BackboneConfig, build_model

SHAPE = (27, 1, 200)  # PAMAP2-like windows
BATCH = 64


def time_call(fn, repeats):
    fn()  # warmup (includes numba JIT)
    best = min(timeit_once(fn) for _ in range(repeats))
    return best


def timeit_once(fn):
    start = time.perf_counter()
    fn()
    return time.perf_counter() - start


def bench_kernels(repeats):
    rng = np.random.default_rng(0)
    x = rng.normal(size=(BATCH, 16, 200))
    w = rng.normal(size=(32, 16, 6))
    b = rng.normal(size=32)
    dout = rng.normal(size=(BATCH, 32, 195))
    pooled, idx = kernels.maxpool2_forward(x)
    dpool = rng.normal(size=pooled.shape)
    return {
        "conv_forward": time_call(lambda: kernels.conv1d_forward(x, w, b), repeats),
        "conv_backward": time_call(lambda: kernels.conv1d_backward(x, w, dout),
                                   repeats),
        "pool_forward": time_call(lambda: kernels.maxpool2_forward(x), repeats),
        "pool_backward": time_call(
            lambda: kernels.maxpool2_backward(idx, dpool, 200), repeats),
    }


def bench_train_step(repeats):
    rng = np.random.default_rng(1)
    config = BackboneConfig(family="cnn", input_shape=SHAPE, capacity="small")
    model = build_model(config, class_count=12, seed=0)
    algo = create_algorithm("erm", AlgorithmConfig(lr=0.01), seed=0)
    batches = [
        DomainBatch(inputs=rng.normal(size=(BATCH, *SHAPE)),
                    labels=rng.integers(0, 12, BATCH), domain_id=d)
        for d in range(3)
    ]
    return time_call(lambda: algo.step(batches, model), repeats)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=10)
    args = parser.parse_args()

    results = {}
    for backend in ("numpy", "numba"):
        kernels.set_backend(backend)
        rows = bench_kernels(args.repeats)
        rows["train_step_small_cnn"] = bench_train_step(args.repeats)
        results[backend] = rows

    width = max(len(k) for k in results["numpy"])
    print(f"{'benchmark':<{width}}  {'numpy':>10}  {'numba':>10}  {'speedup':>8}")
    for key in results["numpy"]:
        t_np = results["numpy"][key]
        t_nb = results["numba"][key]
        print(f"{key:<{width}}  {t_np * 1e3:>8.2f}ms  {t_nb * 1e3:>8.2f}ms  "
              f"{t_np / t_nb:>7.2f}x")


if __name__ == "__main__":
    main()
