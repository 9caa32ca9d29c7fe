"""Benchmark the hot kernels: numba @njit loops vs the pure-numpy fallback.

Usage:
    python benchmarks/bench_accel.py

Also times one full sampler iteration at a few problem sizes under the
active backend; rerun with HDPSLICE_DISABLE_NUMBA=1 to time the fallback
end to end.
"""

import os
import time

import numpy as np

from hdpslice import accel
from hdpslice.generator import generate_labels, generate_observations
from hdpslice.kernels import MultinomialKernel
from hdpslice.sampler import run
from hdpslice.state import Hyperparams
from hdpslice.streams import GEN_LABELS, GEN_OBS, substream


def timeit(fn, *args, repeat=200):
    fn(*args)  # warm up (and trigger jit compilation)
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat


def bench_kernels():
    rng = np.random.default_rng(0)
    sizes = [(100, 16), (1000, 32), (5000, 64)]
    backends = [("numpy", accel.numpy_kernels())]
    try:
        backends.append(("numba", accel.numba_kernels()))
    except ImportError:
        print("numba unavailable; benchmarking the numpy path only")

    print(f"{'case':>24} " + " ".join(f"{name:>12}" for name, _ in backends))
    for n, m in sizes:
        weights = rng.random(m)
        thresholds = rng.random(n) * 0.5
        logw = np.log(rng.random((n, m)) + 1e-9)
        lengths = rng.integers(1, m + 1, size=n)
        uniforms = rng.random(n)

        row = [t for _, (la, _) in backends
               for t in [timeit(la, weights, thresholds)]]
        print(f"{f'last_admissible {n}x{m}':>24} "
              + " ".join(f"{t * 1e6:9.1f} us" for t in row))
        row = [t for _, (_, cr) in backends
               for t in [timeit(cr, logw, lengths, uniforms)]]
        print(f"{f'categorical_rows {n}x{m}':>24} "
              + " ".join(f"{t * 1e6:9.1f} us" for t in row))


def bench_end_to_end():
    print(f"\nfull sampler, backend = {accel.BACKEND} "
          f"(HDPSLICE_DISABLE_NUMBA={os.environ.get('HDPSLICE_DISABLE_NUMBA', '')!r})")
    for n in (30, 100, 300):
        kern = MultinomialKernel(10, 0.1)
        truth = generate_labels(3.0, 1.0, [n] * 10, substream(7, GEN_LABELS))
        data = generate_observations(truth, kern, substream(7, GEN_OBS))
        hp = Hyperparams(gamma0=3.0, alpha0=1.0, max_iterations=50, seed=1,
                         initial_t_cap=1, initial_k_cap=1)
        t0 = time.perf_counter()
        run(data, kern, hp)
        dt = time.perf_counter() - t0
        print(f"  J=10, n_j={n:4d}: {dt:6.2f} s for 50 iterations "
              f"({dt / 50 * 1e3:6.1f} ms/iteration)")


if __name__ == "__main__":
    bench_kernels()
    bench_end_to_end()
