"""Compare the compiled and pure-python pseudo-likelihood kernels.

Usage: python3 benchmarks/bench_kernels.py
"""

import time

import numpy as np

from dosepref._kernels import _pykernel

try:
    from dosepref._kernels import _cykernel
except ImportError:
    _cykernel = None


def make_inputs(n, m, q, seed=0):
    rng = np.random.default_rng(seed)
    qy = rng.normal(size=(n, m))
    qz = rng.normal(size=(n, m))
    xw = np.column_stack([np.ones(n), rng.normal(size=(n, q - 1))])
    quad_w = np.full(m, 0.05)
    quad_w[0] = quad_w[-1] = 0.025
    theta = rng.normal(size=q)
    return (qy, qz, rng.normal(size=n), rng.normal(size=n),
            np.ascontiguousarray(xw), quad_w, theta, 0.4)


def bench(fn, args, repeat=20):
    fn(*args)  # warm up
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat


def main():
    print(f"{'n':>7} {'m':>5} {'q':>2} {'python (ms)':>12} {'cython (ms)':>12} {'speedup':>8}")
    for n, m, q in [(100, 241, 1), (500, 241, 1), (1000, 241, 3), (20000, 241, 3)]:
        args = make_inputs(n, m, q)
        t_py = bench(_pykernel.accumulate, args)
        if _cykernel is None:
            print(f"{n:>7} {m:>5} {q:>2} {1e3 * t_py:>12.3f} {'n/a':>12}")
            continue
        t_cy = bench(_cykernel.accumulate, args)
        # agreement check while we are here
        out_py, out_cy = _pykernel.accumulate(*args), _cykernel.accumulate(*args)
        assert abs(out_py[0] - out_cy[0]) < 1e-8 * max(1.0, abs(out_py[0]))
        print(f"{n:>7} {m:>5} {q:>2} {1e3 * t_py:>12.3f} {1e3 * t_cy:>12.3f} {t_py / t_cy:>8.2f}")


if __name__ == "__main__":
    main()
