"""Benchmark the compiled kernels against the pure-Python fallback.

Run after building the extension:

    python benchmarks/bench_kernels.py

Forcing one backend for a whole process works too:
POLLAUDIT_KERNELS=py pytest ... runs the suite on the fallback.
"""

import math
import time

import numpy as np

from pollaudit._kernels import _ref

try:
    from pollaudit._kernels import _fast
except ImportError:
    _fast = None


def timeit(fn, *args, repeat=3):
    best = math.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_log_sf(backend):
    def run():
        acc = 0.0
        for k in range(8400, 8900):
            acc += backend.log_binom_sf(k, 17272, 0.505)
        return acc

    return run


def bench_convolve(backend):
    prior = np.array([backend.log_binom_pmf(k, 4000, 0.51) for k in range(4000 + 1)])
    prior = np.ascontiguousarray(prior[:2100])  # truncated below a threshold

    def run():
        return backend.log_convolve_binom(prior, 6000, 0.51)

    return run


def bench_crossing(backend):
    a = math.log(0.5265 / 0.5)
    b = math.log(0.5 / 0.4735)

    def run():
        return backend.so_crossing_curve(40000, 0.5265, 0, 0, math.log(10), a, b)

    return run


def main():
    rows = []
    for name, make in [
        ("log_binom_sf x500 @ n=17272", bench_log_sf),
        ("log-space convolution 2100x6001", bench_convolve),
        ("per-ballot crossing curve, 40k ballots", bench_crossing),
    ]:
        t_ref, out_ref = timeit(make(_ref))
        if _fast is not None:
            t_fast, out_fast = timeit(make(_fast))
            if isinstance(out_ref, np.ndarray):
                mask = np.isfinite(out_ref)
                assert np.allclose(out_ref[mask], np.asarray(out_fast)[mask], rtol=1e-9)
            else:
                assert math.isclose(out_ref, out_fast, rel_tol=1e-9)
            rows.append((name, t_ref, t_fast, t_ref / t_fast))
        else:
            rows.append((name, t_ref, None, None))

    print(f"{'kernel':45s} {'python':>10s} {'compiled':>10s} {'speedup':>8s}")
    for name, t_ref, t_fast, speedup in rows:
        if t_fast is None:
            print(f"{name:45s} {t_ref * 1e3:9.1f}ms {'n/a':>10s} {'n/a':>8s}")
        else:
            print(f"{name:45s} {t_ref * 1e3:9.1f}ms {t_fast * 1e3:9.1f}ms {speedup:7.1f}x")


if __name__ == "__main__":
    main()
