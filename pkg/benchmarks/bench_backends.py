"""Compare the compiled LSTM kernel against the pure-numpy fallback.

Times the fused sequence forward and backward at training-relevant shapes
and prints a speedup table. Run from anywhere:

    python3 benchmarks/bench_backends.py
"""

import time

import numpy as np

from sentasr.numerics import _kernels_py

try:
    from sentasr.numerics import _kernels
except ImportError:
    _kernels = None


def _time(fn, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench(mod, t_len, bsz, hidden, dtype):
    rng = np.random.default_rng(0)
    xp = rng.standard_normal((t_len, bsz, 4 * hidden)).astype(dtype)
    w_h = (rng.standard_normal((hidden, 4 * hidden)) * 0.1).astype(dtype)
    h, cache = mod.lstm_forward(xp, w_h)
    d_h = rng.standard_normal(h.shape).astype(dtype)
    fwd = _time(lambda: mod.lstm_forward(xp, w_h))
    bwd = _time(lambda: mod.lstm_backward(d_h, w_h, cache))
    return fwd, bwd


def main():
    shapes = [(40, 16, 64), (100, 16, 64), (100, 16, 512), (25, 1, 512)]
    print(f"{'T':>4} {'B':>3} {'H':>4} {'dtype':>8} | "
          f"{'numpy fwd':>10} {'numpy bwd':>10} | "
          f"{'cython fwd':>10} {'cython bwd':>10} | {'speedup':>8}")
    for t_len, bsz, hidden in shapes:
        for dtype in (np.float32, np.float64):
            pf, pb = bench(_kernels_py, t_len, bsz, hidden, dtype)
            if _kernels is None:
                print(f"{t_len:>4} {bsz:>3} {hidden:>4} {np.dtype(dtype).name:>8} | "
                      f"{pf * 1e3:>8.2f}ms {pb * 1e3:>8.2f}ms | "
                      f"{'n/a':>10} {'n/a':>10} | {'n/a':>8}")
                continue
            cf, cb = bench(_kernels, t_len, bsz, hidden, dtype)
            speed = (pf + pb) / (cf + cb)
            print(f"{t_len:>4} {bsz:>3} {hidden:>4} {np.dtype(dtype).name:>8} | "
                  f"{pf * 1e3:>8.2f}ms {pb * 1e3:>8.2f}ms | "
                  f"{cf * 1e3:>8.2f}ms {cb * 1e3:>8.2f}ms | "
                  f"{speed:>7.1f}x")
    if _kernels is None:
        print("\ncompiled kernels unavailable; showing fallback only")


if __name__ == "__main__":
    main()
