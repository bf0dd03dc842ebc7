"""Compare the compiled and numpy kernel backends on production-sized inputs.

    python benchmarks/bench_kernels.py [--repeat 3]
"""

import argparse
import timeit

import numpy as np

from fermieq import derive
from fermieq.kernels import backends
from fermieq.states import concentrated_state, momentum_correlation
from fermieq.timeavg import _pair_table


def profile_case(L):
    h = (L - 1) // 2
    s = np.sort(np.sin(2 * np.pi * (np.arange(-h, h + 1) + 0.5) / L))
    return (s, 1.0 / (4 * np.sin(np.pi / L) * 3 * L))


def pair_case(L, ratio):
    cfg = derive(1, L, L // 3 | 1, 1 / 3, 0.5)
    a, b, f, c = _pair_table(cfg, np.array([L // 3]), cfg.half)
    order = np.argsort(f, kind="stable")
    G = momentum_correlation(concentrated_state(cfg))
    return (f[order], a[order], b[order], c[order], G, ratio * L)


def bench(label, name, args, repeat):
    rows = []
    ref = None
    for bname, impl in sorted(backends().items()):
        fn = getattr(impl, name)
        out = fn(*args)
        best = min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))
        if ref is None:
            ref = out
        diff = float(np.max(np.abs(np.subtract(out, ref)) / np.maximum(np.abs(ref), 1e-300)))
        rows.append((label, bname, best, diff))
    base = next(r[2] for r in rows if r[1] == "python")
    for label_, bname, best, diff in rows:
        print(f"{label_:<34} {bname:<8} {best * 1e3:10.2f} ms  x{base / best:6.1f}  rel diff {diff:.1e}")


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()
    print(f"{'case':<34} {'backend':<8} {'best':>13}  {'speedup':>7}")
    for L in (10001, 40001):
        bench(f"window integrals L={L}", "window_profile_integrals", profile_case(L), args.repeat)
    for L, r in ((201, 3.0), (401, 2.5)):
        bench(f"tent pair sum L={L} tau={r}L", "tent_pair_sum", pair_case(L, r), args.repeat)


if __name__ == "__main__":
    main()
