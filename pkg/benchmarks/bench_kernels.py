"""Compare the compiled and pure-Python integration kernels.

Run:  python3 benchmarks/bench_kernels.py [--repeat 3]
"""
import argparse
import time

import numpy as np

from torusgen._backend import available_backends, get_kernels
from torusgen.perturbation import example_s6


def _time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(k):
    packed = example_s6().packed()
    t_out = np.arange(1, 51, dtype=float)
    return {
        "return_time 2++ b=1.2": lambda: k.return_time(1.2, 1.0, 0.5, 1000.0, 1e-12, 1e-14, 1e-9, 10**7)[0],
        "return_time 0e b=1.5": lambda: k.return_time(1.5, 0.0, 0.5, 1000.0, 1e-12, 1e-14, 1e-9, 10**7)[0],
        "flow 50 periods eps=1e-2": lambda: k.flow((1.5, 0.0), 0.0, t_out, 0.5, 0, 1e-2, packed,
                                                   1e-11, 1e-13, 2.0, 2.0, 10**7)[0][-1, 0],
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    names = available_backends()
    results = {n: {c: _time(f, args.repeat) for c, f in cases(get_kernels(n)).items()} for n in names}
    print(f"{'case':28s}" + "".join(f"{n:>14s}" for n in names) + ("   speedup" if len(names) > 1 else ""))
    for c in results[names[0]]:
        row = f"{c:28s}" + "".join(f"{results[n][c][0] * 1e3:12.2f}ms" for n in names)
        if len(names) > 1:
            ref, fast = results["python"][c], results["compiled"][c]
            row += f"   {ref[0] / fast[0]:7.1f}x  (|diff| = {abs(ref[1] - fast[1]):.1e})"
        print(row)


if __name__ == "__main__":
    main()
