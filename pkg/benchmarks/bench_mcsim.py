"""Compare the compiled and pure-Python Monte-Carlo trial kernels.

    python3 benchmarks/bench_mcsim.py [--trials N] [--repeat R]

Both kernels run the same configurations with the same seed; the script
checks that their outputs are identical and reports trials per second.
"""

import argparse
import time

import numpy as np

from qirbench.mcsim import _kernel_py

try:
    from qirbench.mcsim import _kernel as _kernel_c
except ImportError:
    _kernel_c = None

# (nesting, p0, swap probability, cutoff slots or -1)
CASES = [
    (0, 0.01, 1.0, -1),
    (1, 0.01, 0.81, -1),
    (2, 0.02, 0.68, -1),
    (2, 0.02, 0.68, 50),
]


def best_time(kernel, case, trials, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = kernel.run_trials(*case, 1, 0, trials)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _kernel_c is None:
        print("compiled kernel not built; only the Python kernel is available")
    print(f"{'case (n, p0, swap, cutoff)':<30}{'python t/s':>14}{'compiled t/s':>16}{'speedup':>10}")
    for case in CASES:
        t_py, out_py = best_time(_kernel_py, case, args.trials, args.repeat)
        line = f"{str(case):<30}{args.trials / t_py:>14.0f}"
        if _kernel_c is not None:
            t_c, out_c = best_time(_kernel_c, case, args.trials, args.repeat)
            if not (np.array_equal(out_py[0], out_c[0]) and out_py[1] == out_c[1]):
                raise SystemExit(f"kernels disagree on {case}")
            line += f"{args.trials / t_c:>16.0f}{t_py / t_c:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
