"""Compare the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints best-of-N time per call for each kernel and the speedup. Exits with an
error if the compiled extension is not built.
"""

import argparse
import sys
import timeit

import numpy as np

from cascade_st import _kernels_py

try:
    from cascade_st import _kernels as _kernels_c
except ImportError:
    sys.exit("compiled extension not built; run `pip install -e . --no-build-isolation` first")


def cases(rng):
    short = rng.integers(0, 50, 20).tolist(), rng.integers(0, 50, 22).tolist()
    long = rng.integers(0, 500, 400).tolist(), rng.integers(0, 500, 380).tolist()
    frame = rng.uniform(-0.5, 0.5, 480)  # 30 ms at 16 kHz
    return [
        ("edit_ops 20x22 tokens", "edit_ops", short),
        ("edit_ops 400x380 tokens", "edit_ops", long),
        ("rms_dbfs 480 samples", "rms_dbfs", (frame,)),
    ]


def best_time(fn, args, repeat):
    timer = timeit.Timer(lambda: fn(*args))
    number, _ = timer.autorange()
    return min(timer.repeat(repeat, number)) / number


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<26}{'python':>12}{'cython':>12}{'speedup':>10}")
    for label, name, call_args in cases(rng):
        py_fn, c_fn = getattr(_kernels_py, name), getattr(_kernels_c, name)
        if py_fn(*call_args) != c_fn(*call_args):
            sys.exit(f"{label}: implementations disagree")
        t_py = best_time(py_fn, call_args, args.repeat)
        t_c = best_time(c_fn, call_args, args.repeat)
        print(f"{label:<26}{t_py * 1e6:>10.1f}us{t_c * 1e6:>10.1f}us{t_py / t_c:>9.1f}x")


if __name__ == "__main__":
    main()
