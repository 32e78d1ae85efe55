"""Compare the compiled and pure-Python convolution kernels.

    python benchmarks/bench_kernels.py [--repeat 5]

Times raw kernel calls on dense univariate and bivariate inputs, then an
end-to-end Airy resummation under each backend (selected through
STOKES_RESUM_PURE in a subprocess).
"""

import argparse
import os
import random
import subprocess
import sys
import timeit
from fractions import Fraction

from stokes_resum.series import _kernels_py

try:
    from stokes_resum.series import _kernels as compiled
except ImportError:
    compiled = None


def dense(rng, shape):
    if len(shape) == 1:
        exps = [(i,) for i in range(shape[0])]
    else:
        exps = [(i, j) for i in range(shape[0]) for j in range(shape[1])]
    return [(e, Fraction(rng.randint(-10**6, 10**6), rng.randint(1, 720))) for e in exps]


CASES = {
    "univariate 200 terms": ((200,), (0,), (200,)),
    "bivariate 30x30": ((30, 30), (0, 0), (30, 30)),
}

E2E = "from stokes_resum.resummation import airy_demo; airy_demo({degree})"


def end_to_end(degree, pure):
    env = dict(os.environ, STOKES_RESUM_PURE="1" if pure else "0")
    code = f"import time; t = time.perf_counter(); {E2E.format(degree=degree)}; print(time.perf_counter() - t)"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--degree", type=int, default=40, help="Airy resummation degree for the end-to-end run")
    args = p.parse_args(argv)
    rng = random.Random(0)
    print(f"{'case':<24}{'python (s)':>12}{'compiled (s)':>14}{'speedup':>10}")
    for name, (shape, lo, hi) in CASES.items():
        a, b = dense(rng, shape), dense(rng, shape)
        t_py = min(timeit.repeat(lambda: _kernels_py.convolve(a, b, lo, hi), number=1, repeat=args.repeat))
        if compiled is None:
            print(f"{name:<24}{t_py:>12.4f}{'n/a':>14}{'':>10}")
            continue
        assert compiled.convolve(a, b, lo, hi) == _kernels_py.convolve(a, b, lo, hi)
        t_c = min(timeit.repeat(lambda: compiled.convolve(a, b, lo, hi), number=1, repeat=args.repeat))
        print(f"{name:<24}{t_py:>12.4f}{t_c:>14.4f}{t_py / t_c:>9.1f}x")
    t_py = end_to_end(args.degree, True)
    t_c = end_to_end(args.degree, False)
    print(f"{'airy degree ' + str(args.degree):<24}{t_py:>12.4f}{t_c:>14.4f}{t_py / t_c:>9.1f}x")


if __name__ == "__main__":
    main()
