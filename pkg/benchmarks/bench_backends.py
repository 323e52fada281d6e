"""Time the numba kernels against the numpy fallback.

    python benchmarks/bench_backends.py [--n 256] [--repeat 20]

Both backends are imported side by side from :mod:`activepenalty.kernels`;
the environment flag only picks which one the solvers use. Each kernel is
called once before timing so numba compilation is excluded. Outputs are
compared for agreement before any timing is reported.
"""
import argparse
import math
import timeit

import numpy as np

from activepenalty import kernels
from activepenalty.extension import extension_stencil
from activepenalty.geometry import Circle
from activepenalty.grid import PeriodicGrid


def cases(n, rng):
    h = 2.0 * math.pi / n
    f = rng.standard_normal((n, n))
    g = rng.standard_normal((n, n))
    grid = PeriodicGrid(2, n)
    st = extension_stencil(Circle(math.pi, math.pi, 0.5), grid, 0.45, "compact", False)
    ii, jj = st.nodes
    nx, ny = st.normal[:, 0], st.normal[:, 1]
    f1 = rng.standard_normal(n * 8)
    h1 = 2.0 * math.pi / f1.size
    return {
        "laplacian_1d (acc 4)": lambda K: K.laplacian_1d(f1, h1, 4),
        "laplacian_2d (acc 2)": lambda K: K.laplacian_2d(f, h, 2),
        "laplacian_2d (acc 4)": lambda K: K.laplacian_2d(f, h, 4),
        "advect_2d": lambda K: K.advect_2d(f, g, f, g, h),
        "normal_derivs_2d (k 2)": lambda K: K.normal_derivs_2d(f, ii, jj, st.weights, nx, ny,
                                                              h, 2, 2),
    }


def _flat(out):
    if isinstance(out, tuple):
        return np.concatenate([np.ravel(o) for o in out])
    return np.ravel(out)


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--n", type=int, default=256)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    if kernels.NUMBA is None:
        raise SystemExit("numba is not importable; nothing to compare")
    rng = np.random.default_rng(0)
    print(f"grid {args.n}^2, best of {args.repeat} calls, active backend: {kernels.ACTIVE.name}")
    print(f"{'kernel':26s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s} {'max diff':>10s}")
    for name, call in cases(args.n, rng).items():
        a = _flat(call(kernels.NUMPY))
        b = _flat(call(kernels.NUMBA))
        diff = float(np.max(np.abs(a - b)) / max(1.0, np.max(np.abs(a))))
        t_np = min(timeit.repeat(lambda: call(kernels.NUMPY), number=1, repeat=args.repeat))
        t_nb = min(timeit.repeat(lambda: call(kernels.NUMBA), number=1, repeat=args.repeat))
        print(f"{name:26s} {1e3 * t_np:10.3f} {1e3 * t_nb:10.3f} {t_np / t_nb:8.2f} {diff:10.2e}")


if __name__ == "__main__":
    main()
