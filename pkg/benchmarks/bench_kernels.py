"""Time the numba and numpy flavours of each hot kernel on production-sized inputs.

    python benchmarks/bench_kernels.py [--repeat N] [--size N]

The numba flavour is compiled once before timing.  Both flavours are
checked for agreement on every run.
"""

import argparse
import math
import timeit

import numpy as np

from qndtomo import _accel, kernels


def cases(n):
    rng = np.random.default_rng(0)
    crandn = lambda *s: rng.standard_normal(s) + 1j * rng.standard_normal(s)
    x = np.linspace(-10, 10, n, endpoint=False)
    xm = np.linspace(-20, 20, 2 * n, endpoint=False)
    k = 2 * math.pi * np.fft.fftfreq(2 * n, xm[1] - xm[0])
    n_a, n_s = 256, 2 * n
    ang = np.linspace(0, math.pi, n_a, endpoint=False)
    xb = x[:: max(1, n // 256)]
    return {
        "shifted_spectra": (crandn(2 * n), k, 0.7 * x),
        "apply_row_phase": (crandn(n, 2 * n), crandn(n), x, xm, -0.25, 0.7),
        "wigner_correlation": (crandn(2 * n), n),
        "backproject": (rng.standard_normal((n_a, n_s)), -20.0, 40.0 / n_s, np.cos(ang), np.sin(ang),
                        np.full(n_a, 1.0 / n_a), xb, xb),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--size", type=int, default=1024, help="signal grid points")
    args = ap.parse_args(argv)
    if not _accel.NUMBA_AVAILABLE:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"grid n={args.size}, best of {args.repeat}")
    print(f"{'kernel':<20}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}{'max diff':>11}")
    for name, inputs in cases(args.size).items():
        slow = getattr(kernels, f"{name}_numpy")
        fast = getattr(kernels, f"{name}_numba")
        diff = float(np.max(np.abs(slow(*inputs) - fast(*inputs))))
        t_np = min(timeit.repeat(lambda: slow(*inputs), number=1, repeat=args.repeat))
        t_nb = min(timeit.repeat(lambda: fast(*inputs), number=1, repeat=args.repeat))
        print(f"{name:<20}{1e3 * t_np:>12.2f}{1e3 * t_nb:>12.2f}{t_np / t_nb:>10.2f}{diff:>11.1e}")


if __name__ == "__main__":
    main()
