"""Benchmark the compiled extension against the pure-Python fallback.

Runs the two hot kernels (RBF field evaluation and bilinear warping)
through both implementations on identical inputs, checks agreement, and
prints a timing table. Usage:

    python3 benchmarks/bench_backends.py [--size 256] [--centers 25] [--repeats 5]
"""

import argparse
import time

import numpy as np

from cswarp import _reference

try:
    from cswarp import _core
except ImportError:
    _core = None


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench(name, native_fn, python_fn, repeats, check):
    t_py, out_py = timeit(python_fn, repeats)
    row = f"{name:<28} python {t_py * 1e3:9.2f} ms"
    if native_fn is not None:
        t_na, out_na = timeit(native_fn, repeats)
        ok = check(out_na, out_py)
        row += f"   native {t_na * 1e3:9.2f} ms   speedup {t_py / t_na:6.2f}x"
        row += "   agree" if ok else "   MISMATCH"
    else:
        row += "   native        n/a (extension not built)"
    print(row)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=256, help="image side length")
    ap.add_argument("--centers", type=int, default=25)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    n = args.size
    pts = rng.uniform(-1, 1, (n * n, 2))
    centers = rng.uniform(-1, 1, (args.centers, 2))
    coeffs = rng.uniform(-0.2, 0.2, (args.centers, 2))
    img = rng.random((n, n, 3))
    fx = rng.uniform(0, n - 1, n * n)
    fy = rng.uniform(0, n - 1, n * n)

    allclose = lambda a, b: np.allclose(a, b, atol=1e-12)

    print(f"grid of {n * n} points, {args.centers} centers, best of {args.repeats}\n")
    bench(
        "wendland field (alpha=0.8)",
        None if _core is None else (lambda: _core.rbf_displacement_wendland(pts, centers, coeffs, 0.8)),
        lambda: _reference.rbf_displacement_wendland(pts, centers, coeffs, 0.8),
        args.repeats,
        allclose,
    )
    bench(
        "tps field",
        None if _core is None else (lambda: _core.rbf_displacement_tps(pts, centers, coeffs)),
        lambda: _reference.rbf_displacement_tps(pts, centers, coeffs),
        args.repeats,
        allclose,
    )
    bench(
        "bilinear warp (rgb)",
        None if _core is None else (lambda: _core.warp_bilinear(img, fx, fy, _reference.BORDER_CLAMP)),
        lambda: _reference.warp_bilinear(img, fx, fy, _reference.BORDER_CLAMP),
        args.repeats,
        allclose,
    )
    bench(
        "bilinear warp + gradients",
        None if _core is None else (lambda: _core.warp_bilinear_grad(img, fx, fy, _reference.BORDER_CLAMP)),
        lambda: _reference.warp_bilinear_grad(img, fx, fy, _reference.BORDER_CLAMP),
        args.repeats,
        lambda a, b: all(np.allclose(x, y, atol=1e-12) for x, y in zip(a, b)),
    )


if __name__ == "__main__":
    main()
