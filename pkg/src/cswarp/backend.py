"""Selects the compiled hot-kernel implementation, falling back to numpy.

Set CSWARP_BACKEND=python to force the fallback (used by the benchmark and
for debugging). `BACKEND` reports which implementation is active.
"""

import os

from . import _reference
from ._reference import BORDER_CLAMP, BORDER_ZEROS, SNAP  # noqa: F401

_impl = _reference
BACKEND = "python"

if os.environ.get("CSWARP_BACKEND", "").lower() not in ("python", "reference"):
    try:
        from . import _core

        _impl = _core
        BACKEND = "native"
    except ImportError:
        pass


import numpy as np


def _c2(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def rbf_displacement_wendland(pts, centers, coeffs, alpha):
    return _impl.rbf_displacement_wendland(_c2(pts), _c2(centers), _c2(coeffs), alpha)


def rbf_displacement_tps(pts, centers, coeffs):
    return _impl.rbf_displacement_tps(_c2(pts), _c2(centers), _c2(coeffs))


def warp_bilinear(img, fx, fy, border):
    return _impl.warp_bilinear(_c2(img), _c2(fx), _c2(fy), border)


def warp_bilinear_grad(img, fx, fy, border):
    return _impl.warp_bilinear_grad(_c2(img), _c2(fx), _c2(fy), border)
