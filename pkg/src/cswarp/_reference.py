"""Pure-numpy implementations of the per-pixel hot kernels.

These are the fallback for the compiled extension in `_core.pyx`; both
must keep identical semantics (see benchmarks/bench_backends.py for the
agreement check). Exact zeros outside the Wendland support are load-bearing:
callers rely on bit-exact zero displacement there.
"""

import numpy as np

# Sampling coordinates within this distance of an integer pixel index are
# snapped onto it, so that fields that are analytically grid-aligned (e.g.
# the identity) survive the frame-unit round trip bit-exactly.
SNAP = 1e-9

BORDER_CLAMP = 0
BORDER_ZEROS = 1


def rbf_displacement_wendland(pts, centers, coeffs, alpha):
    """Sum of Wendland psi_{3,1} terms: (P, 2) displacement at query points."""
    d = np.sqrt(((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=-1))
    t = d / alpha
    phi = np.where(t < 1.0, (1.0 - t) ** 4 * (4.0 * t + 1.0), 0.0)
    return phi @ coeffs


def rbf_displacement_tps(pts, centers, coeffs):
    """Sum of r^2 log r terms: (P, 2) displacement at query points."""
    d2 = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.where(d2 > 0.0, 0.5 * d2 * np.log(np.where(d2 > 0.0, d2, 1.0)), 0.0)
    return phi @ coeffs


def _split_weights(f):
    i0 = np.floor(f).astype(np.int64)
    w = f - i0
    hi = w > 1.0 - SNAP
    i0[hi] += 1
    w[hi] = 0.0
    w[w < SNAP] = 0.0
    return i0, w


def _gather(img, ix, iy, border):
    h, w = img.shape[:2]
    if border == BORDER_CLAMP:
        return img[np.clip(iy, 0, h - 1), np.clip(ix, 0, w - 1)]
    valid = (ix >= 0) & (ix < w) & (iy >= 0) & (iy < h)
    out = img[np.clip(iy, 0, h - 1), np.clip(ix, 0, w - 1)]
    return out * valid[:, None]


def warp_bilinear(img, fx, fy, border):
    """Bilinear gather from img (H, W, C) at fractional pixel coords (P,)."""
    x0, wx = _split_weights(fx)
    y0, wy = _split_weights(fy)
    v00 = _gather(img, x0, y0, border)
    v10 = _gather(img, x0 + 1, y0, border)
    v01 = _gather(img, x0, y0 + 1, border)
    v11 = _gather(img, x0 + 1, y0 + 1, border)
    wxc = wx[:, None]
    wyc = wy[:, None]
    top = (1.0 - wxc) * v00 + wxc * v10
    bot = (1.0 - wxc) * v01 + wxc * v11
    return (1.0 - wyc) * top + wyc * bot


def warp_bilinear_grad(img, fx, fy, border):
    """As warp_bilinear, but also returns d(value)/dfx and d(value)/dfy."""
    x0, wx = _split_weights(fx)
    y0, wy = _split_weights(fy)
    v00 = _gather(img, x0, y0, border)
    v10 = _gather(img, x0 + 1, y0, border)
    v01 = _gather(img, x0, y0 + 1, border)
    v11 = _gather(img, x0 + 1, y0 + 1, border)
    wxc = wx[:, None]
    wyc = wy[:, None]
    top = (1.0 - wxc) * v00 + wxc * v10
    bot = (1.0 - wxc) * v01 + wxc * v11
    val = (1.0 - wyc) * top + wyc * bot
    gx = (1.0 - wyc) * (v10 - v00) + wyc * (v11 - v01)
    gy = (1.0 - wxc) * (v01 - v00) + wxc * (v11 - v10)
    return val, gx, gy
