"""Radial basis functions used by the warp.

Two families are supported: the thin-plate spline kernel r^2 log r and the
compactly supported Wendland kernel

    psi(r) = (1 - r/alpha)^4 (4 r/alpha + 1)   for r < alpha, else 0,

normalized so psi(0) = 1 and exactly zero outside the support radius.
An integral-operator construction of the general Wendland family is kept
as a slow, independent cross-check for the closed form.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DomainError


class KernelFamily(str, enum.Enum):
    TPS = "tps"
    WENDLAND31 = "wendland31"


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus its support radius (ignored by TPS)."""

    family: KernelFamily
    alpha: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "family", KernelFamily(self.family))
        if self.family is KernelFamily.WENDLAND31:
            if not np.isfinite(self.alpha) or self.alpha <= 0:
                raise DomainError(f"alpha must be positive, got {self.alpha}")


def _check_radius(r):
    r = np.asarray(r, dtype=float)
    if not np.all(np.isfinite(r)) or np.any(r < 0):
        raise DomainError("radius must be finite and nonnegative")
    return r


def eval_tps(r):
    """Thin-plate spline kernel r^2 ln r, with the limit value 0 at r = 0."""
    r = _check_radius(r)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(r > 0, r * r * np.log(np.where(r > 0, r, 1.0)), 0.0)
    return out if out.ndim else float(out)


def eval_wendland31(r, alpha):
    """Wendland psi_{3,1} with support radius alpha; exactly 0 for r >= alpha."""
    r = _check_radius(r)
    if not np.isfinite(alpha) or alpha <= 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    t = r / alpha
    out = np.where(t < 1.0, (1.0 - t) ** 4 * (4.0 * t + 1.0), 0.0)
    return out if out.ndim else float(out)


def kernel_eval(spec, r):
    """Evaluate the kernel of `spec` at radius r."""
    if spec.family is KernelFamily.TPS:
        return eval_tps(r)
    return eval_wendland31(r, spec.alpha)


def kernel_dr(spec, r):
    """d psi / d r for either family (0 at r = 0 by the limit convention)."""
    r = _check_radius(r)
    if spec.family is KernelFamily.TPS:
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(r > 0, r * (2.0 * np.log(np.where(r > 0, r, 1.0)) + 1.0), 0.0)
        return out if out.ndim else float(out)
    a = spec.alpha
    t = r / a
    out = np.where(t < 1.0, -(20.0 * r / (a * a)) * (1.0 - t) ** 3, 0.0)
    return out if out.ndim else float(out)


def kernel_dalpha(r, alpha):
    """d/d alpha of the Wendland kernel at fixed r; 0 outside the support."""
    r = _check_radius(r)
    if not np.isfinite(alpha) or alpha <= 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    t = r / alpha
    out = np.where(t < 1.0, (20.0 * r * r / alpha**3) * (1.0 - t) ** 3, 0.0)
    return out if out.ndim else float(out)


def _simpson(f, a, b, steps):
    """Composite Simpson of f on [a, b] with `steps` subintervals (made even)."""
    if b <= a:
        return 0.0
    n = steps + (steps % 2)
    x = np.linspace(a, b, n + 1)
    y = f(x)
    h = (b - a) / n
    return h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum())


def wendland_via_integral(d, k, r, quad_steps=100_000):
    """Wendland psi_{d,k}(r) built from the defining integral operator.

    Applies I psi(r) = integral_r^inf t psi(t) dt (the integrand vanishes for
    t >= 1) k times to the truncated power (1 - r)_+^(floor(d/2) + k + 1),
    by composite Simpson quadrature. Not normalized; slow for k > 1 because
    the quadratures nest. Used as an oracle for the closed form.
    """
    if not (isinstance(d, (int, np.integer)) and d >= 1):
        raise DomainError(f"d must be a positive integer, got {d}")
    if not (isinstance(k, (int, np.integer)) and k >= 1):
        raise DomainError(f"k must be a positive integer, got {k}")
    if quad_steps < 100:
        raise DomainError("quad_steps must be at least 100")
    r = float(_check_radius(r))
    v = d // 2 + k + 1

    def level(j, t):
        t = np.asarray(t, dtype=float)
        if j == 0:
            return np.where(t < 1.0, np.maximum(1.0 - t, 0.0) ** v, 0.0)
        flat = t.ravel()
        out = np.array(
            [_simpson(lambda s: s * level(j - 1, s), ti, 1.0, quad_steps) for ti in flat]
        )
        return out.reshape(t.shape)

    if r >= 1.0:
        return 0.0
    return float(level(k, r))
