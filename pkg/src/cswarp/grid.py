"""Control-point lattice, coordinate frames, and the support-radius clamp.

Coordinates live either in a normalized frame ([-1, 1]^2 with pixel center
(i, j) at ((i + 0.5) * 2 / W - 1, (j + 0.5) * 2 / H - 1)) or in raw pixel
coordinates (pixel centers at integers, extent [0, W-1] x [0, H-1]).

The support radius of the compactly supported kernel is clamped as

    alpha = lambda_alpha * alpha_hat + D,    alpha_hat in (0, 1),

where D is the largest nearest-neighbour lattice distance sqrt(a^2 + b^2)
(a, b the vertical and horizontal spacings), which also equals the maximum
Delaunay edge length of a regular grid. The clamp guarantees alpha >= D.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .delaunay import delaunay_max_edge  # noqa: F401  (re-exported)


@dataclass(frozen=True)
class Frame:
    width: int
    height: int
    normalized: bool = True

    def __post_init__(self):
        if self.width < 2 or self.height < 2:
            raise DomainError(
                f"frame must be at least 2x2, got {self.width}x{self.height}"
            )

    def extent(self):
        """((x0, x1), (y0, y1)) coordinate extent spanned by control grids."""
        if self.normalized:
            return (-1.0, 1.0), (-1.0, 1.0)
        return (0.0, float(self.width - 1)), (0.0, float(self.height - 1))

    def pixel_centers(self):
        """Frame-unit coordinates of all pixel centers, shape (H, W, 2)."""
        i = np.arange(self.width, dtype=float)
        j = np.arange(self.height, dtype=float)
        if self.normalized:
            x = (i + 0.5) * 2.0 / self.width - 1.0
            y = (j + 0.5) * 2.0 / self.height - 1.0
        else:
            x, y = i, j
        out = np.empty((self.height, self.width, 2))
        out[:, :, 0] = x[None, :]
        out[:, :, 1] = y[:, None]
        return out

    def to_pixel(self, coords):
        """Map frame-unit coordinates to fractional pixel indices (x, y)."""
        coords = np.asarray(coords, dtype=float)
        if not self.normalized:
            return coords
        out = np.empty_like(coords)
        out[..., 0] = (coords[..., 0] + 1.0) * (self.width / 2.0) - 0.5
        out[..., 1] = (coords[..., 1] + 1.0) * (self.height / 2.0) - 0.5
        return out


@dataclass(frozen=True)
class ControlGrid:
    rows: int
    cols: int
    frame: Frame
    base: np.ndarray = field(repr=False)  # (rows*cols, 2), row-major

    @property
    def n_points(self):
        return self.rows * self.cols


def make_grid(rows, cols, frame):
    """Evenly spaced rows x cols lattice spanning the frame extent, row-major."""
    if rows < 2 or cols < 2:
        raise DomainError(f"grid must be at least 2x2, got {rows}x{cols}")
    (x0, x1), (y0, y1) = frame.extent()
    xs = np.linspace(x0, x1, cols)
    ys = np.linspace(y0, y1, rows)
    base = np.empty((rows * cols, 2))
    base[:, 0] = np.tile(xs, rows)
    base[:, 1] = np.repeat(ys, cols)
    return ControlGrid(rows=rows, cols=cols, frame=frame, base=base)


def grid_distance_d(grid):
    """Diagonal nearest-neighbour distance sqrt(a^2 + b^2) of the lattice."""
    b = grid.base[1, 0] - grid.base[0, 0]  # horizontal spacing
    a = grid.base[grid.cols, 1] - grid.base[0, 1]  # vertical spacing
    return float(np.hypot(a, b))


@dataclass(frozen=True)
class SupportPolicy:
    d: float
    lambda_alpha: float = 6.0

    def __post_init__(self):
        if not np.isfinite(self.d) or self.d <= 0:
            raise DomainError(f"D must be positive, got {self.d}")
        if not np.isfinite(self.lambda_alpha) or self.lambda_alpha <= 0:
            raise DomainError(f"lambda_alpha must be positive, got {self.lambda_alpha}")

    @classmethod
    def for_grid(cls, grid, lambda_alpha=6.0):
        return cls(d=grid_distance_d(grid), lambda_alpha=lambda_alpha)


def clamp_support(alpha_hat, policy):
    """alpha = lambda_alpha * alpha_hat + D, strictly inside (D, D + lambda_alpha)."""
    if not np.isfinite(alpha_hat) or not (0.0 < alpha_hat < 1.0):
        raise DomainError(f"alpha_hat must lie in (0, 1), got {alpha_hat}")
    return policy.lambda_alpha * float(alpha_hat) + policy.d


def check_displacements(theta, grid):
    """Validate per-control-point offsets and return them as an (N, 2) array."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (grid.n_points, 2):
        raise DomainError(
            f"theta must have shape ({grid.n_points}, 2), got {theta.shape}"
        )
    if not np.all(np.isfinite(theta)):
        raise DomainError("theta components must be finite")
    return theta
