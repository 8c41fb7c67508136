"""Image containers, bilinear resampling, compositing, and metrics.

Images are row-major float64 arrays in [0, 1], gray (H, W) or RGB
(H, W, 3); quantization happens only at the PNG boundary. Warping is a
backward gather: output pixel p takes the source value sampled at the
field coordinate field(p).
"""

import os
import tempfile
from dataclasses import dataclass

import numpy as np
import scipy.signal
from PIL import Image

from . import backend
from .errors import ContractError, DomainError, ImageIOError
from .grid import Frame

_BORDERS = {"clamp": backend.BORDER_CLAMP, "zeros": backend.BORDER_ZEROS}


def _check_image_data(data, what="image"):
    data = np.asarray(data, dtype=float)
    if data.ndim == 3 and data.shape[2] == 1:
        data = data[:, :, 0]
    if data.ndim not in (2, 3) or (data.ndim == 3 and data.shape[2] != 3):
        raise DomainError(f"{what} must be (H, W) or (H, W, 3), got {data.shape}")
    if not np.all(np.isfinite(data)):
        raise DomainError(f"{what} values must be finite")
    if data.min() < 0.0 or data.max() > 1.0:
        raise DomainError(f"{what} values must lie in [0, 1]")
    return data


@dataclass
class ImageBuffer:
    data: np.ndarray  # (H, W) or (H, W, 3), float64 in [0, 1]

    def __post_init__(self):
        self.data = _check_image_data(self.data)

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def channels(self):
        return 1 if self.data.ndim == 2 else 3

    def planes(self):
        """View the data as (H, W, C) regardless of channel count."""
        return self.data[:, :, None] if self.data.ndim == 2 else self.data


@dataclass
class Mask:
    data: np.ndarray  # (H, W) in [0, 1]

    def __post_init__(self):
        data = _check_image_data(self.data, "mask")
        if data.ndim != 2:
            raise DomainError("mask must be single-channel")
        self.data = data

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]


@dataclass
class DisplacementField:
    coords: np.ndarray  # (H, W, 2) sampling coordinates, frame units
    frame: Frame

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=float)
        if self.coords.ndim != 3 or self.coords.shape[2] != 2:
            raise DomainError(f"field must be (H, W, 2), got {self.coords.shape}")
        if not np.all(np.isfinite(self.coords)):
            raise DomainError("field coordinates must be finite")
        if self.coords.shape[:2] != (self.frame.height, self.frame.width):
            raise ContractError(
                f"field shape {self.coords.shape[:2]} does not match frame "
                f"{self.frame.height}x{self.frame.width}"
            )

    @property
    def height(self):
        return self.coords.shape[0]

    @property
    def width(self):
        return self.coords.shape[1]


def _border_code(border):
    try:
        return _BORDERS[border]
    except KeyError:
        raise DomainError(f"border must be one of {sorted(_BORDERS)}, got {border!r}")


def bilinear_sample(image, coord, border="clamp", frame=None):
    """Bilinear interpolation of the four neighbouring pixel centers.

    `coord` is in the units of `frame` (default: normalized frame of the
    image). Returns a scalar for gray images, a length-3 array for RGB.
    """
    if frame is None:
        frame = Frame(image.width, image.height, normalized=True)
    coord = np.asarray(coord, dtype=float)
    if coord.shape != (2,) or not np.all(np.isfinite(coord)):
        raise DomainError(f"coord must be a finite 2D point, got {coord}")
    fxy = frame.to_pixel(coord[None, :])
    out = backend.warp_bilinear(
        image.planes(), fxy[:, 0], fxy[:, 1], _border_code(border)
    )[0]
    return float(out[0]) if image.channels == 1 else out


def backward_warp(image, field, border="clamp"):
    """Gather-resample: output pixel p = sample(image, field(p))."""
    if (image.height, image.width) != (field.height, field.width):
        raise ContractError(
            f"image {image.height}x{image.width} does not match field "
            f"{field.height}x{field.width}"
        )
    fxy = field.frame.to_pixel(field.coords.reshape(-1, 2))
    out = backend.warp_bilinear(
        image.planes(), fxy[:, 0], fxy[:, 1], _border_code(border)
    )
    out = out.reshape(field.height, field.width, -1)
    if image.channels == 1:
        out = out[:, :, 0]
    # The convex bilinear combination can overshoot [0, 1] by an ulp; the
    # clip leaves in-range values (and hence bit-exact identities) untouched.
    return ImageBuffer(np.clip(out, 0.0, 1.0))


def _check_same_shape(a, b, what="images"):
    if a.data.shape != b.data.shape:
        raise ContractError(
            f"{what} must have identical shapes, got {a.data.shape} and {b.data.shape}"
        )


def composite(mask, warped, render):
    """Mask fusion: out = mask * warped + (1 - mask) * render, per channel."""
    if (mask.height, mask.width) != (warped.height, warped.width):
        raise ContractError("mask dimensions must match the images")
    _check_same_shape(warped, render)
    m = mask.data if warped.channels == 1 else mask.data[:, :, None]
    out = m * warped.data + (1.0 - m) * render.data
    return ImageBuffer(np.clip(out, 0.0, 1.0))


def l1_distance(a, b):
    """Mean absolute difference over all pixels and channels."""
    _check_same_shape(a, b)
    return float(np.abs(a.data - b.data).mean())


def _gaussian_window(size=11, sigma=1.5):
    half = (size - 1) / 2.0
    x = np.arange(size) - half
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    w = np.outer(g, g)
    return w / w.sum()


def ssim(a, b, window_size=11, sigma=1.5, k1=0.01, k2=0.03, data_range=1.0):
    """Mean structural similarity over all valid window positions."""
    _check_same_shape(a, b)
    if min(a.height, a.width) < window_size:
        raise ContractError(
            f"images must be at least {window_size} pixels on each side"
        )
    win = _gaussian_window(window_size, sigma)
    c1 = (k1 * data_range) ** 2
    c2 = (k2 * data_range) ** 2

    def channel_ssim(x, y):
        mu_x = scipy.signal.convolve2d(x, win, mode="valid")
        mu_y = scipy.signal.convolve2d(y, win, mode="valid")
        xx = scipy.signal.convolve2d(x * x, win, mode="valid") - mu_x * mu_x
        yy = scipy.signal.convolve2d(y * y, win, mode="valid") - mu_y * mu_y
        xy = scipy.signal.convolve2d(x * y, win, mode="valid") - mu_x * mu_y
        num = (2.0 * mu_x * mu_y + c1) * (2.0 * xy + c2)
        den = (mu_x * mu_x + mu_y * mu_y + c1) * (xx + yy + c2)
        return (num / den).mean()

    pa, pb = a.planes(), b.planes()
    return float(
        np.mean([channel_ssim(pa[:, :, c], pb[:, :, c]) for c in range(pa.shape[2])])
    )


def load_png(path):
    """Load an 8-bit gray or RGB PNG as an ImageBuffer (v / 255)."""
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode not in ("L", "RGB"):
                raise ImageIOError(f"{path}: unsupported image mode {mode} (need gray or RGB)")
            arr = np.asarray(im, dtype=float) / 255.0
    except ImageIOError:
        raise
    except (OSError, ValueError) as err:
        raise ImageIOError(f"cannot read image {path}: {err}") from err
    return ImageBuffer(arr)


def _atomic_write(path, writer):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".cswarp-tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            writer(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_png(image, path):
    """Save as 8-bit PNG: v -> round(v * 255), clamped."""
    q = np.clip(np.rint(image.data * 255.0), 0, 255).astype(np.uint8)
    pil = Image.fromarray(q, mode="L" if image.channels == 1 else "RGB")
    try:
        _atomic_write(path, lambda fh: pil.save(fh, format="PNG"))
    except OSError as err:
        raise ImageIOError(f"cannot write image {path}: {err}") from err


def load_mask(path):
    """Load a grayscale PNG as a Mask."""
    img = load_png(path)
    if img.channels != 1:
        raise ContractError(f"{path}: mask must be a grayscale PNG")
    return Mask(img.data)


def save_dfield(field, path):
    """Write the DFIELD format: 'DFIELD W H\\n' then float32 LE (x, y) pairs."""
    header = f"DFIELD {field.width} {field.height}\n".encode("ascii")
    payload = field.coords.reshape(-1, 2).astype("<f4").tobytes()
    try:
        _atomic_write(path, lambda fh: (fh.write(header), fh.write(payload)))
    except OSError as err:
        raise ImageIOError(f"cannot write field {path}: {err}") from err


def load_dfield(path, normalized=True):
    """Read a DFIELD file; coordinates are interpreted in the given frame kind."""
    try:
        with open(path, "rb") as fh:
            header = fh.readline()
            parts = header.split()
            if len(parts) != 3 or parts[0] != b"DFIELD":
                raise ImageIOError(f"{path}: not a DFIELD file")
            try:
                w, h = int(parts[1]), int(parts[2])
            except ValueError:
                raise ImageIOError(f"{path}: malformed DFIELD header {header!r}")
            raw = fh.read()
    except ImageIOError:
        raise
    except OSError as err:
        raise ImageIOError(f"cannot read field {path}: {err}") from err
    expected = w * h * 2 * 4
    if len(raw) != expected:
        raise ImageIOError(
            f"{path}: expected {expected} payload bytes, got {len(raw)}"
        )
    coords = np.frombuffer(raw, dtype="<f4").astype(float).reshape(h, w, 2)
    return DisplacementField(coords=coords, frame=Frame(w, h, normalized=normalized))
