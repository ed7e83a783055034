"""Grayscale loading and Sobel gradient energy.

Pixel values are treated as reals in [0, 255]. Color input collapses to
luma with weights 0.299/0.587/0.114. Sobel uses the standard 3x3 kernels
with replicate padding at the borders; "energy" is Gx^2 + Gy^2 by default,
sqrt(Gx^2 + Gy^2) in magnitude mode.
"""

from __future__ import annotations

import numpy as np

from .errors import MissingPixels, ParseError

LUMA_WEIGHTS = (0.299, 0.587, 0.114)
ENERGY_MODES = ("squared", "magnitude")


def to_grayscale(pixels: np.ndarray) -> np.ndarray:
    arr = np.asarray(pixels, dtype=np.float64)
    if arr.ndim == 2:
        return arr
    if arr.ndim == 3 and arr.shape[2] >= 3:
        r, g, b = LUMA_WEIGHTS
        return r * arr[:, :, 0] + g * arr[:, :, 1] + b * arr[:, :, 2]
    if arr.ndim == 3 and arr.shape[2] == 1:
        return arr[:, :, 0]
    raise MissingPixels(f"unsupported pixel array shape {arr.shape}")


def load_grayscale(path: str) -> np.ndarray:
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(path) as im:
            if im.mode in ("L", "I", "F"):
                return np.asarray(im, dtype=np.float64)
            return to_grayscale(np.asarray(im.convert("RGB"), dtype=np.float64))
    except FileNotFoundError:
        raise MissingPixels(f"image file not found: {path}") from None
    except UnidentifiedImageError as exc:
        raise ParseError(f"cannot decode image {path!r}: {exc}") from None


def gradient_energy(gray: np.ndarray, mode: str = "squared") -> np.ndarray:
    """Per-pixel Sobel energy of a 2D grayscale array."""
    if mode not in ENERGY_MODES:
        raise ValueError(f"energy mode must be one of {ENERGY_MODES}, got {mode!r}")
    g = np.asarray(gray, dtype=np.float64)
    if g.ndim != 2 or g.size == 0:
        raise MissingPixels(f"expected a non-empty 2D grayscale array, got shape {g.shape}")
    p = np.pad(g, 1, mode="edge")
    gx = (p[:-2, 2:] + 2.0 * p[1:-1, 2:] + p[2:, 2:]) - (
        p[:-2, :-2] + 2.0 * p[1:-1, :-2] + p[2:, :-2]
    )
    gy = (p[2:, :-2] + 2.0 * p[2:, 1:-1] + p[2:, 2:]) - (
        p[:-2, :-2] + 2.0 * p[:-2, 1:-1] + p[:-2, 2:]
    )
    energy = gx * gx + gy * gy
    if mode == "magnitude":
        energy = np.sqrt(energy)
    return energy


def box_window(box, width: float, height: float) -> tuple[int, int, int, int]:
    """Integer pixel window of a box clipped to the image, as (y0, y1, x0, x1)."""
    x, y, w, h = box
    x0 = max(0, int(np.floor(x)))
    y0 = max(0, int(np.floor(y)))
    x1 = min(int(round(width)), int(np.ceil(x + w)))
    y1 = min(int(round(height)), int(np.ceil(y + h)))
    return y0, max(y0, y1), x0, max(x0, x1)


def box_sum(values: np.ndarray, box, width: float, height: float) -> float:
    y0, y1, x0, x1 = box_window(box, width, height)
    return float(values[y0:y1, x0:x1].sum())
