"""
Image plumbing: loading, grayscale conversion, resizing, brightness and
recalibration onto the common social-platform dimensions.

RGB images are ``uint8`` arrays of shape ``(height, width, 3)``; grayscale
images are ``uint8`` arrays of shape ``(height, width)``.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from PIL import Image
from scipy import sparse

# (width, height) pairs, first occurrence order, duplicates dropped.
CANONICAL_DIMS: tuple[tuple[int, int], ...] = (
    (320, 320),
    (170, 170),
    (400, 400),
    (1080, 566),
    (1200, 630),
    (1600, 900),
    (1200, 627),
    (1080, 1350),
    (630, 1200),
    (627, 1200),
    (1080, 1080),
    (1200, 1200),
    (1080, 1920),
    (851, 315),
    (1500, 1500),
    (1128, 191),
)


def round_half_away(x: np.ndarray) -> np.ndarray:
    """Round to the nearest integer, ties away from zero."""
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def to_uint8(x: np.ndarray) -> np.ndarray:
    """Quantize to 8 bits; clipping first keeps the rounding non-negative."""
    x = np.clip(np.asarray(x, dtype=np.float64), 0, 255)
    return np.floor(x + 0.5).astype(np.uint8)


def as_rgb(img: np.ndarray) -> np.ndarray:
    """Validate an RGB image, promoting grayscale by channel replication."""
    img = np.asarray(img)
    if img.ndim == 2:
        img = np.repeat(img[:, :, np.newaxis], 3, axis=2)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) image, got shape {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError("image must be at least 1x1")
    if img.dtype != np.uint8:
        if np.any(img < 0) or np.any(img > 255):
            raise ValueError("channel values must lie in [0, 255]")
        img = img.astype(np.uint8)
    return img


def load_image(path: str | Path) -> np.ndarray:
    """Decode a PNG/JPEG file to an 8-bit RGB array (alpha is dropped)."""
    with Image.open(path) as im:
        return np.array(im.convert("RGB"))


def save_image(img: np.ndarray, path: str | Path, **kwargs) -> None:
    Image.fromarray(np.asarray(img, dtype=np.uint8)).save(path, **kwargs)


def to_grayscale(img: np.ndarray) -> np.ndarray:
    """BT.601 luma, computed in exact integer arithmetic."""
    rgb = as_rgb(img).astype(np.int64)
    weighted = 299 * rgb[..., 0] + 587 * rgb[..., 1] + 114 * rgb[..., 2]
    # weighted >= 0, so adding half the divisor rounds ties away from zero
    return np.clip((weighted + 500) // 1000, 0, 255).astype(np.uint8)


def recalibrate_dimensions(w: int, h: int) -> tuple[int, int]:
    """Closest canonical (width, height) by aspect ratio.

    Ties on aspect ratio go to the entry with the closest pixel area, then
    to the lexicographically smallest ``(width, height)``.
    """
    if w < 1 or h < 1:
        raise ValueError("dimensions must be positive")
    ratio = math.log(w / h)
    area = w * h

    def key(dims):
        wc, hc = dims
        return (abs(ratio - math.log(wc / hc)), abs(area - wc * hc), dims)

    return min(CANONICAL_DIMS, key=key)


def _axis_weights(n_in: int, n_out: int):
    scale = n_in / n_out
    src = (np.arange(n_out) + 0.5) * scale - 0.5
    src = np.clip(src, 0, n_in - 1)
    i0 = np.floor(src).astype(np.intp)
    i1 = np.minimum(i0 + 1, n_in - 1)
    frac = src - i0
    return i0, i1, frac


def _interp_matrix(n_in: int, n_out: int) -> sparse.csr_matrix:
    """Sparse (n_out, n_in) operator: two taps per output sample."""
    i0, i1, frac = _axis_weights(n_in, n_out)
    rows = np.arange(n_out)
    return sparse.csr_matrix(
        (np.concatenate([1 - frac, frac]), (np.concatenate([rows, rows]), np.concatenate([i0, i1]))),
        shape=(n_out, n_in),
    )


def resize_bilinear(img: np.ndarray, w: int, h: int) -> np.ndarray:
    """Bilinear resize with half-pixel centres and edge clamping.

    Works on grayscale ``(H, W)`` and colour ``(H, W, C)`` arrays alike and
    returns the same kind. Rows are interpolated first, then columns.
    """
    if w < 1 or h < 1:
        raise ValueError("target dimensions must be positive")
    img = np.asarray(img)
    src_h, src_w = img.shape[:2]
    if (src_w, src_h) == (w, h):
        return img.copy()

    tail = img.shape[2:]
    data = img.astype(np.float64).reshape(src_h, -1)
    rows = (_interp_matrix(src_h, h) @ data).reshape((h, src_w) + tail)
    cols = np.moveaxis(rows, 1, 0).reshape(src_w, -1)
    out = (_interp_matrix(src_w, w) @ cols).reshape((w, h) + tail)
    return to_uint8(np.moveaxis(out, 0, 1))


def adjust_brightness(img: np.ndarray, factor: float) -> np.ndarray:
    if not math.isfinite(factor) or factor < 0:
        raise ValueError("brightness factor must be finite and non-negative")
    return to_uint8(np.asarray(img, dtype=np.float64) * factor)


def recalibrate(img: np.ndarray) -> np.ndarray:
    """Resize an RGB image onto its closest canonical dimensions."""
    img = as_rgb(img)
    w, h = recalibrate_dimensions(img.shape[1], img.shape[0])
    return resize_bilinear(img, w, h)
