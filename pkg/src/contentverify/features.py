"""Block-DCT feature signatures and their binary encoding."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SignatureDecodeError

BLOCK_SIZE = 8
MID_GRAY = 128


def dct_matrix(n: int = BLOCK_SIZE) -> np.ndarray:
    """Orthonormal DCT-II basis; row ``u`` holds a(u)·cos((2x+1)uπ/2n)."""
    x = np.arange(n)
    u = x[:, np.newaxis]
    m = np.cos((2 * x + 1) * u * np.pi / (2 * n))
    m[0] *= np.sqrt(1.0 / n)
    m[1:] *= np.sqrt(2.0 / n)
    return m


_DCT8 = dct_matrix()


@dataclass(frozen=True, eq=False)
class FeatureSignature:
    """Per-block DCT coefficients tiled in image layout.

    ``coeffs`` has the padded image shape ``(height, width)``; each 8x8 tile
    holds the coefficients of the matching pixel block, row frequency along
    axis 0.
    """

    coeffs: np.ndarray
    block_size: int = BLOCK_SIZE

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.float64)
        if c.ndim != 2:
            raise ValueError("coefficients must form a 2-D matrix")
        h, w = c.shape
        if h == 0 or w == 0 or h % self.block_size or w % self.block_size:
            raise ValueError(f"signature dims {w}x{h} are not multiples of {self.block_size}")
        if not np.all(np.isfinite(c)):
            raise ValueError("signature coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def width(self) -> int:
        return self.coeffs.shape[1]

    @property
    def height(self) -> int:
        return self.coeffs.shape[0]

    def at_storage_precision(self) -> "FeatureSignature":
        """The signature as a record file holds it (single precision)."""
        return FeatureSignature(self.coeffs.astype(np.float32), self.block_size)

    def __eq__(self, other):
        if not isinstance(other, FeatureSignature):
            return NotImplemented
        return (
            self.block_size == other.block_size
            and self.coeffs.shape == other.coeffs.shape
            and np.array_equal(self.coeffs, other.coeffs)
        )

    __hash__ = None


def pad_to_blocks(gray: np.ndarray, block: int = BLOCK_SIZE, fill: int = MID_GRAY) -> np.ndarray:
    h, w = gray.shape
    ph = -h % block
    pw = -w % block
    if ph == 0 and pw == 0:
        return gray
    return np.pad(gray, ((0, ph), (0, pw)), constant_values=fill)


def block_dct(gray: np.ndarray) -> np.ndarray:
    """Mid-gray adjusted orthonormal 8x8 DCT-II over the padded image."""
    gray = np.asarray(gray)
    if gray.ndim != 2:
        raise ValueError("block_dct expects a grayscale image")
    padded = pad_to_blocks(gray).astype(np.float64) - MID_GRAY
    h, w = padded.shape
    n = BLOCK_SIZE
    blocks = padded.reshape(h // n, n, w // n, n)
    out = np.einsum("ux,ixjy,vy->iujv", _DCT8, blocks, _DCT8, optimize=True)
    return out.reshape(h, w)


def block_dct_signature(gray: np.ndarray) -> FeatureSignature:
    return FeatureSignature(block_dct(gray))


def inverse_block_dct(coeffs: np.ndarray) -> np.ndarray:
    """Undo :func:`block_dct`, returning the mid-adjusted pixel values."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    h, w = coeffs.shape
    n = BLOCK_SIZE
    blocks = coeffs.reshape(h // n, n, w // n, n)
    out = np.einsum("ux,iujv,vy->ixjy", _DCT8, blocks, _DCT8, optimize=True)
    return out.reshape(h, w)


def encode_signature(sig: FeatureSignature) -> bytes:
    """Row-major little-endian float32 blob."""
    return sig.coeffs.astype("<f4").tobytes()


def decode_signature(blob: bytes, width: int, height: int) -> FeatureSignature:
    expected = width * height * 4
    if width <= 0 or height <= 0:
        raise SignatureDecodeError(f"invalid signature dims {width}x{height}")
    if len(blob) != expected:
        raise SignatureDecodeError(
            f"signature blob has {len(blob)} bytes, {width}x{height} needs {expected}"
        )
    coeffs = np.frombuffer(blob, dtype="<f4").reshape(height, width)
    try:
        return FeatureSignature(coeffs.astype(np.float64))
    except ValueError as exc:
        raise SignatureDecodeError(str(exc)) from exc
