"""
Keyed frequency-domain embedding of a QR watermark, and its blind extraction.

The watermark is added to the 2-D DFT of each colour channel at positions
chosen by two key-driven permutations, once in a band starting at
``margins`` and once at the mirrored (conjugate-symmetric) positions.
Extraction reads the same spectral positions back without the original.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np
from scipy import fft

from .errors import CapacityError, ExtractionError
from .imaging import as_rgb, to_uint8


@dataclass(frozen=True)
class MasterKey:
    secret: bytes

    def __post_init__(self):
        if not isinstance(self.secret, (bytes, bytearray)):
            raise TypeError("master key secret must be bytes")
        if not 16 <= len(self.secret) <= 64:
            raise ValueError("master key must be 16 to 64 bytes long")
        object.__setattr__(self, "secret", bytes(self.secret))

    @classmethod
    def from_hex(cls, text: str) -> "MasterKey":
        return cls(bytes.fromhex(text.strip()))

    def __repr__(self):
        return "MasterKey(<redacted>)"


class KeyStream:
    """Deterministic 64-bit words from SHA-256(secret || counter)."""

    def __init__(self, secret: bytes):
        self._secret = secret
        self._counter = 0
        self._words: list[int] = []

    def next_word(self) -> int:
        if not self._words:
            block = hashlib.sha256(self._secret + struct.pack("<Q", self._counter)).digest()
            self._counter += 1
            self._words = list(struct.unpack("<4Q", block))[::-1]
        return self._words.pop()

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) by rejection sampling."""
        limit = (2**64 // n) * n
        while True:
            u = self.next_word()
            if u < limit:
                return u % n


@dataclass(frozen=True)
class KeyedIndexMap:
    xh: np.ndarray
    xw: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.xh), len(self.xw)


def _shuffle(n: int, stream: KeyStream | None) -> np.ndarray:
    idx = list(range(n))
    if stream is not None:
        for i in range(n - 1, 0, -1):
            j = stream.below(i + 1)
            idx[i], idx[j] = idx[j], idx[i]
    return np.array(idx, dtype=np.intp)


def generate_xmap(buf_shape: tuple[int, int], key: MasterKey | None = None) -> KeyedIndexMap:
    """Row and column permutations of the embedding buffer.

    Without a key both permutations are the identity. With a key, the row
    shuffle consumes the key stream first and the column shuffle continues
    from where it stopped.
    """
    rows, cols = buf_shape
    if rows < 1 or cols < 1:
        raise ValueError("buffer shape must be positive")
    stream = KeyStream(key.secret) if key is not None else None
    return KeyedIndexMap(_shuffle(rows, stream), _shuffle(cols, stream))


@dataclass(frozen=True)
class EmbedParams:
    margins: tuple[int, int]
    alpha: float
    qr_dims: tuple[int, int]  # (height, width) of the QR image

    def buffer_shape(self, host_dims: tuple[int, int]) -> tuple[int, int]:
        h, w = host_dims
        return h // 2 - 2 * self.margins[0], w - 2 * self.margins[1]


def default_margins(host_dims: tuple[int, int]) -> tuple[int, int]:
    h, w = host_dims
    return h // 16, w // 16


def default_alpha(host_dims: tuple[int, int], qr_dims: tuple[int, int], strength: float) -> float:
    """Embedding strength scaled so distortion is comparable across sizes.

    Pixel-domain distortion grows with alpha² times the number of embedded
    coefficients and shrinks with the squared pixel count, so alpha is
    proportional to ``H·W / sqrt(qh·qw)``.
    """
    h, w = host_dims
    qh, qw = qr_dims
    return strength * h * w / np.sqrt(qh * qw)


def capacity_check(host_dims: tuple[int, int], params: EmbedParams) -> None:
    """Raise :class:`CapacityError` if the QR does not fit the spectral buffer."""
    buf_h, buf_w = params.buffer_shape(host_dims)
    qh, qw = params.qr_dims
    if buf_h < qh:
        raise CapacityError(f"rows: buffer height {buf_h} < watermark height {qh}")
    if buf_w < qw:
        raise CapacityError(f"columns: buffer width {buf_w} < watermark width {qw}")


def _positions(host_dims, xmap: KeyedIndexMap, params: EmbedParams):
    h, w = host_dims
    buf = params.buffer_shape(host_dims)
    if xmap.shape != buf:
        raise ValueError(f"index map shape {xmap.shape} does not match buffer {buf}")
    mr, mc = params.margins
    rows = (mr + xmap.xh)[:, np.newaxis]
    cols = (mc + xmap.xw)[np.newaxis, :]
    return (rows, cols), ((h - rows) % h, (w - cols) % w)


def embed_watermark(host, qr, xmap: KeyedIndexMap, params: EmbedParams) -> np.ndarray:
    host = as_rgb(host)
    qr = np.asarray(getattr(qr, "pixels", qr))
    if qr.ndim != 2 or qr.shape != tuple(params.qr_dims):
        raise ValueError(f"watermark shape {qr.shape} does not match qr_dims {params.qr_dims}")
    h, w = dims = host.shape[:2]
    capacity_check(dims, params)
    direct, _ = _positions(dims, xmap, params)

    buffer = np.zeros(params.buffer_shape(dims))
    buffer[: qr.shape[0], : qr.shape[1]] = qr / 255.0
    delta = np.zeros(dims)
    delta[direct] = params.alpha * buffer
    # The mirrored write puts the same real value at -k, so the update is
    # Hermitian and the half spectrum of a real transform carries all of it.
    delta += delta[np.ix_(-np.arange(h) % h, -np.arange(w) % w)]

    half = host_spectrum(host).half
    half += delta[:, : w // 2 + 1, np.newaxis]
    restored = fft.irfft2(half, s=dims, axes=(0, 1))
    return to_uint8(np.clip(restored, 0.0, 1.0) * 255.0)


@dataclass(frozen=True)
class HostSpectrum:
    """Non-negative-frequency half of the per-channel 2-D DFT of an RGB image."""

    half: np.ndarray  # (H, W // 2 + 1, 3), complex
    dims: tuple[int, int]  # (H, W) of the image

    def real_at(self, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
        """Re F[rows, cols] for any bins; the upper half mirrors onto the stored one."""
        h, w = self.dims
        flip = cols > w // 2
        r = np.where(flip, -rows % h, rows)
        c = np.where(flip, w - cols, cols)
        return self.half[r, c].real


def host_spectrum(candidate) -> HostSpectrum:
    """Per-channel unnormalized 2-D DFT of an RGB image scaled to [0, 1]."""
    candidate = as_rgb(candidate)
    return HostSpectrum(fft.rfft2(candidate / 255.0, axes=(0, 1)), candidate.shape[:2])


def read_watermark(spectrum: HostSpectrum, xmap: KeyedIndexMap, params: EmbedParams) -> np.ndarray:
    """Read the watermark plane out of a precomputed :func:`host_spectrum`."""
    capacity_check(spectrum.dims, params)
    direct, mirrored = _positions(spectrum.dims, xmap, params)
    copies = spectrum.real_at(*direct) + spectrum.real_at(*mirrored)
    plane = copies.mean(axis=2) / 2.0
    qh, qw = params.qr_dims
    plane = plane[:qh, :qw]
    lo, hi = plane.min(), plane.max()
    if not hi > lo:
        raise ExtractionError("extracted plane is flat; no watermark energy")
    return to_uint8((plane - lo) * (255.0 / (hi - lo)))


def extract_watermark(candidate, xmap: KeyedIndexMap, params: EmbedParams) -> np.ndarray:
    """Blindly read the watermark plane back as a grayscale image.

    The result is min-max stretched to [0, 255], so it does not depend on
    the embedding strength; it still needs :func:`cleanup_extracted`.
    """
    candidate = as_rgb(candidate)
    capacity_check(candidate.shape[:2], params)
    return read_watermark(host_spectrum(candidate), xmap, params)
