"""
Content IDs and the watermark payload around them.

A content id is framed as ``<id>``, protected by ten Reed-Solomon parity
bytes and rendered as a byte-mode QR symbol at error-correction level Q.
Extracted symbols are noisy; :func:`cleanup_extracted` turns them back
into a bilevel image before decoding.
"""

from __future__ import annotations

import hashlib
import re
import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import qrcode
import qrcode.exceptions
import qrcode.util
import reedsolo
import zxingcpp
from scipy.ndimage import median_filter

from .errors import CapacityError, FramingError, QrDecodeError, UncorrectableError
from .imaging import to_uint8

CONTENT_ID_LEN = 16
RS_PARITY = 10
FRAME_LEN = CONTENT_ID_LEN + 2 + RS_PARITY
_ID_RE = re.compile(r"[0-9a-f]{16}")
_rs = reedsolo.RSCodec(RS_PARITY)  # GF(2^8), primitive polynomial 0x11d, fcr 0
# cap on binary median passes; real symbols settle in a handful
MAX_MEDIAN_PASSES = 64


def is_content_id(value: str) -> bool:
    return isinstance(value, str) and _ID_RE.fullmatch(value) is not None


def derive_content_id(canonical_image_bytes: bytes, who: str, when: int, nonce: bytes) -> str:
    """Truncated SHA-256 over image bytes, owner, timestamp and nonce."""
    if not canonical_image_bytes:
        raise ValueError("image bytes must be non-empty")
    if len(nonce) != 8:
        raise ValueError("nonce must be exactly 8 bytes")
    h = hashlib.sha256()
    h.update(canonical_image_bytes)
    h.update(who.encode("utf-8"))
    h.update(struct.pack("<q", when))
    h.update(nonce)
    return h.digest()[:8].hex()


def rs_frame_encode(content_id: str) -> bytes:
    if not is_content_id(content_id):
        raise ValueError(f"not a content id: {content_id!r}")
    return bytes(_rs.encode(f"<{content_id}>".encode("ascii")))


def rs_frame_decode(frame: bytes) -> str:
    """Correct up to five byte errors and unwrap the content id.

    Raises :class:`UncorrectableError` when the parity cannot repair the
    frame and :class:`FramingError` when the repaired text is not ``<id>``.
    """
    frame = bytes(frame)
    if len(frame) != FRAME_LEN:
        raise FramingError(f"frame must be {FRAME_LEN} bytes, got {len(frame)}")
    try:
        message, _, _ = _rs.decode(frame)
    except reedsolo.ReedSolomonError as exc:
        raise UncorrectableError(str(exc)) from exc
    message = bytes(message)
    if message[:1] != b"<" or message[-1:] != b">":
        raise FramingError("missing '<' ... '>' delimiters")
    body = message[1:-1].decode("ascii", errors="replace")
    if not is_content_id(body):
        raise FramingError("frame body is not a 16-digit lowercase hex id")
    return body


@dataclass(frozen=True)
class QrConfig:
    box_size: int = 10
    border: int = 4
    version: int = 1  # lower bound; the symbol grows until the payload fits
    ecc_level: str = "Q"

    def __post_init__(self):
        if self.box_size < 1:
            raise ValueError("box_size must be >= 1")
        if self.border < 4:
            raise ValueError("border must be >= 4 modules (quiet zone)")
        if not 1 <= self.version <= 40:
            raise ValueError("version must lie in [1, 40]")
        if self.ecc_level != "Q":
            raise ValueError("only error-correction level Q is supported")


@dataclass(frozen=True)
class QrImage:
    pixels: np.ndarray  # 0 = dark module, 255 = light
    version: int
    box_size: int
    border: int

    @property
    def modules(self) -> int:
        return 17 + 4 * self.version

    @property
    def shape(self) -> tuple[int, int]:
        return self.pixels.shape


def _make_qr(payload: bytes, cfg: QrConfig) -> qrcode.QRCode:
    qr = qrcode.QRCode(
        version=cfg.version,
        error_correction=qrcode.constants.ERROR_CORRECT_Q,
        box_size=cfg.box_size,
        border=cfg.border,
    )
    qr.add_data(qrcode.util.QRData(bytes(payload), mode=qrcode.util.MODE_8BIT_BYTE))
    try:
        qr.make(fit=True)
    except (qrcode.exceptions.DataOverflowError, ValueError) as exc:
        # past version 40 the fitter asks for version 41 and qrcode raises ValueError
        raise CapacityError(f"{len(payload)}-byte payload exceeds QR version 40-Q") from exc
    if qr.version > 40:
        raise CapacityError(f"{len(payload)}-byte payload exceeds QR version 40-Q")
    return qr


def qr_version_for(payload: bytes, cfg: QrConfig = QrConfig()) -> int:
    return _make_qr(payload, cfg).version


def qr_side(version: int, cfg: QrConfig) -> int:
    return (17 + 4 * version + 2 * cfg.border) * cfg.box_size


def qr_render(payload: bytes, cfg: QrConfig = QrConfig()) -> QrImage:
    qr = _make_qr(payload, cfg)
    matrix = np.array(qr.get_matrix(), dtype=bool)  # includes the border
    pixels = np.where(matrix, 0, 255).astype(np.uint8)
    pixels = np.kron(pixels, np.ones((cfg.box_size, cfg.box_size), dtype=np.uint8))
    return QrImage(pixels, qr.version, cfg.box_size, cfg.border)


def _zxing_read(img: np.ndarray) -> bytes | None:
    results = zxingcpp.read_barcodes(img, formats=zxingcpp.BarcodeFormat.QRCode)
    for r in results:
        if r.valid:
            return bytes(r.bytes)
    return None


def module_votes(img: np.ndarray, module_size: int) -> np.ndarray:
    """Dark/light majority per module of a grid-aligned symbol (True = dark)."""
    n_rows = img.shape[0] // module_size
    n_cols = img.shape[1] // module_size
    cells = img[: n_rows * module_size, : n_cols * module_size].astype(np.float64)
    return cells.reshape(n_rows, module_size, n_cols, module_size).mean(axis=(1, 3)) < 127.5


def _modules_to_image(dark: np.ndarray, scale: int = 3) -> np.ndarray:
    pixels = np.where(dark, 0, 255).astype(np.uint8)
    return np.kron(pixels, np.ones((scale, scale), dtype=np.uint8))


@lru_cache(maxsize=None)
def function_patterns(version: int, mask: int) -> tuple[np.ndarray, np.ndarray]:
    """Fixed modules of a level-Q symbol: (which modules are fixed, their colour).

    Covers finder, separator, timing and alignment patterns plus the
    format information for ``mask``; everything else carries data.
    """
    qr = qrcode.QRCode(version=version, error_correction=qrcode.constants.ERROR_CORRECT_Q)
    n = qr.modules_count = 17 + 4 * version
    qr.modules = [[None] * n for _ in range(n)]
    qr.setup_position_probe_pattern(0, 0)
    qr.setup_position_probe_pattern(n - 7, 0)
    qr.setup_position_probe_pattern(0, n - 7)
    qr.setup_position_adjust_pattern()
    qr.setup_timing_pattern()
    qr.setup_type_info(False, mask)
    if version >= 7:
        qr.setup_type_number(False)
    fixed = np.array([[m is not None for m in row] for row in qr.modules])
    dark = np.array([[bool(m) for m in row] for row in qr.modules])
    return fixed, dark


def repaired_symbols(dark: np.ndarray, version: int, border: int):
    """Yield the module grid with function patterns restored, once per mask."""
    n = 17 + 4 * version
    side = n + 2 * border
    grid = np.zeros((side, side), dtype=bool)
    rows = min(side, dark.shape[0])
    cols = min(side, dark.shape[1])
    grid[:rows, :cols] = dark[:rows, :cols]
    grid[:border, :] = grid[-border:, :] = False
    grid[:, :border] = grid[:, -border:] = False
    for mask in range(8):
        fixed, colour = function_patterns(version, mask)
        out = grid.copy()
        inner = out[border : border + n, border : border + n]
        inner[fixed] = colour[fixed]
        yield out


def qr_decode(
    img: np.ndarray,
    module_size: int | None = None,
    version: int | None = None,
    border: int = 4,
) -> bytes:
    """Locate and decode a QR symbol in a grayscale image.

    Extracted watermarks have their module grid anchored at the image
    origin. For those, ``module_size`` enables a decode of the per-module
    majority vote, and ``version`` additionally restores the symbol's fixed
    patterns (trying each mask's format bits) before decoding.
    """
    img = np.asarray(img)
    if img.ndim != 2:
        raise ValueError("qr_decode expects a grayscale image")
    img = np.ascontiguousarray(img if img.dtype == np.uint8 else to_uint8(img))
    data = _zxing_read(img)
    if data is None and module_size:
        dark = module_votes(img, module_size)
        data = _zxing_read(_modules_to_image(dark))
        if data is None and version:
            for grid in repaired_symbols(dark, version, border):
                data = _zxing_read(_modules_to_image(grid))
                if data is not None:
                    break
    if data is None:
        raise QrDecodeError("no decodable QR symbol found")
    return data


def otsu_threshold(img: np.ndarray) -> int | None:
    """Otsu's global threshold for a uint8 image; None if the image is flat.

    Pixels strictly above the returned level belong to the light class.
    """
    hist = np.bincount(img.ravel(), minlength=256).astype(np.float64)
    if np.count_nonzero(hist) < 2:
        return None
    levels = np.arange(256, dtype=np.float64)
    w0 = np.cumsum(hist)
    w1 = w0[-1] - w0
    m0 = np.cumsum(hist * levels)
    m1 = m0[-1] - m0
    valid = (w0 > 0) & (w1 > 0)
    between = np.zeros(256)
    mu0 = m0[valid] / w0[valid]
    mu1 = m1[valid] / w1[valid]
    between[valid] = w0[valid] * w1[valid] * (mu0 - mu1) ** 2
    return int(np.argmax(between))


def median_root(bilevel: np.ndarray) -> np.ndarray:
    """Iterate an edge-replicated 3x3 median on a 0/255 image to a fixed point.

    2-D medians can flip a few pixels back and forth forever; when a
    two-cycle shows up those pixels are set light and iteration resumes.
    """
    prev, out = None, bilevel
    for _ in range(MAX_MEDIAN_PASSES):
        nxt = median_filter(out, size=3, mode="nearest")
        if np.array_equal(nxt, out):
            return out
        if prev is not None and np.array_equal(nxt, prev):
            nxt = np.maximum(nxt, out)
        prev, out = out, nxt
    return out  # not seen in practice; bounded so a pathological input cannot hang


def cleanup_extracted(noisy: np.ndarray) -> np.ndarray:
    """Denoise and binarize an extracted watermark plane.

    A 3x3 edge-replicated median, then Otsu's threshold. The bilevel result
    is median filtered until it stops changing (a median root), so running
    the cleanup again leaves it as is. A flat input has no threshold and
    comes back all light (255), as does one whose root is all dark; the QR
    decoder then rejects it.
    """
    smoothed = median_filter(to_uint8(noisy), size=3, mode="nearest")
    t = otsu_threshold(smoothed)
    if t is None:
        return np.full(smoothed.shape, 255, dtype=np.uint8)
    out = median_root(np.where(smoothed > t, 255, 0).astype(np.uint8))
    if not out.any():
        out[:] = 255  # all dark is as flat as all light; keep one convention
    return out
