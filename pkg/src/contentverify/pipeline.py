"""End-to-end registration and verification."""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    CapacityError,
    DuplicateIdError,
    ExtractionError,
    PayloadError,
    QrDecodeError,
    RecordNotFoundError,
)
from .features import block_dct_signature
from .idcodec import (
    QrConfig,
    cleanup_extracted,
    derive_content_id,
    qr_decode,
    qr_render,
    qr_side,
    qr_version_for,
    rs_frame_decode,
    rs_frame_encode,
)
from .imaging import as_rgb, recalibrate, resize_bilinear, to_grayscale
from .registry import ContentRecord, RecordStore
from .similarity import compare_signatures
from .stego import (
    EmbedParams,
    MasterKey,
    capacity_check,
    default_alpha,
    default_margins,
    embed_watermark,
    extract_watermark,
    generate_xmap,
)

# Smallest strength on the 10**(k/10) grid at which every corpus image keeps
# its id through brightening and patch pastes, with pixel PSNR >= 40 dB;
# see demos/03_alpha_calibration.py.
CALIBRATED_ALPHA_STRENGTH = 0.00631
MIN_BOX_SIZE = 3
MAX_ID_ATTEMPTS = 8
# Frame length of '<' + 16 hex digits + '>' + 10 parity bytes.
_PAYLOAD_VERSION = qr_version_for(bytes(28))

VERDICTS = ("verified", "suspected", "tampered", "watermark_not_found", "record_not_found")


@dataclass(frozen=True)
class PipelineConfig:
    alpha: float | None = None  # absolute spectral strength; None derives it per image
    alpha_strength: float = CALIBRATED_ALPHA_STRENGTH
    margins: tuple[int, int] | None = None  # None: (H // 16, W // 16)
    box_size: int = 10  # upper bound; shrinks to fit small canonical sizes
    min_box_size: int = MIN_BOX_SIZE
    border: int = 4
    confidence_floor: float = 15.0
    confidence_ceiling: float = 35.0
    verified_min_psnr: float = 32.0
    tampered_max_psnr: float = 22.0

    def __post_init__(self):
        if not self.tampered_max_psnr < self.verified_min_psnr:
            raise ValueError("tampered_max_psnr must be below verified_min_psnr")
        if not self.confidence_floor < self.confidence_ceiling:
            raise ValueError("confidence floor must be below the ceiling")
        if self.alpha is not None and not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not self.alpha_strength > 0:
            raise ValueError("alpha_strength must be positive")
        if not 1 <= self.min_box_size <= self.box_size:
            raise ValueError("need 1 <= min_box_size <= box_size")


@dataclass(frozen=True)
class VerificationReport:
    content_id: str | None
    mse: float | None
    psnr_db: float | None
    confidence: float | None
    verdict: str

    @property
    def exact_match(self) -> bool:
        return self.mse == 0.0

    def to_dict(self) -> dict:
        psnr = self.psnr_db
        return {
            "content_id": self.content_id,
            "mse": self.mse,
            "psnr_db": None if psnr is None or math.isinf(psnr) else psnr,
            "exact_match": self.exact_match,
            "confidence": self.confidence,
            "verdict": self.verdict,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> "VerificationReport":
        psnr = data["psnr_db"]
        if psnr is None and data.get("exact_match"):
            psnr = math.inf
        return cls(data["content_id"], data["mse"], psnr, data["confidence"], data["verdict"])

    @classmethod
    def from_json(cls, text: str) -> "VerificationReport":
        return cls.from_dict(json.loads(text))

    def to_text(self) -> str:
        lines = [f"Content ID: {self.content_id or '-'}"]
        if self.mse is not None:
            psnr = "inf" if math.isinf(self.psnr_db) else f"{self.psnr_db:.4f}"
            lines += [
                f"Mean Squared Error: {self.mse:.4f}" if self.mse else "Mean Squared Error: 0.0",
                f"Peak Signal-to-Noise Ratio: {psnr}",
                f"Confidence: {self.confidence:.4f}",
            ]
        lines.append(f"Verdict: {self.verdict}")
        return "\n".join(lines)


@dataclass(frozen=True)
class EmbeddingLayout:
    """Everything extraction needs, derived from the canonical dims alone."""

    host_dims: tuple[int, int]  # (H, W)
    margins: tuple[int, int]
    qr: QrConfig
    qr_version: int
    qr_dims: tuple[int, int]

    @property
    def buffer_shape(self) -> tuple[int, int]:
        return EmbedParams(self.margins, 1.0, self.qr_dims).buffer_shape(self.host_dims)

    def params(self, alpha: float) -> EmbedParams:
        return EmbedParams(self.margins, alpha, self.qr_dims)


def embedding_layout(host_dims: tuple[int, int], cfg: PipelineConfig) -> EmbeddingLayout:
    """Pick margins and the largest QR module size that fits the host."""
    margins = tuple(cfg.margins) if cfg.margins is not None else default_margins(host_dims)
    version = _PAYLOAD_VERSION
    probe = EmbedParams(margins, 1.0, (0, 0))
    room = min(probe.buffer_shape(host_dims))
    for box in range(cfg.box_size, cfg.min_box_size - 1, -1):
        qcfg = QrConfig(box_size=box, border=cfg.border)
        side = qr_side(version, qcfg)
        if side <= room:
            return EmbeddingLayout(host_dims, margins, qcfg, version, (side, side))
    smallest = QrConfig(box_size=cfg.min_box_size, border=cfg.border)
    side = qr_side(version, smallest)
    capacity_check(host_dims, EmbedParams(margins, 1.0, (side, side)))
    raise CapacityError("watermark does not fit")  # pragma: no cover


def register_content(
    image,
    who: str,
    where_from: str,
    store: RecordStore,
    key: MasterKey,
    cfg: PipelineConfig = PipelineConfig(),
    *,
    now: int | None = None,
) -> tuple[np.ndarray, str]:
    """Watermark an image, record its signature, return (image, content id).

    The stored signature is taken from the watermarked canonical image, so
    the returned image verifies as an exact match.
    """
    canonical = recalibrate(as_rgb(image))
    dims = canonical.shape[:2]
    layout = embedding_layout(dims, cfg)
    alpha = cfg.alpha if cfg.alpha is not None else default_alpha(dims, layout.qr_dims, cfg.alpha_strength)
    alpha = float(format(alpha, ".9g"))
    params = layout.params(alpha)
    xmap = generate_xmap(layout.buffer_shape, key)
    created_at = int(time.time()) if now is None else int(now)
    raw = canonical.tobytes()

    for _ in range(MAX_ID_ATTEMPTS):
        content_id = derive_content_id(raw, who, created_at, os.urandom(8))
        if content_id in store:
            continue
        qr = qr_render(rs_frame_encode(content_id), layout.qr)
        watermarked = embed_watermark(canonical, qr.pixels, xmap, params)
        signature = block_dct_signature(to_grayscale(watermarked))
        h, w = dims
        record = ContentRecord(
            content_id=content_id,
            created_at=created_at,
            who=who,
            where_from=where_from,
            canonical_dims=(w, h),
            padded_dims=(signature.width, signature.height),
            margins=params.margins,
            alpha=alpha,
            qr_dims=params.qr_dims,
            qr_version=qr.version,
            signature=signature.at_storage_precision(),
        )
        try:
            store.put(record)
        except DuplicateIdError:
            continue
        return watermarked, content_id
    raise DuplicateIdError("could not derive an unused content id")


def read_content_id(image, key: MasterKey, cfg: PipelineConfig = PipelineConfig()) -> str:
    """Recover the embedded content id; raises if no watermark decodes."""
    canonical = recalibrate(as_rgb(image))
    layout = embedding_layout(canonical.shape[:2], cfg)
    xmap = generate_xmap(layout.buffer_shape, key)
    plane = extract_watermark(canonical, xmap, layout.params(1.0))
    payload = qr_decode(
        cleanup_extracted(plane),
        module_size=layout.qr.box_size,
        version=layout.qr_version,
        border=layout.qr.border,
    )
    return rs_frame_decode(payload)


def verdict_for(psnr_db: float, cfg: PipelineConfig) -> str:
    if psnr_db >= cfg.verified_min_psnr:
        return "verified"
    if psnr_db <= cfg.tampered_max_psnr:
        return "tampered"
    return "suspected"


def verify_content(
    image, store: RecordStore, key: MasterKey, cfg: PipelineConfig = PipelineConfig()
) -> VerificationReport:
    image = as_rgb(image)
    try:
        content_id = read_content_id(image, key, cfg)
    except (CapacityError, ExtractionError, QrDecodeError, PayloadError):
        return VerificationReport(None, None, None, None, "watermark_not_found")
    try:
        record = store.get(content_id)
    except RecordNotFoundError:
        return VerificationReport(content_id, None, None, None, "record_not_found")

    w, h = record.canonical_dims
    candidate = resize_bilinear(image, w, h)
    signature = block_dct_signature(to_grayscale(candidate)).at_storage_precision()
    result = compare_signatures(
        record.signature, signature, cfg.confidence_floor, cfg.confidence_ceiling
    )
    return VerificationReport(
        content_id, result.mse, result.psnr_db, result.confidence, verdict_for(result.psnr_db, cfg)
    )


def with_overrides(cfg: PipelineConfig, **changes) -> PipelineConfig:
    return replace(cfg, **{k: v for k, v in changes.items() if v is not None})
