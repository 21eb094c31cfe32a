"""MSE / PSNR feature comparison and the integrity confidence score."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .features import FeatureSignature

PEAK = 255.0
CONFIDENCE_FLOOR_DB = 15.0
CONFIDENCE_CEILING_DB = 35.0


@dataclass(frozen=True)
class SimilarityResult:
    mse: float
    psnr_db: float
    confidence: float


def mse(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise DimensionError("cannot compare empty arrays")
    diff = a - b
    return float(np.mean(diff * diff))


def psnr_from_mse(mse_value: float, peak: float = PEAK) -> float:
    if mse_value < 0 or math.isnan(mse_value):
        raise ValueError(f"MSE must be non-negative, got {mse_value}")
    if mse_value == 0:
        return math.inf
    return 10.0 * math.log10(peak * peak / mse_value)


def confidence_score(
    psnr_db: float,
    floor: float = CONFIDENCE_FLOOR_DB,
    ceiling: float = CONFIDENCE_CEILING_DB,
) -> float:
    """Linear ramp from ``floor`` (0.0) to ``ceiling`` (1.0) decibels."""
    if not floor < ceiling:
        raise ValueError("confidence floor must be below the ceiling")
    if psnr_db == math.inf:
        return 1.0
    return min(1.0, max(0.0, (psnr_db - floor) / (ceiling - floor)))


def compare_signatures(
    a: FeatureSignature,
    b: FeatureSignature,
    floor: float = CONFIDENCE_FLOOR_DB,
    ceiling: float = CONFIDENCE_CEILING_DB,
) -> SimilarityResult:
    if a.block_size != b.block_size:
        raise DimensionError(f"block size mismatch: {a.block_size} vs {b.block_size}")
    if a.coeffs.shape != b.coeffs.shape:
        raise DimensionError(
            f"signature dims differ: {a.width}x{a.height} vs {b.width}x{b.height}"
        )
    err = mse(a.coeffs, b.coeffs)
    psnr = psnr_from_mse(err)
    return SimilarityResult(err, psnr, confidence_score(psnr, floor, ceiling))
