"""Image quality metrics: global SSIM and mean CIE94 color difference.

Both metrics treat images as flat vectors (no sliding window): SSIM uses
the global means, variances, and covariance of the two images,

``SSIM = (2 mu_u mu_v + C1)(2 cov + C2) /
         ((mu_u^2 + mu_v^2 + C1)(var_u + var_v + C2))``

computed per channel and averaged. Variances are population statistics
(divide by N). CIE94 converts both sRGB images to CIELAB, takes the first
image as the reference for the chroma-dependent scale factors, and
averages the per-pixel color difference; the result is unbounded above.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .fields import RealField, RgbImage
from .colorimetry import srgb_to_lab


@dataclass(frozen=True)
class SsimConstants:
    """Stabilizers ``C1 = (0.01 L)^2`` and ``C2 = (0.03 L)^2`` for dynamic
    range L (default 1 for unit-normalized images)."""

    dynamic_range: float = 1.0
    c1: float | None = None
    c2: float | None = None

    def __post_init__(self):
        if not (self.dynamic_range > 0):
            raise ValueError(f"dynamic range must be positive, got {self.dynamic_range}")
        if self.c1 is None:
            object.__setattr__(self, "c1", (0.01 * self.dynamic_range) ** 2)
        if self.c2 is None:
            object.__setattr__(self, "c2", (0.03 * self.dynamic_range) ** 2)


def _planes(image) -> np.ndarray:
    """Normalize any supported carrier to a (channels, N) array."""
    if isinstance(image, RgbImage):
        data = image.data
        return data.reshape(-1, 3).T
    if isinstance(image, RealField):
        return image.data.reshape(1, -1)
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim == 2:
        return arr.reshape(1, -1)
    if arr.ndim == 3:
        return arr.reshape(-1, arr.shape[2]).T
    raise DimensionMismatch(f"unsupported image shape {arr.shape}")


def ssim(u, v, constants: SsimConstants = SsimConstants()) -> float:
    """Global structural similarity of two equally-shaped images.

    Accepts RgbImage, RealField, or plain 2-D/3-D arrays. Multichannel
    images are scored per channel and averaged. ``ssim(u, u)`` is exactly
    1.0 for any finite image.
    """
    pu = _planes(u)
    pv = _planes(v)
    if pu.shape != pv.shape:
        raise DimensionMismatch(f"image shapes differ: {pu.shape} vs {pv.shape}")
    c1 = constants.c1
    c2 = constants.c2
    scores = []
    for a, b in zip(pu, pv):
        mu_a = a.mean()
        mu_b = b.mean()
        da = a - mu_a
        db = b - mu_b
        var_a = np.mean(da * da)
        var_b = np.mean(db * db)
        cov = np.mean(da * db)
        num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
        den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
        scores.append(num / den)
    return float(np.mean(scores))


def delta_e94(a: RgbImage, b: RgbImage) -> float:
    """Mean CIE94 color difference between two sRGB images.

    The first image supplies the reference chroma: with ``C1 = sqrt(a*^2
    + b*^2)`` of image ``a``, the weights are ``SL = 1``, ``SC = 1 +
    0.045 C1``, ``SH = 1 + 0.015 C1`` (kL = kC = kH = 1). Identical
    images score exactly 0.
    """
    if a.data.shape != b.data.shape:
        raise DimensionMismatch(f"image shapes differ: {a.data.shape} vs {b.data.shape}")
    lab_a = srgb_to_lab(a)
    lab_b = srgb_to_lab(b)
    return float(np.mean(delta_e94_lab(lab_a, lab_b)))


def delta_e94_lab(lab_a: np.ndarray, lab_b: np.ndarray) -> np.ndarray:
    """Per-pixel CIE94 difference of CIELAB arrays (reference first)."""
    dl = lab_a[..., 0] - lab_b[..., 0]
    da = lab_a[..., 1] - lab_b[..., 1]
    db = lab_a[..., 2] - lab_b[..., 2]
    c1 = np.hypot(lab_a[..., 1], lab_a[..., 2])
    c2 = np.hypot(lab_b[..., 1], lab_b[..., 2])
    dc = c1 - c2
    # Rounding can push the hue term a hair below zero; clamp before sqrt.
    dh_sq = np.clip(da * da + db * db - dc * dc, 0.0, None)
    sc = 1.0 + 0.045 * c1
    sh = 1.0 + 0.015 * c1
    return np.sqrt(dl * dl + (dc / sc) ** 2 + dh_sq / (sh * sh))
