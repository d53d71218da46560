"""Transmittance spectra to color: XYZ tristimulus, sRGB, and CIELAB.

Tristimulus values are Riemann sums of the transmittance spectrum against
the CIE 1931 2-degree color matching functions weighted by the D65
illuminant, on the shared 400-700 nm / 10 nm grid:

``X = k * sum x(l) T(l) E(l) dl``, same for Y with y and Z with z, with
``k = 1 / sum y(l) E(l) dl`` so that a perfectly clear spectrum (T = 1)
maps to Y = 1. The implementation divides by the denominator sum computed
with the identical contraction, so T = 1 yields Y = 1.0 exactly in
floating point, not merely to rounding.

The sRGB conversion derives its matrix from the sRGB primary
chromaticities balanced to the white point of the shipped tables (the
Riemann-sum white of D65 on this grid, close to but not identical to the
nominal x = 0.3127, y = 0.3290) and inverts it in double precision. Two
consistency properties follow: a perfectly clear spectrum renders as
(1, 1, 1), and the linear round trip holds to near machine precision,
which the rounded 4-digit matrices in common circulation would spoil.
Encoding uses the standard piecewise curve; values are clipped to [0, 1]
in linear RGB before encoding.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import DimensionMismatch, FormatError, GridMismatch
from .fields import GRID_STEP_NM, WAVELENGTH_GRID, RgbImage, SpectralCube

_SRGB_PRIMARIES = np.array(
    [
        [0.64, 0.33],  # red x, y
        [0.30, 0.60],  # green
        [0.15, 0.06],  # blue
    ]
)
def _xy_to_xyz(x: float, y: float) -> np.ndarray:
    return np.array([x / y, 1.0, (1.0 - x - y) / y])


def _derive_srgb_matrices(white: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    cols = np.stack(
        [_xy_to_xyz(x, y) / _xy_to_xyz(x, y)[1] for x, y in _SRGB_PRIMARIES], axis=1
    )
    scale = np.linalg.solve(cols, white)
    rgb_to_xyz = cols * scale
    xyz_to_rgb = np.linalg.inv(rgb_to_xyz)
    return rgb_to_xyz, xyz_to_rgb


@dataclass(frozen=True)
class ColorMatchingTable:
    """Observer color matching functions on the shared wavelength grid;
    ``values`` has shape (31, 3) for (xbar, ybar, zbar)."""

    wavelengths: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        wl = np.array(self.wavelengths, dtype=np.float64)
        vals = np.array(self.values, dtype=np.float64)
        _check_grid(wl, "color matching table")
        if vals.shape != (wl.size, 3):
            raise GridMismatch(
                f"expected {wl.size}x3 matching values, got {vals.shape}"
            )
        if np.any(vals < 0):
            raise ValueError("color matching functions must be nonnegative")
        wl.flags.writeable = False
        vals.flags.writeable = False
        object.__setattr__(self, "wavelengths", wl)
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class Illuminant:
    """Relative spectral power of the reference light source."""

    wavelengths: np.ndarray
    power: np.ndarray

    def __post_init__(self):
        wl = np.array(self.wavelengths, dtype=np.float64)
        power = np.array(self.power, dtype=np.float64)
        _check_grid(wl, "illuminant")
        if power.shape != (wl.size,):
            raise GridMismatch(f"expected {wl.size} power samples, got {power.shape}")
        if np.any(power < 0):
            raise ValueError("illuminant power must be nonnegative")
        wl.flags.writeable = False
        power.flags.writeable = False
        object.__setattr__(self, "wavelengths", wl)
        object.__setattr__(self, "power", power)


@dataclass(frozen=True)
class XyzImage:
    """Per-pixel CIE XYZ tristimulus values, shape (H, W, 3)."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64, order="C")
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise DimensionMismatch(f"XYZ image must be (H, W, 3), got {arr.shape}")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)


def _check_grid(wl: np.ndarray, what: str) -> None:
    if wl.shape != WAVELENGTH_GRID.shape or not np.allclose(wl, WAVELENGTH_GRID):
        raise GridMismatch(
            f"{what} must be sampled at 400-700 nm in 10 nm steps (31 lines)"
        )


def _load_table(path, columns: int) -> tuple[np.ndarray, np.ndarray]:
    wavelengths = []
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            parts = body.split()
            if len(parts) != columns + 1:
                raise FormatError(
                    f"{path}: expected wavelength + {columns} values per line"
                )
            wavelengths.append(float(parts[0]))
            values.append([float(p) for p in parts[1:]])
    return np.array(wavelengths), np.array(values)


def load_cmf(path: str | os.PathLike | None = None) -> ColorMatchingTable:
    """Load color matching functions; default is the packaged CIE 1931
    2-degree table."""
    if path is None:
        path = resources.files("holochrome.data") / "cie1931_2deg_10nm.txt"
    wl, vals = _load_table(path, 3)
    return ColorMatchingTable(wl, vals)


def load_illuminant(path: str | os.PathLike | None = None) -> Illuminant:
    """Load an illuminant spectrum; default is the packaged D65 table."""
    if path is None:
        path = resources.files("holochrome.data") / "d65_10nm.txt"
    wl, vals = _load_table(path, 1)
    return Illuminant(wl, vals[:, 0])


def tristimulus(cube: SpectralCube, cmf: ColorMatchingTable, illum: Illuminant) -> XyzImage:
    """Integrate a transmittance cube into per-pixel XYZ.

    Linear in the cube. A flat T = 1 spectrum maps to Y = 1.0 exactly and
    to the illuminant's white point in X and Z.
    """
    _check_grid(cube.wavelengths, "spectral cube")
    weighted = cmf.values * illum.power[:, None]  # (31, 3)
    # Same contraction for numerator and normalizer keeps T=1 -> Y=1 exact.
    xyz = np.einsum("hwl,lc->hwc", cube.data, weighted)
    norm = np.einsum("hwl,lc->hwc", np.ones((1, 1, cube.wavelengths.size)), weighted)
    return XyzImage(xyz / norm[0, 0, 1])


def white_point_xyz(cmf: ColorMatchingTable, illum: Illuminant) -> np.ndarray:
    """XYZ of a perfectly clear spectrum under the given tables."""
    weighted = cmf.values * illum.power[:, None]
    sums = np.einsum("hwl,lc->hwc", np.ones((1, 1, len(illum.power))), weighted)[0, 0]
    return sums / sums[1]


# Adapting the display matrices to the white of the shipped tables (rather
# than the nominal D65 chromaticity) makes tristimulus and display agree:
# a clear sample lands exactly on (1, 1, 1).
WHITE_POINT = white_point_xyz(load_cmf(), load_illuminant())
WHITE_POINT.flags.writeable = False
RGB_TO_XYZ, XYZ_TO_RGB = _derive_srgb_matrices(WHITE_POINT)
RGB_TO_XYZ.flags.writeable = False
XYZ_TO_RGB.flags.writeable = False


def srgb_encode(linear: np.ndarray) -> np.ndarray:
    """Piecewise sRGB transfer curve applied to linear values in [0, 1]."""
    lin = np.asarray(linear, dtype=np.float64)
    return np.where(
        lin <= 0.0031308,
        12.92 * lin,
        1.055 * np.power(np.clip(lin, 0.0031308, None), 1.0 / 2.4) - 0.055,
    )


def srgb_decode(encoded: np.ndarray) -> np.ndarray:
    enc = np.asarray(encoded, dtype=np.float64)
    return np.where(
        enc <= 0.04045,
        enc / 12.92,
        np.power((np.clip(enc, 0.04045, None) + 0.055) / 1.055, 2.4),
    )


def xyz_to_srgb(image: XyzImage) -> RgbImage:
    """Convert XYZ to display sRGB: matrix, clip to [0, 1] in linear RGB,
    then the transfer curve."""
    linear = np.einsum("rc,hwc->hwr", XYZ_TO_RGB, image.data)
    return RgbImage(srgb_encode(np.clip(linear, 0.0, 1.0)))


def srgb_to_linear_xyz(image: RgbImage) -> XyzImage:
    """Inverse of the matrix + transfer curve (no clipping)."""
    linear = srgb_decode(image.data)
    return XyzImage(np.einsum("cr,hwr->hwc", RGB_TO_XYZ, linear))


def _lab_f(t: np.ndarray) -> np.ndarray:
    eps = (6.0 / 29.0) ** 3
    cube = np.cbrt(np.clip(t, eps, None))
    return np.where(t > eps, cube, t / (3.0 * (6.0 / 29.0) ** 2) + 4.0 / 29.0)


def srgb_to_lab(image: RgbImage) -> np.ndarray:
    """Per-pixel CIELAB coordinates (D65 reference white), shape (H, W, 3).

    The reference white is the same white the sRGB matrix is balanced to,
    so sRGB (1, 1, 1) maps to L* = 100, a* = b* = 0 to double precision.
    """
    xyz = srgb_to_linear_xyz(image).data
    scaled = xyz / WHITE_POINT
    fx = _lab_f(scaled[..., 0])
    fy = _lab_f(scaled[..., 1])
    fz = _lab_f(scaled[..., 2])
    lab = np.empty_like(xyz)
    lab[..., 0] = 116.0 * fy - 16.0
    lab[..., 1] = 500.0 * (fx - fy)
    lab[..., 2] = 200.0 * (fy - fz)
    return lab
