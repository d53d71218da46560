"""Free-space propagation by the angular spectrum method.

A field sampled at pitch ``p`` is decomposed into plane waves with the
unnormalized forward FFT, each component is multiplied by the transfer
function

``H(fx, fy; z) = exp(j 2 pi (n / lam) z sqrt(1 - (lam fx / n)^2 - (lam fy / n)^2))``

and the result is reassembled with the 1/(W*H)-normalized inverse FFT.
Components with ``(lam fx / n)^2 + (lam fy / n)^2 > 1`` are evanescent and
set to zero for every z, including z = 0; the boundary case (= 1 exactly)
takes the propagating branch. On the propagating domain |H| = 1, so the
operator is unitary and ``propagate(z)`` followed by ``propagate(-z)`` is
the identity up to the evanescent cut.

Frequencies live on the FFT-ordered grid with spacing ``1 / (N * pitch)``;
the lattice is treated as periodic (no implicit padding). ``pad_factor``
optionally embeds the field in a larger zeroed lattice to push wrap-around
artifacts out, at the cost of breaking exact unitarity on the original
window.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .fields import ComplexField


@dataclass(frozen=True)
class PropagationParams:
    """Propagation distance ``z`` (micrometers, signed: positive moves away
    from the source toward the sensor) in a medium of refractive index
    ``n``."""

    z: float
    n: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.z):
            raise ValueError(f"z must be finite, got {self.z}")
        if not (self.n > 0):
            raise ValueError(f"refractive index must be positive, got {self.n}")


@dataclass(frozen=True)
class FrequencyGrid:
    """FFT-ordered spatial frequency lattices in cycles per micrometer."""

    fx: np.ndarray
    fy: np.ndarray


def frequency_grid(width: int, height: int, pitch: float) -> FrequencyGrid:
    """Frequency lattices matching numpy's FFT layout for a (height, width)
    field sampled at ``pitch`` micrometers."""
    if width < 1 or height < 1:
        raise DimensionMismatch(f"degenerate grid {width}x{height}")
    fx_row = np.fft.fftfreq(width, d=pitch)
    fy_col = np.fft.fftfreq(height, d=pitch)
    fx, fy = np.meshgrid(fx_row, fy_col)
    fx.flags.writeable = False
    fy.flags.writeable = False
    return FrequencyGrid(fx=fx, fy=fy)


def transfer_function(fx, fy, wavelength: float, params: PropagationParams):
    """Angular spectrum transfer function sampled at (fx, fy).

    Accepts scalars or broadcastable arrays; wavelength is the vacuum
    value in nanometers, frequencies are cycles per micrometer.
    """
    lam = wavelength * 1e-3  # nm -> um
    n = params.n
    rx = np.multiply(fx, lam / n)
    ry = np.multiply(fy, lam / n)
    s = 1.0 - rx * rx - ry * ry
    root = np.sqrt(np.clip(s, 0.0, None))
    h = np.exp(1j * (2.0 * np.pi * n / lam) * params.z * root)
    return np.where(s >= 0.0, h, 0.0 + 0.0j)


def propagate(
    fld: ComplexField, params: PropagationParams, pad_factor: int = 1
) -> ComplexField:
    """Propagate a field by ``params.z`` micrometers.

    ``pad_factor`` must be 1 (off) or a power of two; when larger, the
    field is zero-embedded in a pad_factor-times larger lattice before the
    transform and cropped back afterwards.
    """
    if fld.width < 2 or fld.height < 2:
        raise DimensionMismatch(
            f"propagation needs at least 2x2 samples, got {fld.width}x{fld.height}"
        )
    if pad_factor < 1 or (pad_factor & (pad_factor - 1)) != 0:
        raise ValueError(f"pad_factor must be a power of two >= 1, got {pad_factor}")

    data = fld.data
    if pad_factor > 1:
        big = np.zeros(
            (fld.height * pad_factor, fld.width * pad_factor), dtype=np.complex128
        )
        y0 = (big.shape[0] - fld.height) // 2
        x0 = (big.shape[1] - fld.width) // 2
        big[y0 : y0 + fld.height, x0 : x0 + fld.width] = data
        data = big

    grid = frequency_grid(data.shape[1], data.shape[0], fld.pitch)
    spectrum = np.fft.fft2(data)
    spectrum *= transfer_function(grid.fx, grid.fy, fld.wavelength, params)
    out = np.fft.ifft2(spectrum)

    if pad_factor > 1:
        out = out[y0 : y0 + fld.height, x0 : x0 + fld.width]
    return ComplexField(out, fld.pitch, fld.wavelength)
