"""Field carriers shared by every stage of the reconstruction chain.

All lattices are row-major with the origin at the top-left pixel, sampled
at a uniform pitch given in micrometers. Wavelengths are vacuum values in
nanometers. Data is stored in double precision and frozen after
construction; operations return new instances instead of mutating.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NegativeIntensity

# Spectral sampling used for cubes, color-matching data and illuminants.
WAVELENGTH_GRID = np.arange(400.0, 701.0, 10.0)
WAVELENGTH_GRID.flags.writeable = False
GRID_STEP_NM = 10.0


def _lattice(data, dtype) -> np.ndarray:
    arr = np.array(data, dtype=dtype, order="C")
    if arr.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D lattice, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionMismatch(f"degenerate lattice shape {arr.shape}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ComplexField:
    """A sampled complex optical field.

    Parameters
    ----------
    data : array_like
        Complex samples, shape ``(height, width)``.
    pitch : float
        Sample spacing in micrometers, strictly positive.
    wavelength : float
        Vacuum wavelength in nanometers, strictly positive.
    """

    data: np.ndarray
    pitch: float
    wavelength: float

    def __post_init__(self):
        object.__setattr__(self, "data", _lattice(self.data, np.complex128))
        if not (self.pitch > 0):
            raise ValueError(f"pitch must be positive, got {self.pitch}")
        if not (self.wavelength > 0):
            raise ValueError(f"wavelength must be positive, got {self.wavelength}")

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class RealField:
    """A real-valued lattice (intensity, amplitude, or transmittance)."""

    data: np.ndarray
    pitch: float

    def __post_init__(self):
        object.__setattr__(self, "data", _lattice(self.data, np.float64))
        if not (self.pitch > 0):
            raise ValueError(f"pitch must be positive, got {self.pitch}")

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


class Channel(enum.Enum):
    """Sensor color channel a frame belongs to.

    MONO tags already-demultiplexed single-channel data; BAYER tags a raw
    mosaic frame in which all four channels are still interleaved.
    """

    R = "R"
    G1 = "G1"
    G2 = "G2"
    B = "B"
    MONO = "mono"
    BAYER = "bayer"


@dataclass(frozen=True)
class HologramFrame:
    """One acquired in-line hologram plus its acquisition metadata.

    ``shift`` is the lateral stage position in micrometers at capture
    time. ``illumination`` lists the active vacuum wavelengths: one entry
    for sequential acquisition, three for multiplexed acquisition.
    """

    intensity: RealField
    shift: tuple[float, float]
    height_index: int
    channel: Channel
    illumination: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "shift", (float(self.shift[0]), float(self.shift[1])))
        object.__setattr__(
            self, "illumination", tuple(float(w) for w in self.illumination)
        )
        if self.height_index < 0:
            raise ValueError(f"height_index must be >= 0, got {self.height_index}")
        if len(self.illumination) not in (1, 3):
            raise ValueError(
                f"illumination must list 1 or 3 wavelengths, got {len(self.illumination)}"
            )


@dataclass(frozen=True)
class SpectralCube:
    """Per-pixel transmittance sampled on the 400-700 nm / 10 nm grid.

    Data has shape ``(height, width, 31)``; samples are nonnegative and
    unbounded above (clear background is ~1).
    """

    data: np.ndarray
    pitch: float
    wavelengths: np.ndarray = field(default_factory=lambda: WAVELENGTH_GRID)

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64, order="C")
        wl = np.array(self.wavelengths, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[2] != wl.size:
            raise DimensionMismatch(
                f"cube shape {arr.shape} does not match {wl.size} wavelength samples"
            )
        if wl.size != WAVELENGTH_GRID.size or not np.allclose(wl, WAVELENGTH_GRID):
            raise DimensionMismatch(
                "spectral cubes must be sampled on the 400-700 nm / 10 nm grid"
            )
        if not (self.pitch > 0):
            raise ValueError(f"pitch must be positive, got {self.pitch}")
        arr.flags.writeable = False
        wl.flags.writeable = False
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "wavelengths", wl)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class RgbImage:
    """A displayable image, shape ``(height, width, 3)``, nominally [0, 1]."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64, order="C")
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise DimensionMismatch(f"RGB image must be (H, W, 3), got {arr.shape}")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


def amplitude(fld: ComplexField) -> RealField:
    """Per-sample modulus of a complex field."""
    return RealField(np.abs(fld.data), fld.pitch)


def from_intensity(measurement: RealField, wavelength: float) -> ComplexField:
    """Lift a measured intensity to a zero-phase complex field.

    The amplitude is ``sqrt(intensity)``; the phase is identically zero,
    the standard starting point for iterative recovery.

    Raises
    ------
    NegativeIntensity
        If any sample is below zero.
    """
    data = measurement.data
    if np.any(data < 0):
        worst = float(data.min())
        raise NegativeIntensity(f"intensity has negative samples (min {worst:g})")
    return ComplexField(np.sqrt(data), measurement.pitch, wavelength)
