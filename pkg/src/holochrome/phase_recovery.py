"""Iterative multiheight phase recovery.

Intensity-only holograms recorded at several sample-to-sensor distances
pin down the lost phase: a field that is amplitude-consistent at every
height has essentially one phase solution. The recovery starts from the
first height with zero phase, then repeatedly propagates the field up
through all heights and back down, at each visited height replacing the
amplitude with the measured sqrt(intensity) while keeping the computed
phase. The loop stops when the amplitude arriving back at the first
height settles (relative L2 change below tolerance) or at the iteration
cap; the settled field is finally backpropagated from the first height to
the object plane.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyMeasurements,
    NegativeIntensity,
    NonPositiveZ,
)
from .fields import ComplexField, RealField
from .propagation import PropagationParams, propagate


@dataclass(frozen=True)
class HeightMeasurement:
    """One recorded intensity plus its distance from the object plane
    (micrometers, strictly positive) and illumination wavelength (nm)."""

    intensity: RealField
    z: float
    wavelength: float

    def __post_init__(self):
        if not (self.z > 0):
            raise NonPositiveZ(f"height distance must be positive, got {self.z}")
        if not (self.wavelength > 0):
            raise ValueError(f"wavelength must be positive, got {self.wavelength}")


@dataclass(frozen=True)
class RecoveryConfig:
    max_iterations: int = 30
    tolerance: float = 1e-6
    n: float = 1.0
    pad_factor: int = 1

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if not (self.tolerance > 0):
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")
        if not (self.n > 0):
            raise ValueError(f"refractive index must be positive, got {self.n}")
        if self.pad_factor < 1 or (self.pad_factor & (self.pad_factor - 1)) != 0:
            raise ValueError(
                f"pad_factor must be a power of two >= 1, got {self.pad_factor}"
            )


@dataclass(frozen=True)
class RecoveryTrace:
    """Recovered object-plane field plus per-iteration diagnostics."""

    field: ComplexField
    residuals: tuple[float, ...]
    iterations: int
    converged: bool


def _validate(measurements: list[HeightMeasurement]) -> None:
    if not measurements:
        raise EmptyMeasurements("no height measurements supplied")
    first = measurements[0]
    for m in measurements:
        f = m.intensity
        if (
            f.data.shape != first.intensity.data.shape
            or f.pitch != first.intensity.pitch
            or m.wavelength != first.wavelength
        ):
            raise DimensionMismatch(
                "measurements must share dimensions, pitch, and wavelength"
            )
        if np.any(f.data < 0):
            raise NegativeIntensity("measured intensity has negative samples")
    zs = [m.z for m in measurements]
    if any(b <= a for a, b in zip(zs, zs[1:])):
        raise ValueError(f"heights must be strictly ascending, got {zs}")


def _constrain(field: ComplexField, amp: np.ndarray) -> ComplexField:
    """Replace the amplitude, keep the phase. Zero samples keep phase 0."""
    mag = np.abs(field.data)
    phase = np.divide(
        field.data, mag, out=np.ones_like(field.data), where=mag > 0
    )
    return ComplexField(amp * phase, field.pitch, field.wavelength)


def multiheight_recover(
    measurements: list[HeightMeasurement],
    cfg: RecoveryConfig = RecoveryConfig(),
    object_z: float = 0.0,
) -> ComplexField:
    """Recover the complex object-plane field from multiheight intensities.

    With a single measurement this degenerates to plain backpropagation of
    the zero-phase lift. Deterministic; no randomness anywhere.
    """
    return recover_trace(measurements, cfg, object_z, want_residuals=False).field


def recover_trace(
    measurements: list[HeightMeasurement],
    cfg: RecoveryConfig = RecoveryConfig(),
    object_z: float = 0.0,
    want_residuals: bool = True,
) -> RecoveryTrace:
    """Like :func:`multiheight_recover` but also reports per-iteration
    residuals (when requested; each costs one extra sweep), the iteration
    count, and whether the tolerance was met."""
    _validate(measurements)
    amps = [np.sqrt(m.intensity.data) for m in measurements]
    zs = [m.z for m in measurements]
    n = cfg.n
    count = len(measurements)

    u = ComplexField(
        amps[0].astype(np.complex128),
        measurements[0].intensity.pitch,
        measurements[0].wavelength,
    )
    prev_arriving = amps[0]
    residuals: list[float] = []
    iterations = 0
    converged = False
    for _ in range(cfg.max_iterations):
        iterations += 1
        for k in range(1, count):
            u = propagate(u, PropagationParams(zs[k] - zs[k - 1], n), cfg.pad_factor)
            u = _constrain(u, amps[k])
        for k in range(count - 2, -1, -1):
            u = propagate(u, PropagationParams(zs[k] - zs[k + 1], n), cfg.pad_factor)
            if k > 0:
                u = _constrain(u, amps[k])
        arriving = np.abs(u.data)
        change = float(
            np.linalg.norm(arriving - prev_arriving) / np.linalg.norm(prev_arriving)
        )
        prev_arriving = arriving
        u = _constrain(u, amps[0])
        if want_residuals:
            residuals.append(residual(u, measurements, n, cfg.pad_factor))
        if change < cfg.tolerance:
            converged = True
            break

    final = propagate(u, PropagationParams(object_z - zs[0], n), cfg.pad_factor)
    return RecoveryTrace(
        field=final,
        residuals=tuple(residuals),
        iterations=iterations,
        converged=converged,
    )


def residual(
    field_at_first_height: ComplexField,
    measurements: list[HeightMeasurement],
    n: float = 1.0,
    pad_factor: int = 1,
) -> float:
    """Amplitude-domain data misfit of a candidate field.

    The field (referenced to the first height) is propagated to every
    measurement plane; the result is the RMS over all heights and pixels
    of ``| |field| - sqrt(measured) |``, normalized by the mean measured
    amplitude. Zero means exact consistency.
    """
    _validate(measurements)
    z0 = measurements[0].z
    sq_sum = 0.0
    amp_sum = 0.0
    total = 0
    for m in measurements:
        prop = propagate(field_at_first_height, PropagationParams(m.z - z0, n), pad_factor)
        meas_amp = np.sqrt(m.intensity.data)
        diff = np.abs(prop.data) - meas_amp
        sq_sum += float(np.sum(diff * diff))
        amp_sum += float(np.sum(meas_amp))
        total += diff.size
    rms = np.sqrt(sq_sum / total)
    mean_amp = amp_sum / total
    if mean_amp == 0.0:
        return float(rms)
    return float(rms / mean_amp)
