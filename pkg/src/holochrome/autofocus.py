"""Sample-to-sensor distance estimation by focus-metric search.

The focus criterion is the Tamura coefficient sqrt(std / mean) of the
gradient magnitude of the field amplitude: sharp in-focus edges make the
gradient image sparse and high-contrast, which maximizes the coefficient.
The search backpropagates the hologram over a coarse distance sweep and
then refines the best bracket by golden-section search.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateField, DimensionMismatch, NoPeak
from .fields import ComplexField
from .propagation import PropagationParams, propagate

_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class FocusSearch:
    """Search window ``[z_min, z_max]`` in micrometers, coarse sweep step,
    and the bracket width at which golden-section refinement stops."""

    z_min: float
    z_max: float
    coarse_step: float
    refine_tolerance: float

    def __post_init__(self):
        if not (self.z_max > self.z_min):
            raise ValueError(f"empty window [{self.z_min}, {self.z_max}]")
        if not (self.coarse_step > 0):
            raise ValueError(f"coarse_step must be positive, got {self.coarse_step}")
        if not (self.refine_tolerance > 0):
            raise ValueError(
                f"refine_tolerance must be positive, got {self.refine_tolerance}"
            )
        if (self.z_max - self.z_min) < 2 * self.coarse_step:
            raise ValueError("window must span at least three coarse samples")


def focus_metric(fld: ComplexField) -> float:
    """Tamura coefficient of the amplitude gradient magnitude.

    Gradients use central differences inside the lattice and one-sided
    differences on the edges. Scale-invariant: scaling the field by any
    positive constant leaves the metric unchanged.

    Raises
    ------
    DegenerateField
        If the amplitude is constant (zero mean gradient).
    """
    if fld.width < 3 or fld.height < 3:
        raise DimensionMismatch(
            f"focus metric needs at least 3x3 samples, got {fld.width}x{fld.height}"
        )
    amp = np.abs(fld.data)
    gy, gx = np.gradient(amp)
    g = np.hypot(gx, gy)
    mean = float(g.mean())
    if mean == 0.0:
        raise DegenerateField("field amplitude is constant; no gradient structure")
    return float(np.sqrt(g.std() / mean))


def estimate_z(hologram: ComplexField, search: FocusSearch, n: float = 1.0) -> float:
    """Estimate the sample-to-sensor distance of an in-line hologram.

    Backpropagates over ``z_min..z_max`` at the coarse step, requires the
    best sample to be interior to the window, then golden-section-refines
    the surrounding bracket down to ``refine_tolerance``. Deterministic:
    identical inputs yield bit-identical estimates.

    Raises
    ------
    NoPeak
        If the coarse sweep is maximal on a window edge.
    """

    def score(z: float) -> float:
        return focus_metric(propagate(hologram, PropagationParams(-z, n)))

    zs = np.arange(search.z_min, search.z_max + search.coarse_step * 0.5, search.coarse_step)
    values = [score(float(z)) for z in zs]
    best = int(np.argmax(values))
    if best == 0 or best == len(zs) - 1:
        raise NoPeak(
            f"focus metric peaks on the window edge at z={zs[best]:g}; widen the window"
        )

    a, b = float(zs[best - 1]), float(zs[best + 1])
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = score(c), score(d)
    while (b - a) > search.refine_tolerance:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = score(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = score(d)
    return (a + b) / 2.0
