"""Sharpness metric and focus search."""
import math

import numpy as np
import pytest

from holochrome import (
    ComplexField,
    DegenerateField,
    DimensionMismatch,
    FocusSearch,
    NoPeak,
    estimate_z,
    focus_metric,
    forward_hologram,
    from_intensity,
)
from holochrome.simulate import PhantomSpec, build_phantom


def _tamura_scalar(data):
    """Scalar re-computation: gradient magnitude by central differences
    (one-sided on the edges), then sqrt(std / mean) with population std."""
    amp = np.abs(data)
    h, w = amp.shape
    g = np.zeros((h, w))
    for i in range(h):
        for j in range(w):
            if 0 < j < w - 1:
                gx = (amp[i, j + 1] - amp[i, j - 1]) / 2.0
            elif j == 0:
                gx = amp[i, 1] - amp[i, 0]
            else:
                gx = amp[i, w - 1] - amp[i, w - 2]
            if 0 < i < h - 1:
                gy = (amp[i + 1, j] - amp[i - 1, j]) / 2.0
            elif i == 0:
                gy = amp[1, j] - amp[0, j]
            else:
                gy = amp[h - 1, j] - amp[h - 2, j]
            g[i, j] = math.hypot(gx, gy)
    mean = g.mean()
    var = ((g - mean) ** 2).mean()
    return math.sqrt(math.sqrt(var) / mean)


def test_metric_matches_scalar_recomputation():
    rng = np.random.default_rng(5)
    data = rng.normal(size=(7, 9)) + 1j * rng.normal(size=(7, 9))
    fld = ComplexField(data, 1.0, 540.0)
    assert focus_metric(fld) == pytest.approx(_tamura_scalar(data), rel=1e-12)


def test_metric_is_scale_invariant():
    rng = np.random.default_rng(6)
    data = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
    base = focus_metric(ComplexField(data, 1.0, 540.0))
    scaled = focus_metric(ComplexField(7.3 * data, 1.0, 540.0))
    assert abs(scaled - base) / base < 1e-12


def test_metric_rejects_constant_amplitude():
    # Constant modulus regardless of the phase; |exp(i*theta)| rounds
    # differently per sample, so use a literal constant to get an exactly
    # flat amplitude.
    flat = np.full((8, 8), 2.0 + 1.0j)
    with pytest.raises(DegenerateField):
        focus_metric(ComplexField(flat, 1.0, 540.0))


def test_metric_needs_at_least_3x3():
    with pytest.raises(DimensionMismatch):
        focus_metric(ComplexField(np.ones((2, 5)), 1.0, 540.0))


@pytest.fixture(scope="module")
def hologram_at_300um():
    # Absorption-only disks: phase structure flattens the sharpness peak,
    # so the focus scene keeps phase_range at zero.
    spec = PhantomSpec(
        size=128,
        pitch=1.12,
        seed=7,
        style="disks",
        absorption_range=(0.5, 0.9),
        phase_range=0.0,
    )
    obj = build_phantom(spec).field(540.0)
    intensity = forward_hologram(obj, 300.0)
    return from_intensity(intensity, 540.0)


def test_estimate_z_recovers_the_recording_distance(hologram_at_300um):
    search = FocusSearch(z_min=280.0, z_max=320.0, coarse_step=5.0, refine_tolerance=0.5)
    z_hat = estimate_z(hologram_at_300um, search)
    assert abs(z_hat - 300.0) <= 2.0


def test_estimate_z_is_deterministic(hologram_at_300um):
    search = FocusSearch(z_min=285.0, z_max=315.0, coarse_step=5.0, refine_tolerance=0.5)
    assert estimate_z(hologram_at_300um, search) == estimate_z(hologram_at_300um, search)


def test_estimate_z_refuses_an_edge_maximum(hologram_at_300um):
    # True focus at 300 um sits left of this window, so the best coarse
    # sample lands on the window edge.
    search = FocusSearch(z_min=330.0, z_max=410.0, coarse_step=20.0, refine_tolerance=0.5)
    with pytest.raises(NoPeak):
        estimate_z(hologram_at_300um, search)


def test_search_window_validation():
    with pytest.raises(ValueError):
        FocusSearch(z_min=100.0, z_max=100.0, coarse_step=5.0, refine_tolerance=0.5)
    with pytest.raises(ValueError):
        FocusSearch(z_min=100.0, z_max=200.0, coarse_step=0.0, refine_tolerance=0.5)
    with pytest.raises(ValueError):
        FocusSearch(z_min=100.0, z_max=200.0, coarse_step=5.0, refine_tolerance=0.0)
    with pytest.raises(ValueError):
        # Narrower than three coarse samples
        FocusSearch(z_min=100.0, z_max=105.0, coarse_step=5.0, refine_tolerance=0.5)
