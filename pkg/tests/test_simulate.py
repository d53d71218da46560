"""Synthetic forward model: phantoms, holograms, Bayer acquisition."""
import numpy as np
import pytest

from holochrome import Channel, ConfigMismatch, DimensionMismatch
from holochrome.fields import WAVELENGTH_GRID
from holochrome.simulate import (
    AcquisitionSpec,
    PhantomSpec,
    bayer_acquire,
    build_phantom,
    forward_hologram,
    fourier_translate,
    make_phantom,
    simulate_scene,
)

TRIO = (450.0, 540.0, 590.0)


def _spec(**kw):
    base = dict(size=32, pitch=1.12, seed=4, style="textured_tissue")
    base.update(kw)
    return PhantomSpec(**base)


def test_phantom_spec_validation():
    with pytest.raises(ValueError):
        _spec(size=4)
    with pytest.raises(ValueError):
        _spec(pitch=0.0)
    with pytest.raises(ValueError):
        _spec(style="checkerboard")
    with pytest.raises(ValueError):
        _spec(absorption_range=(0.8, 0.2))
    with pytest.raises(ValueError):
        _spec(absorption_range=(0.0, 1.5))
    with pytest.raises(ValueError):
        _spec(phase_range=-0.1)


def test_same_seed_builds_the_same_phantom():
    a = build_phantom(_spec(seed=11))
    b = build_phantom(_spec(seed=11))
    assert np.array_equal(a.labels, b.labels)
    assert np.array_equal(a.phase, b.phase)
    assert np.array_equal(a.field(540.0).data, b.field(540.0).data)
    c = build_phantom(_spec(seed=12))
    assert not np.array_equal(a.field(540.0).data, c.field(540.0).data)


@pytest.mark.parametrize("style", ["bars", "disks", "textured_tissue"])
def test_every_style_produces_structure(style):
    phantom = build_phantom(_spec(style=style, size=64))
    assert phantom.labels.max() > 0
    fld = phantom.field(540.0)
    assert np.all(np.isfinite(fld.data))
    assert fld.data.std() > 0


def test_clear_phantom_is_a_unit_field():
    phantom = build_phantom(_spec(absorption_range=(0.0, 0.0), phase_range=0.0))
    fld = phantom.field(540.0)
    assert np.max(np.abs(fld.data - 1.0)) < 1e-12


def test_amplitude_squares_to_transmittance():
    phantom = build_phantom(_spec(absorption_range=(0.3, 0.8)))
    t_map = phantom.transmittance(540.0)
    amp = np.abs(phantom.field(540.0).data)
    assert np.max(np.abs(amp**2 - np.clip(t_map, 0.0, None))) < 1e-12
    assert np.max(phantom.phase) <= phantom.spec.phase_range + 1e-12


def test_cube_slices_agree_with_single_wavelength_maps():
    phantom = build_phantom(_spec())
    cube = phantom.cube()
    for idx in (0, 14, 30):
        wl = float(WAVELENGTH_GRID[idx])
        assert np.max(np.abs(cube.data[..., idx] - phantom.transmittance(wl))) < 1e-15


def test_explicit_feature_spectra_override_the_generated_ones():
    table = np.full(31, 0.25)
    phantom = build_phantom(_spec(feature_spectra={1: table}, style="disks"))
    if 1 in phantom.spectra:  # the label must exist to be overridden
        assert np.array_equal(phantom.spectra[1], table)
    with pytest.raises(DimensionMismatch):
        build_phantom(_spec(feature_spectra={1: np.ones(30)}, style="disks"))


def test_make_phantom_covers_requested_wavelengths():
    fields = make_phantom(_spec(), wavelengths=TRIO)
    assert sorted(fields) == sorted(TRIO)
    assert fields[540.0].wavelength == 540.0


def test_plane_wave_through_a_clear_object_stays_flat():
    phantom = build_phantom(_spec(absorption_range=(0.0, 0.0), phase_range=0.0))
    hologram = forward_hologram(phantom.field(540.0), 300.0)
    assert np.max(np.abs(hologram.data - 1.0)) < 1e-12


def test_hologram_keeps_the_object_energy():
    obj = build_phantom(_spec(size=64)).field(540.0)
    hologram = forward_hologram(obj, 250.0)
    e_obj = np.mean(np.abs(obj.data) ** 2)
    assert abs(np.mean(hologram.data) - e_obj) / e_obj < 1e-10


def test_fourier_translate_matches_roll_for_integer_shifts():
    rng = np.random.default_rng(8)
    img = rng.normal(size=(16, 16))
    moved = fourier_translate(img, (3.0, -2.0))
    assert np.max(np.abs(moved - np.roll(img, (-2, 3), axis=(0, 1)))) < 1e-12


def test_fourier_translate_zero_shift_returns_the_same_object():
    img = np.ones((4, 4))
    assert fourier_translate(img, (0.0, 0.0)) is img


def test_fourier_translate_is_invertible():
    rng = np.random.default_rng(9)
    spec = np.zeros((32, 32), dtype=complex)
    spec[:5, :5] = rng.normal(size=(5, 5))  # band-limited content
    img = np.fft.ifft2(spec).real
    back = fourier_translate(fourier_translate(img, (0.37, -1.2)), (-0.37, 1.2))
    assert np.max(np.abs(back - img)) < 1e-12


def test_acquisition_spec_validation():
    ok = dict(heights=(100.0,), wavelengths=TRIO, raster=((0.0, 0.0),), sensor_pitch=1.12)
    AcquisitionSpec(**ok)
    with pytest.raises(ConfigMismatch):
        AcquisitionSpec(**{**ok, "heights": ()})
    with pytest.raises(ConfigMismatch):
        AcquisitionSpec(**{**ok, "heights": (100.0, 90.0)})
    with pytest.raises(ConfigMismatch):
        AcquisitionSpec(**{**ok, "heights": (-5.0,)})
    with pytest.raises(ConfigMismatch):
        AcquisitionSpec(**{**ok, "wavelengths": (450.0, 540.0)})
    with pytest.raises(ConfigMismatch):
        AcquisitionSpec(**{**ok, "raster": ()})
    with pytest.raises(ConfigMismatch):
        AcquisitionSpec(**{**ok, "sensor_pitch": 0.0})
    with pytest.raises(ConfigMismatch):
        AcquisitionSpec(**{**ok, "mixing": np.ones((3, 4))})
    with pytest.raises(ConfigMismatch):
        AcquisitionSpec(**{**ok, "noise_sigma": -0.5})


def test_default_mixing_is_the_ideal_selection():
    acq = AcquisitionSpec(
        heights=(100.0,), wavelengths=TRIO, raster=((0.0, 0.0),), sensor_pitch=1.12
    )
    mix = acq.mixing_or_default()
    expected = np.zeros((4, 3))
    expected[0, 2] = expected[1, 1] = expected[2, 1] = expected[3, 0] = 1.0
    assert np.array_equal(mix, expected)


def _hr_intensities(seed, size=16, pitch=0.56):
    rng = np.random.default_rng(seed)
    from holochrome import RealField

    return {w: RealField(rng.uniform(0.2, 1.0, size=(size, size)), pitch) for w in TRIO}


def test_ideal_acquisition_decimates_each_wavelength_onto_its_channel():
    intensities = _hr_intensities(14)
    acq = AcquisitionSpec(
        heights=(100.0,), wavelengths=TRIO, raster=((0.0, 0.0),), sensor_pitch=1.12
    )
    (frame,) = bayer_acquire(intensities, acq, height_index=0)
    assert frame.channel is Channel.BAYER
    assert frame.intensity.data.shape == (8, 8)
    # dec = 2: R sites (even, even) sample the longest wavelength at HR
    # stride 4, G1 sites take the middle one offset by one sensor pixel.
    assert np.allclose(frame.intensity.data[0::2, 0::2], intensities[590.0].data[0::4, 0::4], atol=1e-12)
    assert np.allclose(frame.intensity.data[0::2, 1::2], intensities[540.0].data[0::4, 2::4], atol=1e-12)
    assert np.allclose(frame.intensity.data[1::2, 0::2], intensities[540.0].data[2::4, 0::4], atol=1e-12)
    assert np.allclose(frame.intensity.data[1::2, 1::2], intensities[450.0].data[2::4, 2::4], atol=1e-12)


def test_sequential_acquisition_emits_quarter_frames():
    from holochrome import RealField

    rng = np.random.default_rng(15)
    data = {540.0: RealField(rng.uniform(0.2, 1.0, size=(16, 16)), 0.56)}
    acq = AcquisitionSpec(
        heights=(100.0,), wavelengths=(540.0,), raster=((0.0, 0.0),), sensor_pitch=1.12
    )
    (frame,) = bayer_acquire(data, acq)
    assert frame.channel is Channel.G1
    assert frame.intensity.pitch == pytest.approx(2.24)  # twice the sensor pitch
    assert frame.intensity.data.shape == (4, 4)
    assert np.allclose(frame.intensity.data, data[540.0].data[0::4, 2::4], atol=1e-12)


def test_acquisition_rejects_mismatched_wavelengths():
    intensities = _hr_intensities(16)
    acq = AcquisitionSpec(
        heights=(100.0,), wavelengths=(440.0, 530.0, 600.0), raster=((0.0, 0.0),), sensor_pitch=1.12
    )
    with pytest.raises(ConfigMismatch):
        bayer_acquire(intensities, acq)


def test_acquisition_rejects_non_integer_decimation():
    intensities = _hr_intensities(17)
    acq = AcquisitionSpec(
        heights=(100.0,), wavelengths=TRIO, raster=((0.0, 0.0),), sensor_pitch=0.9
    )
    with pytest.raises(ConfigMismatch):
        bayer_acquire(intensities, acq)


def test_noise_is_deterministic_and_keeps_intensities_nonnegative():
    intensities = _hr_intensities(18)
    acq = AcquisitionSpec(
        heights=(100.0,),
        wavelengths=TRIO,
        raster=((0.0, 0.0), (0.56, 0.0)),
        sensor_pitch=1.12,
        noise_sigma=2.0,  # absurdly noisy to force negative excursions
        seed=5,
    )
    first = bayer_acquire(intensities, acq, height_index=0)
    second = bayer_acquire(intensities, acq, height_index=0)
    for a, b in zip(first, second):
        assert np.array_equal(a.intensity.data, b.intensity.data)
        assert np.all(a.intensity.data >= 0.0)
    other_height = bayer_acquire(intensities, acq, height_index=1)
    assert not np.array_equal(first[0].intensity.data, other_height[0].intensity.data)


def test_simulate_scene_inventory():
    spec = _spec(size=32, pitch=0.56)
    acq = AcquisitionSpec(
        heights=(150.0, 165.0),
        wavelengths=TRIO,
        raster=((0.0, 0.0), (0.56, 0.0)),
        sensor_pitch=1.12,
    )
    scene = simulate_scene(spec, acq)
    assert len(scene.frames) == 4  # 2 heights x 2 raster positions
    assert sorted({f.height_index for f in scene.frames}) == [0, 1]
    assert set(scene.clean) == {(h, w) for h in (0, 1) for w in TRIO}
    assert scene.truth_cube.data.shape == (32, 32, 31)
    # Stage positions are recorded on the frames for manifest-driven PSR.
    assert scene.frames[1].shift == (0.56, 0.0)
