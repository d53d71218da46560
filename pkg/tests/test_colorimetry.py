"""Spectral integration and sRGB / CIELAB conversions."""
import numpy as np
import pytest

from holochrome import (
    DimensionMismatch,
    FormatError,
    GridMismatch,
    RgbImage,
    SpectralCube,
    load_cmf,
    load_illuminant,
    srgb_to_lab,
    tristimulus,
    xyz_to_srgb,
)
from holochrome.colorimetry import (
    RGB_TO_XYZ,
    WHITE_POINT,
    XyzImage,
    srgb_decode,
    srgb_encode,
    srgb_to_linear_xyz,
    white_point_xyz,
)
from holochrome.fields import WAVELENGTH_GRID


@pytest.fixture(scope="module")
def tables():
    return load_cmf(), load_illuminant()


def _tristimulus_scalar(spectrum, cmf, illum):
    """Plain-Python Riemann sum, normalized to Y = 1 for a flat spectrum."""
    norm = sum(cmf.values[i, 1] * illum.power[i] for i in range(31))
    return [
        sum(spectrum[i] * cmf.values[i, c] * illum.power[i] for i in range(31)) / norm
        for c in range(3)
    ]


def test_shipped_tables_cover_the_standard_grid(tables):
    cmf, illum = tables
    assert np.array_equal(cmf.wavelengths, WAVELENGTH_GRID)
    assert np.array_equal(illum.wavelengths, WAVELENGTH_GRID)
    assert cmf.values.shape == (31, 3)
    assert np.all(cmf.values >= 0)
    assert np.all(illum.power >= 0)


def test_loader_rejects_wrong_grids_and_malformed_lines(tmp_path):
    short = tmp_path / "short.txt"
    short.write_text("".join(f"{400 + 10 * i} 0.1\n" for i in range(30)))
    with pytest.raises(GridMismatch):
        load_illuminant(short)

    coarse = tmp_path / "coarse.txt"
    coarse.write_text("".join(f"{400 + 5 * i} 0.1\n" for i in range(31)))
    with pytest.raises(GridMismatch):
        load_illuminant(coarse)

    ragged = tmp_path / "ragged.txt"
    ragged.write_text("400 0.1 0.2\n")
    with pytest.raises(FormatError):
        load_illuminant(ragged)


def test_box_spectrum_matches_the_scalar_sum(tables):
    cmf, illum = tables
    spectrum = np.where((WAVELENGTH_GRID >= 500) & (WAVELENGTH_GRID <= 600), 1.0, 0.0)
    cube = SpectralCube(spectrum[None, None, :], 1.0)
    got = tristimulus(cube, cmf, illum).data[0, 0]
    want = _tristimulus_scalar(spectrum, cmf, illum)
    assert np.max(np.abs(got - want)) < 1e-12


def test_random_cube_matches_the_scalar_sum_per_pixel(tables):
    cmf, illum = tables
    rng = np.random.default_rng(21)
    data = rng.uniform(0.0, 1.2, size=(4, 3, 31))
    got = tristimulus(SpectralCube(data, 1.0), cmf, illum).data
    for i in range(4):
        for j in range(3):
            want = _tristimulus_scalar(data[i, j], cmf, illum)
            assert np.max(np.abs(got[i, j] - want)) < 1e-12


def test_opaque_sample_integrates_to_zero(tables):
    cmf, illum = tables
    xyz = tristimulus(SpectralCube(np.zeros((2, 2, 31)), 1.0), cmf, illum).data
    assert np.all(xyz == 0.0)


def test_clear_sample_hits_unit_luminance_exactly(tables):
    cmf, illum = tables
    xyz = tristimulus(SpectralCube(np.ones((2, 2, 31)), 1.0), cmf, illum).data
    assert np.all(xyz[..., 1] == 1.0)  # bit-exact, not approximately
    assert np.max(np.abs(xyz - WHITE_POINT[None, None, :])) < 1e-12


def test_integration_is_linear_in_the_cube(tables):
    cmf, illum = tables
    rng = np.random.default_rng(22)
    a = rng.uniform(size=(3, 3, 31))
    b = rng.uniform(size=(3, 3, 31))
    combined = tristimulus(SpectralCube(2.0 * a + 0.5 * b, 1.0), cmf, illum).data
    separate = (
        2.0 * tristimulus(SpectralCube(a, 1.0), cmf, illum).data
        + 0.5 * tristimulus(SpectralCube(b, 1.0), cmf, illum).data
    )
    assert np.max(np.abs(combined - separate)) < 1e-12


def test_white_point_helper_agrees_with_the_module_constant(tables):
    cmf, illum = tables
    assert np.array_equal(white_point_xyz(cmf, illum), WHITE_POINT)
    assert WHITE_POINT[1] == 1.0


def test_clear_sample_displays_as_pure_white(tables):
    cmf, illum = tables
    xyz = tristimulus(SpectralCube(np.ones((1, 1, 31)), 1.0), cmf, illum)
    rgb = xyz_to_srgb(xyz).data[0, 0]
    assert np.max(np.abs(rgb - 1.0)) < 1e-3


def test_red_primary_displays_as_pure_red():
    xyz = XyzImage((RGB_TO_XYZ @ np.array([1.0, 0.0, 0.0]))[None, None, :])
    rgb = xyz_to_srgb(xyz).data[0, 0]
    assert np.max(np.abs(rgb - np.array([1.0, 0.0, 0.0]))) < 1e-3


def test_display_round_trip_preserves_in_gamut_colors():
    rng = np.random.default_rng(23)
    linear = rng.uniform(0.05, 0.95, size=(4, 4, 3))
    xyz = np.einsum("cr,hwr->hwc", RGB_TO_XYZ, linear)
    rgb = xyz_to_srgb(XyzImage(xyz))
    back = srgb_to_linear_xyz(rgb).data
    assert np.max(np.abs(back - xyz)) < 1e-10


def test_transfer_curve_round_trip_and_endpoints():
    values = np.linspace(0.0, 1.0, 101)
    assert np.max(np.abs(srgb_decode(srgb_encode(values)) - values)) < 1e-12
    assert srgb_encode(np.array(0.0)) == 0.0
    assert srgb_encode(np.array(1.0)) == pytest.approx(1.0, abs=1e-15)
    # The linear and power segments meet without a jump.
    lo = srgb_encode(np.array(0.0031308 - 1e-12))
    hi = srgb_encode(np.array(0.0031308 + 1e-12))
    assert abs(hi - lo) < 1e-6


def test_lab_of_white_black_and_mid_gray():
    white = srgb_to_lab(RgbImage(np.ones((1, 1, 3))))[0, 0]
    assert white[0] == pytest.approx(100.0, abs=1e-8)
    assert abs(white[1]) < 1e-8 and abs(white[2]) < 1e-8

    black = srgb_to_lab(RgbImage(np.zeros((1, 1, 3))))[0, 0]
    assert np.max(np.abs(black)) < 1e-12

    # L* of encoded 0.5 gray, frozen from a scalar evaluation of the
    # transfer curve and the Lab cube root.
    gray = srgb_to_lab(RgbImage(np.full((1, 1, 3), 0.5)))[0, 0]
    assert gray[0] == pytest.approx(53.38896474111432, abs=1e-6)
    assert abs(gray[1]) < 1e-8 and abs(gray[2]) < 1e-8


def test_xyz_image_validates_shape():
    with pytest.raises(DimensionMismatch):
        XyzImage(np.zeros((2, 3)))
