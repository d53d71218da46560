"""Synthetic scenes: phantoms, forward holograms, and Bayer acquisition.

The phantom is a thin multiplicative transmission object: per wavelength
its complex transmission has amplitude ``sqrt(T(lambda))`` and a fixed
smooth phase pattern scaled to ``phase_range``. Everything is derived
from the seed; identical specs produce identical scenes.

Acquisition mimics a color sensor on a lateral raster stage: the
high-resolution intensity at the sensor plane is translated per raster
position (band-limited Fourier shift, periodic), mixed into the four
Bayer channel responses with a 4x3 cross-talk matrix, point-sampled at
the mosaic sites, decimated to sensor resolution, and optionally
degraded with additive Gaussian noise (clipped at zero, as a real sensor
would). Sequential single-wavelength acquisition emits only the matched
channel's quarter-resolution frames.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import ConfigMismatch, DimensionMismatch
from .fields import (
    WAVELENGTH_GRID,
    Channel,
    ComplexField,
    HologramFrame,
    RealField,
    SpectralCube,
)
from .propagation import PropagationParams, propagate
from .superres import RGGB, BayerLayout, sequential_channel

_STYLES = ("bars", "disks", "textured_tissue")
_EDGE_SOFTEN_PX = 1.2


@dataclass(frozen=True)
class PhantomSpec:
    """Deterministic synthetic object.

    ``absorption_range`` bounds the per-feature peak absorption in [0, 1];
    ``phase_range`` is the maximum phase delay in radians. Feature label 0
    is clear background (T = 1); explicit ``feature_spectra`` (label ->
    31 transmittance samples on the standard grid) override the generated
    smooth spectra.
    """

    size: int
    pitch: float
    seed: int
    style: str = "textured_tissue"
    absorption_range: tuple[float, float] = (0.15, 0.8)
    phase_range: float = 1.0
    feature_spectra: dict[int, np.ndarray] | None = None

    def __post_init__(self):
        if self.size < 8:
            raise ValueError(f"phantom size must be >= 8, got {self.size}")
        if not (self.pitch > 0):
            raise ValueError(f"pitch must be positive, got {self.pitch}")
        if self.style not in _STYLES:
            raise ValueError(f"style must be one of {_STYLES}, got {self.style!r}")
        lo, hi = self.absorption_range
        if not (0.0 <= lo <= hi <= 1.0):
            raise ValueError(f"absorption_range must satisfy 0 <= lo <= hi <= 1, got {self.absorption_range}")
        if self.phase_range < 0:
            raise ValueError(f"phase_range must be >= 0, got {self.phase_range}")


def _label_map(spec: PhantomSpec, rng: np.random.Generator) -> np.ndarray:
    size = spec.size
    labels = np.zeros((size, size), dtype=np.int64)
    if spec.style == "bars":
        col = 0
        label = 1
        while col < size:
            width = int(rng.integers(3, max(4, size // 12)))
            gap = int(rng.integers(2, max(3, size // 16)))
            labels[:, col : min(size, col + width)] = label
            label = label % 4 + 1
            col += width + gap
    elif spec.style == "disks":
        yy, xx = np.mgrid[0:size, 0:size]
        for _ in range(max(6, size // 16)):
            cy, cx = rng.integers(0, size, 2)
            radius = float(rng.uniform(size / 24, size / 8))
            label = int(rng.integers(1, 5))
            mask = (yy - cy) ** 2 + (xx - cx) ** 2 <= radius**2
            labels[mask] = label
    else:  # textured_tissue
        noise = rng.standard_normal((size, size))
        texture = gaussian_filter(noise, sigma=size / 24, mode="wrap")
        thresholds = np.quantile(texture, [0.45, 0.65, 0.82, 0.93])
        for level, threshold in enumerate(thresholds, start=0):
            labels[texture > threshold] = level + 1
        labels[labels == 1] = 0  # keep a connected clear background
    return labels


def _feature_spectra(spec: PhantomSpec, labels: np.ndarray, rng: np.random.Generator) -> dict[int, np.ndarray]:
    spectra: dict[int, np.ndarray] = {0: np.ones(WAVELENGTH_GRID.size)}
    given = spec.feature_spectra or {}
    lo, hi = spec.absorption_range
    for label in sorted(set(int(v) for v in np.unique(labels)) - {0}):
        if label in given:
            table = np.array(given[label], dtype=np.float64)
            if table.shape != WAVELENGTH_GRID.shape:
                raise DimensionMismatch(
                    f"feature {label} spectrum must have {WAVELENGTH_GRID.size} samples"
                )
            if np.any(table < 0):
                raise ValueError(f"feature {label} spectrum has negative samples")
            spectra[label] = table
            continue
        depth = float(rng.uniform(lo, hi))
        center = float(rng.uniform(430.0, 670.0))
        width = float(rng.uniform(45.0, 130.0))
        bump = np.exp(-((WAVELENGTH_GRID - center) ** 2) / (2.0 * width**2))
        floor = float(rng.uniform(0.0, 0.35))
        profile = floor + (1.0 - floor) * bump / bump.max()
        spectra[label] = 1.0 - depth * profile
    return spectra


def _normalize01(img: np.ndarray) -> np.ndarray:
    lo = img.min()
    hi = img.max()
    if hi == lo:
        return np.zeros_like(img)
    return (img - lo) / (hi - lo)


@dataclass(frozen=True)
class Phantom:
    """Materialized phantom: label map, per-label spectra, phase map."""

    spec: PhantomSpec
    labels: np.ndarray
    spectra: dict[int, np.ndarray]
    phase: np.ndarray

    def transmittance(self, wavelength: float) -> np.ndarray:
        """Edge-softened transmittance map at one wavelength."""
        lookup = np.zeros(max(self.spectra) + 1)
        for label, table in self.spectra.items():
            lookup[label] = np.interp(wavelength, WAVELENGTH_GRID, table)
        t_map = lookup[self.labels]
        return gaussian_filter(t_map, sigma=_EDGE_SOFTEN_PX, mode="wrap")

    def field(self, wavelength: float) -> ComplexField:
        amp = np.sqrt(np.clip(self.transmittance(wavelength), 0.0, None))
        return ComplexField(
            amp * np.exp(1j * self.phase), self.spec.pitch, wavelength
        )

    def cube(self) -> SpectralCube:
        maps = [self.transmittance(w) for w in WAVELENGTH_GRID]
        return SpectralCube(np.stack(maps, axis=-1), self.spec.pitch)


def build_phantom(spec: PhantomSpec) -> Phantom:
    """Materialize a phantom spec; pure function of the spec."""
    rng = np.random.default_rng(spec.seed)
    labels = _label_map(spec, rng)
    spectra = _feature_spectra(spec, labels, rng)
    # Band-pass phase (structure between ~2 and ~8 px): free-space
    # propagation barely modulates ultra-low spatial frequencies over
    # realistic height spans, so phase energy parked there would be
    # invisible at every measurement plane.
    noise = rng.standard_normal(labels.shape)
    band = gaussian_filter(noise, sigma=2.0, mode="wrap") - gaussian_filter(
        noise, sigma=8.0, mode="wrap"
    )
    phase = spec.phase_range * _normalize01(band)
    return Phantom(spec=spec, labels=labels, spectra=spectra, phase=phase)


def make_phantom(
    spec: PhantomSpec, wavelengths=None
) -> dict[float, ComplexField]:
    """Complex transmission of the phantom at each requested wavelength
    (default: the full 31-sample grid)."""
    phantom = build_phantom(spec)
    if wavelengths is None:
        wavelengths = WAVELENGTH_GRID
    return {float(w): phantom.field(float(w)) for w in wavelengths}


def forward_hologram(obj: ComplexField, z: float, n: float = 1.0) -> RealField:
    """In-line hologram intensity a distance ``z`` downstream of a thin
    object under unit-amplitude plane-wave illumination."""
    sensor_field = propagate(obj, PropagationParams(z, n))
    return RealField(np.abs(sensor_field.data) ** 2, obj.pitch)


@dataclass(frozen=True)
class AcquisitionSpec:
    """Sensor geometry and raster plan.

    ``raster`` lists lateral stage positions in micrometers (first entry
    conventionally (0, 0)); ``sensor_pitch`` must be an integer multiple
    of the phantom pitch. ``mixing`` is the forward 4x3 cross-talk matrix
    (rows R, G1, G2, B; columns ascending wavelengths); None selects the
    ideal block-diagonal response.
    """

    heights: tuple[float, ...]
    wavelengths: tuple[float, ...]
    raster: tuple[tuple[float, float], ...]
    sensor_pitch: float
    layout: BayerLayout = RGGB
    mixing: np.ndarray | None = None
    noise_sigma: float = 0.0
    seed: int = 0
    n: float = 1.0

    def __post_init__(self):
        heights = tuple(float(z) for z in self.heights)
        if not heights or any(z <= 0 for z in heights):
            raise ConfigMismatch(f"heights must be positive, got {heights}")
        if any(b <= a for a, b in zip(heights, heights[1:])):
            raise ConfigMismatch(f"heights must strictly ascend, got {heights}")
        object.__setattr__(self, "heights", heights)
        wl = tuple(sorted(float(w) for w in self.wavelengths))
        if len(wl) not in (1, 3):
            raise ConfigMismatch(f"need 1 or 3 wavelengths, got {len(wl)}")
        object.__setattr__(self, "wavelengths", wl)
        raster = tuple((float(x), float(y)) for x, y in self.raster)
        if not raster:
            raise ConfigMismatch("raster must list at least one position")
        object.__setattr__(self, "raster", raster)
        if not (self.sensor_pitch > 0):
            raise ConfigMismatch(f"sensor pitch must be positive, got {self.sensor_pitch}")
        if self.mixing is not None:
            mix = np.array(self.mixing, dtype=np.float64)
            if mix.shape != (4, 3):
                raise ConfigMismatch(f"mixing matrix must be 4x3, got {mix.shape}")
            mix.flags.writeable = False
            object.__setattr__(self, "mixing", mix)
        if self.noise_sigma < 0:
            raise ConfigMismatch(f"noise sigma must be >= 0, got {self.noise_sigma}")

    def mixing_or_default(self) -> np.ndarray:
        if self.mixing is not None:
            return self.mixing
        # Ideal response: B sees the shortest wavelength, the greens the
        # middle one, R the longest. Columns ascend in wavelength.
        ideal = {Channel.R: 2, Channel.G1: 1, Channel.G2: 1, Channel.B: 0}
        mix = np.zeros((4, 3))
        for row, channel in enumerate((Channel.R, Channel.G1, Channel.G2, Channel.B)):
            mix[row, ideal[channel]] = 1.0
        return mix


def fourier_translate(img: np.ndarray, shift_px: tuple[float, float]) -> np.ndarray:
    """Translate a lattice by (dx, dy) pixels via the FFT shift theorem
    (exact for band-limited periodic content). Whole-zero shifts return
    the input untouched."""
    dx, dy = float(shift_px[0]), float(shift_px[1])
    if dx == 0.0 and dy == 0.0:
        return img
    height, width = img.shape
    fx = np.fft.fftfreq(width)[None, :]
    fy = np.fft.fftfreq(height)[:, None]
    phase = np.exp(-2j * np.pi * (fx * dx + fy * dy))
    return np.fft.ifft2(np.fft.fft2(img) * phase).real


def _decimation(sensor_pitch: float, hr_pitch: float) -> int:
    ratio = sensor_pitch / hr_pitch
    dec = round(ratio)
    if dec < 1 or abs(ratio - dec) > 1e-9:
        raise ConfigMismatch(
            f"sensor pitch {sensor_pitch} is not an integer multiple of {hr_pitch}"
        )
    return dec


def bayer_acquire(
    intensities: dict[float, RealField],
    acq: AcquisitionSpec,
    height_index: int = 0,
) -> list[HologramFrame]:
    """Acquire one height's raster of frames from per-wavelength sensor-plane
    intensities.

    Multiplexed (three wavelengths): emits one raw mosaic frame per raster
    position, channel-tagged BAYER. Sequential (one wavelength): emits the
    matched channel's quarter-resolution frames at twice the sensor pitch.
    """
    wl = tuple(sorted(float(w) for w in intensities))
    if wl != acq.wavelengths:
        raise ConfigMismatch(
            f"intensity wavelengths {wl} do not match acquisition {acq.wavelengths}"
        )
    maps = [intensities[w] for w in wl]
    hr_pitch = maps[0].pitch
    shape = maps[0].data.shape
    for m in maps:
        if m.data.shape != shape or m.pitch != hr_pitch:
            raise DimensionMismatch("per-wavelength intensities must share lattice")
    dec = _decimation(acq.sensor_pitch, hr_pitch)
    if shape[0] % dec or shape[1] % dec:
        raise ConfigMismatch(
            f"lattice {shape} is not divisible by the decimation factor {dec}"
        )
    sensor_shape = (shape[0] // dec, shape[1] // dec)

    frames: list[HologramFrame] = []
    multiplexed = len(wl) == 3
    if multiplexed:
        mixing = acq.mixing_or_default()
        if sensor_shape[0] % 2 or sensor_shape[1] % 2:
            raise ConfigMismatch(
                f"mosaic needs even sensor dimensions, got {sensor_shape}"
            )
    else:
        channel = sequential_channel(wl[0])
        ox, oy = acq.layout.offset(channel)

    for index, (sx, sy) in enumerate(acq.raster):
        shift_px = (-sx / hr_pitch, -sy / hr_pitch)
        shifted = [fourier_translate(m.data, shift_px) for m in maps]
        if multiplexed:
            mosaic = np.empty(sensor_shape)
            for row in (0, 1):
                for col in (0, 1):
                    ch = acq.layout.pattern[row][col]
                    ch_row = (Channel.R, Channel.G1, Channel.G2, Channel.B).index(ch)
                    response = sum(
                        mixing[ch_row, w_idx] * shifted[w_idx] for w_idx in range(3)
                    )
                    mosaic[row::2, col::2] = response[row * dec :: 2 * dec, col * dec :: 2 * dec]
            frame_data = mosaic
            pitch = acq.sensor_pitch
            tag = Channel.BAYER
        else:
            frame_data = shifted[0][oy * dec :: 2 * dec, ox * dec :: 2 * dec]
            pitch = acq.sensor_pitch * 2.0
            tag = channel
        if acq.noise_sigma > 0:
            rng = np.random.default_rng((acq.seed, height_index, index))
            level = acq.noise_sigma * float(frame_data.mean())
            frame_data = frame_data + level * rng.standard_normal(frame_data.shape)
            frame_data = np.clip(frame_data, 0.0, None)
        frames.append(
            HologramFrame(
                intensity=RealField(frame_data, pitch),
                shift=(sx, sy),
                height_index=height_index,
                channel=tag,
                illumination=wl,
            )
        )
    return frames


@dataclass(frozen=True)
class Scene:
    """A fully simulated acquisition plus its ground truth."""

    phantom: Phantom
    acq: AcquisitionSpec
    frames: tuple[HologramFrame, ...]
    clean: dict[tuple[int, float], RealField]  # (height index, wavelength)
    truth_cube: SpectralCube


def simulate_scene(spec: PhantomSpec, acq: AcquisitionSpec) -> Scene:
    """Run the full forward model: phantom, per-height holograms, raster
    acquisition. ``clean`` holds the unshifted sensor-plane intensities at
    phantom resolution, keyed by (height index, wavelength)."""
    phantom = build_phantom(spec)
    objects = {w: phantom.field(w) for w in acq.wavelengths}
    frames: list[HologramFrame] = []
    clean: dict[tuple[int, float], RealField] = {}
    for h_idx, z in enumerate(acq.heights):
        intensities = {
            w: forward_hologram(objects[w], z, acq.n) for w in acq.wavelengths
        }
        for w, m in intensities.items():
            clean[(h_idx, w)] = m
        frames.extend(bayer_acquire(intensities, acq, height_index=h_idx))
    return Scene(
        phantom=phantom,
        acq=acq,
        frames=tuple(frames),
        clean=clean,
        truth_cube=phantom.cube(),
    )
