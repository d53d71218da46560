"""End-to-end reconstruction orchestration.

Modes
-----
``hyperspectral``
    Sequential frames at all 31 grid wavelengths: per-wavelength pixel
    super-resolution and multiheight recovery, transmittance cube,
    tristimulus color rendering.
``multiheight-sequential``
    The same chain at the three illumination wavelengths only, rendered
    through the three-channel display composite.
``multiheight-multiplexed``
    Raw Bayer mosaics under simultaneous three-wavelength illumination:
    demultiplexed super-resolution (dpsr), per-channel recovery, display
    composite.
``singleshot-network-input``
    One height: dpsr, backpropagation at a fixed or autofocused distance,
    and export of the 6-channel real/imaginary tensor consumed by the
    enhancement network trainer.

Every run writes its resolved configuration next to the outputs, logs
per-stage wall times, and reports metrics as flat ``key=value`` lines.
"""
from __future__ import annotations

import configparser
import json
import logging
import os
import time
from dataclasses import dataclass, replace

import numpy as np
from PIL import Image

from . import raster
from .autofocus import FocusSearch, estimate_z
from .colorimetry import (
    ColorMatchingTable,
    Illuminant,
    WHITE_POINT,
    XyzImage,
    load_cmf,
    load_illuminant,
    tristimulus,
    xyz_to_srgb,
)
from .errors import ConfigError, CoverageGap, DimensionMismatch
from .fields import (
    WAVELENGTH_GRID,
    Channel,
    ComplexField,
    HologramFrame,
    RealField,
    RgbImage,
    SpectralCube,
    from_intensity,
)
from .metrics import delta_e94, ssim
from .phase_recovery import HeightMeasurement, RecoveryConfig, multiheight_recover
from .propagation import PropagationParams, propagate
from .superres import (
    RGGB,
    BayerLayout,
    CrosstalkMatrix,
    ShiftTable,
    channel_psr,
    dpsr,
    estimate_shifts,
    load_crosstalk,
    split_mosaic,
)

log = logging.getLogger(__name__)

MODES = (
    "hyperspectral",
    "multiheight-sequential",
    "multiheight-multiplexed",
    "singleshot-network-input",
)

# Channel order of the network input tensor.
TENSOR_LAYOUT = ("re_r", "im_r", "re_g", "im_g", "re_b", "im_b")


@dataclass(frozen=True)
class PipelineConfig:
    """Fully resolved run settings; see ``load_config`` for the file
    schema. Paths are absolute."""

    mode: str
    manifest: str
    output_dir: str
    crosstalk: str | None = None
    reference: str | None = None
    factor: int = 3
    fill: str = "interpolate"
    shifts_source: str = "estimate"  # or "manifest"
    recovery: RecoveryConfig = RecoveryConfig()
    object_z: float = 0.0
    heights_source: str = "manifest"  # manifest | config | autofocus
    heights: tuple[float, ...] = ()
    autofocus: FocusSearch | None = None
    tile: int = 0
    overlap: float = 0.1
    network_z: float | str = "auto"
    cmf_path: str | None = None
    illuminant_path: str | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"pipeline.mode must be one of {MODES}, got {self.mode!r}")
        if self.factor < 1:
            raise ConfigError(f"psr.factor must be >= 1, got {self.factor}")
        if self.fill not in ("interpolate", "strict"):
            raise ConfigError(f"psr.fill must be interpolate or strict, got {self.fill!r}")
        if self.shifts_source not in ("estimate", "manifest"):
            raise ConfigError(
                f"psr.shifts must be estimate or manifest, got {self.shifts_source!r}"
            )
        if self.heights_source not in ("manifest", "config", "autofocus"):
            raise ConfigError(
                "heights.source must be manifest, config, or autofocus, "
                f"got {self.heights_source!r}"
            )
        if self.heights_source == "config" and not self.heights:
            raise ConfigError("heights.z_um is required when heights.source = config")
        if self.heights_source == "autofocus" and self.autofocus is None:
            raise ConfigError("[autofocus] window is required when heights.source = autofocus")
        if self.mode in ("multiheight-multiplexed", "singleshot-network-input"):
            if self.crosstalk is None:
                raise ConfigError(f"input.crosstalk is required for mode {self.mode}")
        if self.mode == "singleshot-network-input":
            if self.network_z == "auto" and self.autofocus is None:
                raise ConfigError(
                    "[autofocus] window is required when network.z = auto"
                )
        if not (0.0 <= self.overlap < 0.5):
            raise ConfigError(f"tiling.overlap must be in [0, 0.5), got {self.overlap}")
        if self.tile < 0:
            raise ConfigError(f"tiling.tile must be >= 0, got {self.tile}")


def _resolve(base: str, path: str | None) -> str | None:
    if path is None:
        return None
    return os.path.normpath(os.path.join(base, path))


def load_config(path: str | os.PathLike, overrides: dict | None = None) -> PipelineConfig:
    """Parse a key-value run configuration.

    Sections and fields::

        [pipeline] mode, output_dir, reference?
        [input]    manifest, crosstalk?
        [psr]      factor?, fill?, shifts?
        [recovery] max_iterations?, tolerance?, refractive_index?, object_z?
        [propagation] pad_factor?
        [heights]  source?, z_um?
        [autofocus] z_min, z_max, coarse_step, refine_tolerance
        [tiling]   tile?, overlap?
        [network]  z?
        [color]    cmf?, illuminant?

    Relative paths are resolved against the config file location.
    ``overrides`` (flag values) win over file values.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(os.fspath(path))
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    base = os.path.dirname(os.path.abspath(os.fspath(path)))
    overrides = dict(overrides or {})

    def get(section: str, option: str, default=None):
        key = f"{section}.{option}"
        if key in overrides and overrides[key] is not None:
            return overrides[key]
        if parser.has_option(section, option):
            return parser.get(section, option)
        return default

    def require(section: str, option: str):
        value = get(section, option)
        if value is None:
            raise ConfigError(f"missing required field [{section}] {option}")
        return value

    def getfloat(section, option, default):
        value = get(section, option)
        if value is None:
            return default
        try:
            return float(value)
        except ValueError as exc:
            raise ConfigError(f"[{section}] {option} must be a number, got {value!r}") from exc

    def getint(section, option, default):
        value = get(section, option)
        if value is None:
            return default
        try:
            return int(str(value))
        except ValueError as exc:
            raise ConfigError(f"[{section}] {option} must be an integer, got {value!r}") from exc

    mode = require("pipeline", "mode")
    heights_raw = get("heights", "z_um")
    heights: tuple[float, ...] = ()
    if heights_raw:
        try:
            heights = tuple(float(tok) for tok in str(heights_raw).replace(",", " ").split())
        except ValueError as exc:
            raise ConfigError(f"[heights] z_um must be a list of numbers, got {heights_raw!r}") from exc

    search = None
    if parser.has_section("autofocus") or any(
        k.startswith("autofocus.") and v is not None for k, v in overrides.items()
    ):
        try:
            search = FocusSearch(
                z_min=getfloat("autofocus", "z_min", 100.0),
                z_max=getfloat("autofocus", "z_max", 500.0),
                coarse_step=getfloat("autofocus", "coarse_step", 10.0),
                refine_tolerance=getfloat("autofocus", "refine_tolerance", 0.5),
            )
        except ValueError as exc:
            raise ConfigError(f"[autofocus] {exc}") from exc

    network_z: float | str = get("network", "z", "auto")
    if network_z != "auto":
        try:
            network_z = float(network_z)
        except ValueError as exc:
            raise ConfigError(f"[network] z must be a number or 'auto', got {network_z!r}") from exc

    try:
        recovery = RecoveryConfig(
            max_iterations=getint("recovery", "max_iterations", 30),
            tolerance=getfloat("recovery", "tolerance", 1e-6),
            n=getfloat("recovery", "refractive_index", 1.0),
            pad_factor=getint("propagation", "pad_factor", 1),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    cmf_path = get("color", "cmf")
    illum_path = get("color", "illuminant")
    return PipelineConfig(
        mode=str(mode),
        manifest=_resolve(base, str(require("input", "manifest"))),
        output_dir=_resolve(base, str(require("pipeline", "output_dir"))),
        crosstalk=_resolve(base, get("input", "crosstalk")),
        reference=_resolve(base, get("pipeline", "reference")),
        factor=getint("psr", "factor", 3),
        fill=str(get("psr", "fill", "interpolate")),
        shifts_source=str(get("psr", "shifts", "estimate")),
        recovery=recovery,
        object_z=getfloat("recovery", "object_z", 0.0),
        heights_source=str(get("heights", "source", "manifest")),
        heights=heights,
        autofocus=search,
        tile=getint("tiling", "tile", 0),
        overlap=getfloat("tiling", "overlap", 0.1),
        network_z=network_z,
        cmf_path=_resolve(base, cmf_path) if cmf_path not in (None, "builtin") else None,
        illuminant_path=_resolve(base, illum_path) if illum_path not in (None, "builtin") else None,
    )


# --------------------------------------------------------------------------
# frame manifests


def write_manifest(
    path: str | os.PathLike,
    entries: list[dict],
    sensor_pitch: float,
) -> None:
    """Write a frame manifest; ``entries`` carry file (relative), height
    index, z_um, shift_um, channel, illumination."""
    doc = {"sensor_pitch_um": sensor_pitch, "frames": entries}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)


def load_manifest(path: str | os.PathLike) -> tuple[list[HologramFrame], dict[int, float]]:
    """Load frames listed in a manifest; returns them plus the per-height
    nominal z map (entries without z are absent from the map)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    if "frames" not in doc or not isinstance(doc["frames"], list) or not doc["frames"]:
        raise ConfigError(f"{path}: manifest lists no frames")
    base = os.path.dirname(os.path.abspath(os.fspath(path)))
    frames: list[HologramFrame] = []
    z_map: dict[int, float] = {}
    for idx, entry in enumerate(doc["frames"]):
        try:
            fld = raster.read_raster(os.path.join(base, entry["file"]))
            if not isinstance(fld, RealField):
                raise ConfigError(f"{path}: frame {idx} is not a real intensity raster")
            frame = HologramFrame(
                intensity=fld,
                shift=tuple(entry.get("shift_um", (0.0, 0.0))),
                height_index=int(entry.get("height_index", 0)),
                channel=Channel(entry.get("channel", "bayer")),
                illumination=tuple(entry["illumination"]),
            )
        except KeyError as exc:
            raise ConfigError(f"{path}: frame {idx} is missing field {exc}") from exc
        except ValueError as exc:
            raise ConfigError(f"{path}: frame {idx}: {exc}") from exc
        except OSError as exc:
            raise ConfigError(f"{path}: frame {idx}: cannot read {entry['file']} ({exc})") from exc
        frames.append(frame)
        if "z_um" in entry:
            z_known = z_map.setdefault(frame.height_index, float(entry["z_um"]))
            if z_known != float(entry["z_um"]):
                raise ConfigError(
                    f"{path}: height {frame.height_index} has conflicting z_um values"
                )
    return frames, z_map


# --------------------------------------------------------------------------
# network input tensor


@dataclass(frozen=True)
class NetworkInputTensor:
    """Six real planes (Re/Im of the backpropagated R, G, B fields) on the
    super-resolved lattice."""

    data: np.ndarray
    pitch: float
    wavelengths: tuple[float, float, float]

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64, order="C")
        if arr.ndim != 3 or arr.shape[2] != 6:
            raise DimensionMismatch(f"tensor must be (H, W, 6), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("tensor has non-finite samples")
        arr.flags.writeable = False
        object.__setattr__(self, "data", arr)
        object.__setattr__(self, "wavelengths", tuple(float(w) for w in self.wavelengths))
        if not (self.pitch > 0):
            raise ValueError(f"pitch must be positive, got {self.pitch}")


def save_network_input(tensor: NetworkInputTensor, path: str | os.PathLike) -> None:
    raster.write_tensor(tensor.data, tensor.pitch, tensor.wavelengths, path)


def load_network_input(path: str | os.PathLike) -> NetworkInputTensor:
    data, pitch, wavelengths = raster.read_tensor(path)
    if data.shape[2] != 6:
        raise DimensionMismatch(f"{path}: expected 6 channels, got {data.shape[2]}")
    return NetworkInputTensor(data=data, pitch=pitch, wavelengths=wavelengths)


def _mosaic_shift_table(
    frames: list[HologramFrame], layout: BayerLayout, source: str
) -> ShiftTable:
    """Apparent translations of Bayer mosaics in sensor pixels."""
    if source == "manifest":
        pitch = frames[0].intensity.pitch
        return ShiftTable(
            tuple((-sx / pitch, -sy / pitch) for sx, sy in (f.shift for f in frames))
        )
    # Estimating straight on mosaics is biased by the static CFA pattern;
    # estimate on one channel's quarter lattice instead (half-resolution,
    # so scale back up).
    quarters = [split_mosaic(frame, layout)[Channel.G1] for frame in frames]
    pitch = frames[0].intensity.pitch
    temp = [
        replace(frame, intensity=RealField(q, pitch * 2.0), channel=Channel.G1)
        for frame, q in zip(frames, quarters)
    ]
    half = estimate_shifts(temp)
    return ShiftTable(tuple((2.0 * dx, 2.0 * dy) for dx, dy in half.shifts))


def _quarter_shift_table(frames: list[HologramFrame], source: str) -> ShiftTable:
    """Apparent translations of quarter-lattice channel frames, in sensor
    pixels."""
    if source == "manifest":
        sensor_pitch = frames[0].intensity.pitch / 2.0
        return ShiftTable(
            tuple((-sx / sensor_pitch, -sy / sensor_pitch) for sx, sy in (f.shift for f in frames))
        )
    half = estimate_shifts(frames)
    return ShiftTable(tuple((2.0 * dx, 2.0 * dy) for dx, dy in half.shifts))


def prepare_network_input(
    frames: list[HologramFrame],
    w: CrosstalkMatrix,
    z: float | str,
    n: float = 1.0,
    factor: int = 3,
    layout: BayerLayout = RGGB,
    fill: str = "interpolate",
    search: FocusSearch | None = None,
    shifts: ShiftTable | None = None,
    pad_factor: int = 1,
) -> tuple[NetworkInputTensor, float]:
    """Build the 6-channel network input from one height's Bayer raster.

    Channel order is (Re_R, Im_R, Re_G, Im_G, Re_B, Im_B); each color is
    backpropagated at its own illumination wavelength over the common
    distance ``z`` (autofocused on the green hologram when ``z="auto"``).
    Returns the tensor and the distance actually used.
    """
    if not frames:
        raise DimensionMismatch("no frames supplied")
    if shifts is None:
        shifts = _mosaic_shift_table(frames, layout, "estimate")
    r, g, b = dpsr(frames, shifts, layout, w, factor, fill=fill)
    wavelengths = tuple(sorted(frames[0].illumination))
    w_b, w_g, w_r = wavelengths
    if z == "auto":
        if search is None:
            raise ConfigError("z='auto' requires an autofocus search window")
        z_used = estimate_z(from_intensity(g, w_g), search, n)
    else:
        z_used = float(z)
    planes = []
    for hologram, wl in ((r, w_r), (g, w_g), (b, w_b)):
        lifted = from_intensity(RealField(np.clip(hologram.data, 0.0, None), hologram.pitch), wl)
        back = propagate(lifted, PropagationParams(-z_used, n), pad_factor)
        planes.extend((back.data.real, back.data.imag))
    tensor = NetworkInputTensor(
        data=np.stack(planes, axis=-1),
        pitch=r.pitch,
        wavelengths=(w_b, w_g, w_r),
    )
    return tensor, z_used


# --------------------------------------------------------------------------
# color helpers


def three_channel_composite(
    t_by_wavelength: dict[float, np.ndarray],
    cmf: ColorMatchingTable,
    illum: Illuminant,
) -> RgbImage:
    """Render three per-wavelength transmittance maps to display sRGB.

    A display stand-in, not a color-accuracy claim: XYZ is accumulated
    from delta-like spectra at the three illumination wavelengths and
    rescaled component-wise so a perfectly clear sample maps exactly to
    the illuminant white point.
    """
    if len(t_by_wavelength) != 3:
        raise DimensionMismatch(f"need exactly 3 wavelengths, got {len(t_by_wavelength)}")
    xyz_raw = None
    white_raw = np.zeros(3)
    for wl, t_map in sorted(t_by_wavelength.items()):
        idx = int(np.argmin(np.abs(cmf.wavelengths - wl)))
        if abs(cmf.wavelengths[idx] - wl) > 5.0:
            raise DimensionMismatch(f"wavelength {wl} is outside the tabulated grid")
        weight = cmf.values[idx] * illum.power[idx]
        contribution = t_map[..., None] * weight[None, None, :]
        xyz_raw = contribution if xyz_raw is None else xyz_raw + contribution
        white_raw += weight
    xyz = xyz_raw * (WHITE_POINT / white_raw)[None, None, :]
    return xyz_to_srgb(XyzImage(xyz))


def _transmittance(fld: ComplexField) -> np.ndarray:
    """Squared modulus normalized by the background level (99th percentile),
    so clear regions sit near 1 regardless of illumination scale."""
    t = np.abs(fld.data) ** 2
    background = float(np.percentile(t, 99.0))
    if background <= 0.0:
        return t
    return t / background


# --------------------------------------------------------------------------
# stitching


def stitch(
    tiles: list[RgbImage],
    offsets: list[tuple[int, int]],
    overlap_fraction: float,
) -> RgbImage:
    """Blend overlapping tiles into one image with linear ramps.

    ``offsets`` are (x, y) top-left positions in output pixels. Within an
    overlap of width ``ov = round(overlap_fraction * tile_size)`` the
    outgoing tile's weight falls linearly while the incoming tile's rises,
    summing to one; tile edges on the output boundary keep full weight.

    Raises
    ------
    CoverageGap
        If any output pixel is covered by no tile.
    """
    if len(tiles) != len(offsets):
        raise DimensionMismatch(f"{len(tiles)} tiles but {len(offsets)} offsets")
    if not tiles:
        raise DimensionMismatch("no tiles to stitch")
    if not (0.0 <= overlap_fraction < 0.5):
        raise ValueError(f"overlap fraction must be in [0, 0.5), got {overlap_fraction}")
    out_w = max(off[0] + tile.width for tile, off in zip(tiles, offsets))
    out_h = max(off[1] + tile.height for tile, off in zip(tiles, offsets))
    if min(off[0] for off in offsets) < 0 or min(off[1] for off in offsets) < 0:
        raise ValueError("offsets must be nonnegative")

    acc = np.zeros((out_h, out_w, 3))
    weight = np.zeros((out_h, out_w))
    for tile, (x0, y0) in zip(tiles, offsets):
        wx = _ramp_profile(tile.width, x0, x0 + tile.width, out_w, overlap_fraction)
        wy = _ramp_profile(tile.height, y0, y0 + tile.height, out_h, overlap_fraction)
        w2 = wy[:, None] * wx[None, :]
        acc[y0 : y0 + tile.height, x0 : x0 + tile.width] += w2[..., None] * tile.data
        weight[y0 : y0 + tile.height, x0 : x0 + tile.width] += w2
    if np.any(weight == 0):
        gaps = int((weight == 0).sum())
        raise CoverageGap(f"{gaps} output pixels are covered by no tile")
    return RgbImage(acc / weight[..., None])


def _ramp_profile(size: int, lo: int, hi: int, out_size: int, overlap: float) -> np.ndarray:
    ov = int(round(overlap * size))
    profile = np.ones(size)
    if ov > 0:
        ramp = (np.arange(ov) + 1.0) / (ov + 1.0)
        if lo > 0:
            profile[:ov] = np.minimum(profile[:ov], ramp)
        if hi < out_size:
            profile[size - ov :] = np.minimum(profile[size - ov :], ramp[::-1])
    return profile


# --------------------------------------------------------------------------
# image file helpers


def save_png(image: RgbImage, path: str | os.PathLike) -> None:
    """8-bit PNG export for display; quantization happens only here."""
    data = np.clip(image.data, 0.0, 1.0)
    Image.fromarray(np.rint(data * 255.0).astype(np.uint8), mode="RGB").save(path)


def load_rgb(path: str | os.PathLike) -> RgbImage:
    """Read an RGB image from a 3-plane raster or an 8-bit PNG."""
    text = os.fspath(path)
    if text.lower().endswith(".png"):
        with Image.open(text) as img:
            arr = np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0
        return RgbImage(arr)
    data, _, _ = raster.read_tensor(text)
    if data.shape[2] != 3:
        raise DimensionMismatch(f"{path}: expected 3 planes, got {data.shape[2]}")
    return RgbImage(data)


def save_rgb_raster(image: RgbImage, pitch: float, path: str | os.PathLike) -> None:
    raster.write_tensor(image.data, pitch, (450.0, 540.0, 590.0), path)


def write_report(report: dict, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in report.items():
            if isinstance(value, float):
                fh.write(f"{key}={value:.6g}\n")
            else:
                fh.write(f"{key}={value}\n")


# --------------------------------------------------------------------------
# the run orchestrator


@dataclass(frozen=True)
class PipelineResult:
    rgb: RgbImage | None
    tensor: NetworkInputTensor | None
    recovered: dict[float, ComplexField]
    report: dict
    output_dir: str


def _group_by_height(frames: list[HologramFrame]) -> dict[int, list[HologramFrame]]:
    groups: dict[int, list[HologramFrame]] = {}
    for frame in frames:
        groups.setdefault(frame.height_index, []).append(frame)
    return dict(sorted(groups.items()))


def _resolve_heights(
    cfg: PipelineConfig,
    height_indices: list[int],
    z_map: dict[int, float],
    hr_by_height: dict[int, dict[float, RealField]],
) -> dict[int, float]:
    if cfg.heights_source == "config":
        if len(cfg.heights) != len(height_indices):
            raise ConfigError(
                f"heights.z_um lists {len(cfg.heights)} values for {len(height_indices)} heights"
            )
        return {h: z for h, z in zip(height_indices, cfg.heights)}
    if cfg.heights_source == "manifest":
        missing = [h for h in height_indices if h not in z_map]
        if missing:
            raise ConfigError(f"manifest provides no z_um for heights {missing}")
        return {h: z_map[h] for h in height_indices}
    # autofocus: estimate on the wavelength nearest 540 nm at each height
    out: dict[int, float] = {}
    for h in height_indices:
        holograms = hr_by_height[h]
        wl = min(holograms, key=lambda w: abs(w - 540.0))
        hologram = holograms[wl]
        clipped = RealField(np.clip(hologram.data, 0.0, None), hologram.pitch)
        out[h] = estimate_z(from_intensity(clipped, wl), cfg.autofocus, cfg.recovery.n)
        log.info("autofocus height %d: z = %.2f um", h, out[h])
    return out


def _super_resolve(
    cfg: PipelineConfig,
    groups: dict[int, list[HologramFrame]],
    w: CrosstalkMatrix | None,
) -> dict[int, dict[float, RealField]]:
    """PSR every height into per-wavelength HR holograms."""
    out: dict[int, dict[float, RealField]] = {}
    if cfg.mode == "multiheight-multiplexed" or cfg.mode == "singleshot-network-input":
        for h, frames in groups.items():
            shifts = _mosaic_shift_table(frames, RGGB, cfg.shifts_source)
            r, g, b = dpsr(frames, shifts, RGGB, w, cfg.factor, fill=cfg.fill)
            wl = tuple(sorted(frames[0].illumination))
            out[h] = {wl[2]: r, wl[1]: g, wl[0]: b}
        return out
    # sequential family: frames are single-channel quarter lattices
    for h, frames in groups.items():
        by_wl: dict[float, list[HologramFrame]] = {}
        for frame in frames:
            if len(frame.illumination) != 1:
                raise ConfigError(
                    f"mode {cfg.mode} expects sequential frames, got multiplexed"
                )
            by_wl.setdefault(frame.illumination[0], []).append(frame)
        out[h] = {}
        for wl, group in sorted(by_wl.items()):
            shifts = _quarter_shift_table(group, cfg.shifts_source)
            offset = RGGB.offset(group[0].channel)
            sensor_pitch = group[0].intensity.pitch / 2.0
            quarters = [f.intensity.data for f in group]
            out[h][wl] = channel_psr(
                quarters, shifts, offset, sensor_pitch, cfg.factor, fill=cfg.fill
            )
    return out


def _recover_wavelength(
    cfg: PipelineConfig,
    hr_by_height: dict[int, dict[float, RealField]],
    zs: dict[int, float],
    wl: float,
) -> ComplexField:
    measurements = []
    for h in sorted(hr_by_height):
        hologram = hr_by_height[h][wl]
        clipped = np.clip(hologram.data, 0.0, None)
        measurements.append(
            HeightMeasurement(
                intensity=RealField(clipped, hologram.pitch), z=zs[h], wavelength=wl
            )
        )
    measurements.sort(key=lambda m: m.z)
    return multiheight_recover(measurements, cfg.recovery, cfg.object_z)


def _tile_starts(size: int, tile: int, ov: int) -> list[int]:
    if tile >= size:
        return [0]
    step = tile - ov
    starts = list(range(0, size - tile, step))
    starts.append(size - tile)
    return sorted(set(starts))


def run(cfg: PipelineConfig) -> PipelineResult:
    """Execute a full reconstruction run and write its artifacts."""
    t_start = time.perf_counter()
    os.makedirs(cfg.output_dir, exist_ok=True)
    frames, z_map = load_manifest(cfg.manifest)
    groups = _group_by_height(frames)
    w = load_crosstalk(cfg.crosstalk) if cfg.crosstalk else None
    cmf = load_cmf(cfg.cmf_path)
    illum = load_illuminant(cfg.illuminant_path)
    report: dict = {"mode": cfg.mode, "heights": len(groups), "frames": len(frames)}
    timings: dict[str, float] = {}

    tensor = None
    rgb = None
    recovered: dict[float, ComplexField] = {}

    if cfg.mode == "singleshot-network-input":
        if len(groups) != 1:
            raise ConfigError(
                f"singleshot mode expects one height, manifest has {len(groups)}"
            )
        t0 = time.perf_counter()
        only = next(iter(groups.values()))
        tensor, z_used = prepare_network_input(
            only,
            w,
            cfg.network_z,
            n=cfg.recovery.n,
            factor=cfg.factor,
            fill=cfg.fill,
            search=cfg.autofocus,
            shifts=_mosaic_shift_table(only, RGGB, cfg.shifts_source),
            pad_factor=cfg.recovery.pad_factor,
        )
        timings["backpropagation"] = time.perf_counter() - t0
        report["z_um"] = z_used
        save_network_input(tensor, os.path.join(cfg.output_dir, "network_input.hsf1"))
    else:
        t0 = time.perf_counter()
        hr_by_height = _super_resolve(cfg, groups, w)
        timings["psr"] = time.perf_counter() - t0
        log.info("super-resolution: %.2f s", timings["psr"])

        zs = _resolve_heights(cfg, list(groups), z_map, hr_by_height)
        report["z_um"] = ",".join(f"{zs[h]:g}" for h in sorted(zs))
        wavelengths = sorted(next(iter(hr_by_height.values())))

        t0 = time.perf_counter()
        tiles_cfg = None
        if cfg.tile > 0:
            sample = next(iter(hr_by_height.values()))[wavelengths[0]]
            ov = int(round(cfg.overlap * cfg.tile))
            ys = _tile_starts(sample.height, cfg.tile, ov)
            xs = _tile_starts(sample.width, cfg.tile, ov)
            tiles_cfg = (ys, xs)

        if tiles_cfg is None:
            for wl in wavelengths:
                recovered[wl] = _recover_wavelength(cfg, hr_by_height, zs, wl)
            timings["recovery"] = time.perf_counter() - t0
            log.info("phase recovery: %.2f s", timings["recovery"])

            t0 = time.perf_counter()
            rgb = _render_color(cfg, recovered, cmf, illum)
            timings["color"] = time.perf_counter() - t0
        else:
            ys, xs = tiles_cfg
            tile_images: list[RgbImage] = []
            offsets: list[tuple[int, int]] = []
            for y0 in ys:
                for x0 in xs:
                    cropped = {
                        h: {
                            wl: RealField(
                                fld.data[y0 : y0 + cfg.tile, x0 : x0 + cfg.tile],
                                fld.pitch,
                            )
                            for wl, fld in per_wl.items()
                        }
                        for h, per_wl in hr_by_height.items()
                    }
                    tile_rec = {
                        wl: _recover_wavelength(cfg, cropped, zs, wl)
                        for wl in wavelengths
                    }
                    tile_images.append(_render_color(cfg, tile_rec, cmf, illum))
                    offsets.append((x0, y0))
            timings["recovery"] = time.perf_counter() - t0
            t0 = time.perf_counter()
            rgb = stitch(tile_images, offsets, cfg.overlap)
            timings["stitch"] = time.perf_counter() - t0
            log.info("stitched %d tiles: %.2f s", len(tile_images), timings["stitch"])

        pitch = next(iter(hr_by_height.values()))[wavelengths[0]].pitch
        save_rgb_raster(rgb, pitch, os.path.join(cfg.output_dir, "rgb.hsf1"))
        save_png(rgb, os.path.join(cfg.output_dir, "rgb.png"))
        for wl, fld in recovered.items():
            raster.write_raster(fld, os.path.join(cfg.output_dir, f"recovered_{wl:.0f}nm.hsf1"))

    if cfg.reference and rgb is not None:
        reference = load_rgb(cfg.reference)
        report["ssim"] = ssim(reference, rgb)
        report["delta_e94"] = delta_e94(reference, rgb)
        log.info("ssim=%.4f delta_e94=%.4f", report["ssim"], report["delta_e94"])

    timings["total"] = time.perf_counter() - t_start
    for stage, seconds in timings.items():
        report[f"timing_{stage}_s"] = seconds
    write_report(report, os.path.join(cfg.output_dir, "report.txt"))
    _write_resolved_config(cfg, os.path.join(cfg.output_dir, "resolved.cfg"))
    return PipelineResult(
        rgb=rgb,
        tensor=tensor,
        recovered=recovered,
        report=report,
        output_dir=cfg.output_dir,
    )


def _render_color(
    cfg: PipelineConfig,
    recovered: dict[float, ComplexField],
    cmf: ColorMatchingTable,
    illum: Illuminant,
) -> RgbImage:
    t_maps = {wl: _transmittance(fld) for wl, fld in recovered.items()}
    if cfg.mode == "hyperspectral":
        expected = [float(w) for w in WAVELENGTH_GRID]
        got = sorted(t_maps)
        if got != expected:
            raise ConfigError(
                f"hyperspectral mode needs all 31 grid wavelengths, got {len(got)}"
            )
        cube = SpectralCube(
            np.stack([t_maps[w] for w in expected], axis=-1),
            next(iter(recovered.values())).pitch,
        )
        return xyz_to_srgb(tristimulus(cube, cmf, illum))
    return three_channel_composite(t_maps, cmf, illum)


def _write_resolved_config(cfg: PipelineConfig, path: str | os.PathLike) -> None:
    parser = configparser.ConfigParser()
    parser["pipeline"] = {
        "mode": cfg.mode,
        "output_dir": cfg.output_dir,
        **({"reference": cfg.reference} if cfg.reference else {}),
    }
    parser["input"] = {
        "manifest": cfg.manifest,
        **({"crosstalk": cfg.crosstalk} if cfg.crosstalk else {}),
    }
    parser["psr"] = {
        "factor": str(cfg.factor),
        "fill": cfg.fill,
        "shifts": cfg.shifts_source,
    }
    parser["recovery"] = {
        "max_iterations": str(cfg.recovery.max_iterations),
        "tolerance": repr(cfg.recovery.tolerance),
        "refractive_index": repr(cfg.recovery.n),
        "object_z": repr(cfg.object_z),
    }
    parser["propagation"] = {"pad_factor": str(cfg.recovery.pad_factor)}
    parser["heights"] = {
        "source": cfg.heights_source,
        **({"z_um": ", ".join(repr(z) for z in cfg.heights)} if cfg.heights else {}),
    }
    if cfg.autofocus is not None:
        parser["autofocus"] = {
            "z_min": repr(cfg.autofocus.z_min),
            "z_max": repr(cfg.autofocus.z_max),
            "coarse_step": repr(cfg.autofocus.coarse_step),
            "refine_tolerance": repr(cfg.autofocus.refine_tolerance),
        }
    parser["tiling"] = {"tile": str(cfg.tile), "overlap": repr(cfg.overlap)}
    parser["network"] = {"z": str(cfg.network_z)}
    parser["color"] = {
        "cmf": cfg.cmf_path or "builtin",
        "illuminant": cfg.illuminant_path or "builtin",
    }
    with open(path, "w", encoding="utf-8") as fh:
        parser.write(fh)
