"""Pixel super-resolution and Bayer cross-talk demultiplexing.

Multiple low-resolution holograms taken at sub-pixel lateral offsets are
merged onto a denser lattice by shift-and-add: every sample is deposited
at its nearest high-resolution site after shift compensation, sites are
averaged as sum/count so the result is independent of frame order, and
uncovered sites are filled by interpolation (or rejected in strict mode).

Shifts are expressed as apparent image translation in units of the input
lattice's own pixels: a frame whose content sits ``(dx, dy)`` pixels
right/down of the reference has shift ``(dx, dy)``. ``estimate_shifts``
recovers exactly this quantity, relative to the first frame.

For color sensors, ``dpsr`` performs the demultiplexed variant: each raw
Bayer mosaic is split into its four channel sub-lattices, each channel is
shift-and-added onto a common high-resolution grid with its intrinsic
half-pixel mosaic offset folded into the stage shifts, and the four
channel holograms are unmixed into R/G/B holograms with a 3x4 demixing
matrix.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import griddata

from .errors import ConfigMismatch, DimensionMismatch, EmptyCell, FormatError
from .fields import Channel, HologramFrame, RealField


@dataclass(frozen=True)
class ShiftTable:
    """Per-frame apparent translation ``(dx, dy)`` in input pixels."""

    shifts: tuple[tuple[float, float], ...]

    def __post_init__(self):
        object.__setattr__(
            self,
            "shifts",
            tuple((float(dx), float(dy)) for dx, dy in self.shifts),
        )

    def __len__(self) -> int:
        return len(self.shifts)


@dataclass(frozen=True)
class CrosstalkMatrix:
    """3x4 demixing matrix: rows (R, G, B), columns (R, G1, G2, B)."""

    w: np.ndarray

    def __post_init__(self):
        arr = np.array(self.w, dtype=np.float64)
        if arr.shape != (3, 4):
            raise DimensionMismatch(f"demixing matrix must be 3x4, got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("demixing matrix has non-finite entries")
        arr.flags.writeable = False
        object.__setattr__(self, "w", arr)


# Demixing matrix that ignores cross-talk entirely: R and B pass through,
# G averages the two green sites.
IDENTITY_DEMIX = CrosstalkMatrix(
    np.array(
        [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.5, 0.5, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )
)


def load_crosstalk(path: str | os.PathLike) -> CrosstalkMatrix:
    """Read a 3x4 demixing matrix from a whitespace-separated text file.

    Lines starting with ``#`` are comments. Exactly three rows of four
    floats are required.
    """
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            parts = body.split()
            if len(parts) != 4:
                raise FormatError(f"{path}: expected 4 columns, got {len(parts)}")
            rows.append([float(p) for p in parts])
    if len(rows) != 3:
        raise FormatError(f"{path}: expected 3 rows, got {len(rows)}")
    return CrosstalkMatrix(np.array(rows))


def save_crosstalk(matrix: CrosstalkMatrix, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# demixing matrix, rows R G B, columns R G1 G2 B\n")
        for row in matrix.w:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


@dataclass(frozen=True)
class BayerLayout:
    """2x2 mosaic pattern; ``pattern[row][col]`` is the channel at sensor
    site ``(row mod 2, col mod 2)``. Must contain R, G1, G2, B exactly
    once each."""

    pattern: tuple[tuple[Channel, Channel], tuple[Channel, Channel]]

    def __post_init__(self):
        flat = [self.pattern[0][0], self.pattern[0][1], self.pattern[1][0], self.pattern[1][1]]
        if sorted(c.value for c in flat) != ["B", "G1", "G2", "R"]:
            raise ValueError("layout must contain R, G1, G2, B exactly once")

    def offset(self, channel: Channel) -> tuple[int, int]:
        """(col, row) parity of a channel's sites within the mosaic."""
        for row in (0, 1):
            for col in (0, 1):
                if self.pattern[row][col] is channel:
                    return (col, row)
        raise ValueError(f"channel {channel} not present in layout")


RGGB = BayerLayout(((Channel.R, Channel.G1), (Channel.G2, Channel.B)))


def sequential_channel(wavelength: float) -> Channel:
    """Channel used under sequential single-wavelength illumination:
    B below 480 nm, G1 up to 580 nm, R from 590 nm."""
    if wavelength < 480.0:
        return Channel.B
    if wavelength < 590.0:
        return Channel.G1
    return Channel.R


def _check_same_lattice(frames: list[HologramFrame]) -> None:
    first = frames[0].intensity
    for frame in frames[1:]:
        f = frame.intensity
        if (f.width, f.height) != (first.width, first.height) or f.pitch != first.pitch:
            raise DimensionMismatch(
                "frames must share dimensions and pitch; got "
                f"{f.width}x{f.height}@{f.pitch} vs {first.width}x{first.height}@{first.pitch}"
            )


def _parabolic_offset(ym1: float, y0: float, yp1: float) -> float:
    denom = ym1 - 2.0 * y0 + yp1
    if denom == 0.0:
        return 0.0
    off = 0.5 * (ym1 - yp1) / denom
    # A true local maximum keeps the vertex inside the bracket.
    return float(np.clip(off, -1.0, 1.0))


def estimate_shifts(frames: list[HologramFrame], window: str | None = None) -> ShiftTable:
    """Estimate per-frame translation relative to the first frame.

    Cross-correlation via the FFT with sub-pixel refinement by a
    parabolic fit through the correlation peak and its neighbors, per
    axis. ``window="hann"`` applies a separable Hann window first, which
    suppresses edge effects on non-periodic scenes.

    The first frame's shift is (0, 0) by definition.
    """
    if len(frames) < 2:
        raise DimensionMismatch("need at least two frames to estimate shifts")
    _check_same_lattice(frames)
    channels = {frame.channel for frame in frames}
    if len(channels) > 1:
        raise DimensionMismatch(f"frames mix channels {sorted(c.value for c in channels)}")

    ref = frames[0].intensity.data
    height, width = ref.shape
    if window is None:
        win = 1.0
    elif window == "hann":
        wy = np.hanning(height)[:, None]
        wx = np.hanning(width)[None, :]
        win = wy * wx
    else:
        raise ValueError(f"unknown window {window!r}")

    ref_spec = np.fft.fft2((ref - ref.mean()) * win)
    shifts = [(0.0, 0.0)]
    for frame in frames[1:]:
        img = frame.intensity.data
        spec = np.fft.fft2((img - img.mean()) * win)
        corr = np.fft.ifft2(spec * np.conj(ref_spec)).real
        peak = np.unravel_index(int(np.argmax(corr)), corr.shape)
        py, px = int(peak[0]), int(peak[1])
        dx = px + _parabolic_offset(
            corr[py, (px - 1) % width], corr[py, px], corr[py, (px + 1) % width]
        )
        dy = py + _parabolic_offset(
            corr[(py - 1) % height, px], corr[py, px], corr[(py + 1) % height, px]
        )
        if dx > width / 2:
            dx -= width
        if dy > height / 2:
            dy -= height
        shifts.append((dx, dy))
    return ShiftTable(tuple(shifts))


def shift_and_add(
    frames: list[HologramFrame],
    shifts: ShiftTable,
    factor: int,
    fill: str = "interpolate",
) -> RealField:
    """Merge shifted low-resolution frames onto a ``factor``-times denser
    lattice.

    Each sample of frame k at lattice site (i, j) is deposited at the
    nearest high-resolution site of ``((j - dx_k) * factor,
    (i - dy_k) * factor)``, wrapped periodically; sites hit more than once
    are averaged (sum / count, order-independent). Sites hit never are
    filled from their neighbors (``fill="interpolate"``) or raise
    ``EmptyCell`` (``fill="strict"``).

    The output pitch is ``input pitch / factor``.
    """
    if not frames:
        raise DimensionMismatch("no frames to merge")
    if int(factor) != factor or factor < 1:
        raise ValueError(f"factor must be an integer >= 1, got {factor}")
    factor = int(factor)
    if len(shifts) != len(frames):
        raise DimensionMismatch(
            f"{len(frames)} frames but {len(shifts)} shifts"
        )
    if fill not in ("interpolate", "strict"):
        raise ValueError(f"unknown fill policy {fill!r}")
    _check_same_lattice(frames)

    height = frames[0].intensity.height
    width = frames[0].intensity.width
    hr_h, hr_w = height * factor, width * factor
    acc = np.zeros((hr_h, hr_w))
    count = np.zeros((hr_h, hr_w))
    rows = np.arange(height, dtype=np.float64)[:, None]
    cols = np.arange(width, dtype=np.float64)[None, :]
    for frame, (dx, dy) in zip(frames, shifts.shifts):
        ri = np.rint((rows - dy) * factor).astype(np.int64) % hr_h
        cj = np.rint((cols - dx) * factor).astype(np.int64) % hr_w
        np.add.at(acc, (ri, cj), frame.intensity.data)
        np.add.at(count, (ri, cj), 1.0)

    covered = count > 0
    out = np.zeros_like(acc)
    out[covered] = acc[covered] / count[covered]
    if not covered.all():
        if fill == "strict":
            empty = int((~covered).sum())
            raise EmptyCell(f"{empty} high-resolution sites received no sample")
        out = _fill_holes(out, covered)

    return RealField(out, frames[0].intensity.pitch / factor)


def _fill_holes(img: np.ndarray, covered: np.ndarray) -> np.ndarray:
    """Fill uncovered sites by linear interpolation from covered ones,
    falling back to nearest-neighbor outside the covered hull."""
    points = np.argwhere(covered)
    values = img[covered]
    holes = np.argwhere(~covered)
    filled = img.copy()
    est = griddata(points, values, holes, method="linear")
    bad = np.isnan(est)
    if bad.any():
        est[bad] = griddata(points, values, holes[bad], method="nearest")
    filled[~covered] = est
    return filled


def demultiplex(
    r: RealField, g1: RealField, g2: RealField, b: RealField, w: CrosstalkMatrix
) -> tuple[RealField, RealField, RealField]:
    """Unmix the four Bayer channel holograms into R, G, B holograms.

    Per pixel, the output 3-vector is ``w @ (r, g1, g2, b)``. The map is
    linear and unclamped; mild negative excursions are legitimate outputs
    of cross-talk removal.
    """
    stack = [r, g1, g2, b]
    first = stack[0]
    for f in stack[1:]:
        if f.data.shape != first.data.shape or f.pitch != first.pitch:
            raise DimensionMismatch("channel lattices must share shape and pitch")
    cube = np.stack([f.data for f in stack], axis=0)
    mixed = np.einsum("ck,khw->chw", w.w, cube)
    return (
        RealField(mixed[0], first.pitch),
        RealField(mixed[1], first.pitch),
        RealField(mixed[2], first.pitch),
    )


def split_mosaic(frame: HologramFrame, layout: BayerLayout) -> dict[Channel, np.ndarray]:
    """Extract the four quarter-resolution channel lattices of a mosaic."""
    data = frame.intensity.data
    if data.shape[0] % 2 or data.shape[1] % 2:
        raise ConfigMismatch(
            f"Bayer mosaic dimensions must be even, got {data.shape[1]}x{data.shape[0]}"
        )
    out: dict[Channel, np.ndarray] = {}
    for row in (0, 1):
        for col in (0, 1):
            out[layout.pattern[row][col]] = data[row::2, col::2]
    return out


def channel_psr(
    quarters: list[np.ndarray],
    sensor_shifts: ShiftTable,
    offset: tuple[int, int],
    sensor_pitch: float,
    factor: int,
    fill: str = "interpolate",
) -> RealField:
    """Shift-and-add one Bayer channel onto the sensor-aligned HR grid.

    ``sensor_shifts`` are apparent translations in full sensor pixels;
    ``offset`` is the channel's (col, row) mosaic parity. Channel lattices
    have twice the sensor pitch, so the effective per-channel shift is
    ``(shift - offset) / 2`` channel pixels and the merge factor is
    ``2 * factor``, which lands every channel on the common lattice at
    ``sensor_pitch / factor``.
    """
    ox, oy = offset
    ch_shifts = ShiftTable(
        tuple(((dx - ox) / 2.0, (dy - oy) / 2.0) for dx, dy in sensor_shifts.shifts)
    )
    ch_frames = [
        HologramFrame(
            intensity=RealField(q, sensor_pitch * 2.0),
            shift=(0.0, 0.0),
            height_index=0,
            channel=Channel.MONO,
            illumination=(550.0,),
        )
        for q in quarters
    ]
    return shift_and_add(ch_frames, ch_shifts, 2 * factor, fill=fill)


def demix_from_mixing(mixing: np.ndarray) -> CrosstalkMatrix:
    """Least-squares demixing matrix for a 4x3 sensor mixing matrix.

    ``mixing`` maps per-wavelength intensities (ascending wavelength) to
    the four channel responses (R, G1, G2, B). The pseudo-inverse rows
    come out in ascending wavelength order and are flipped to the (R, G,
    B) output convention. For an ideal sensor this reproduces
    ``IDENTITY_DEMIX``.
    """
    arr = np.array(mixing, dtype=np.float64)
    if arr.shape != (4, 3):
        raise DimensionMismatch(f"mixing matrix must be 4x3, got {arr.shape}")
    return CrosstalkMatrix(np.linalg.pinv(arr)[::-1, :])


def dpsr(
    bayer_frames: list[HologramFrame],
    shifts: ShiftTable,
    layout: BayerLayout,
    w: CrosstalkMatrix,
    factor: int,
    fill: str = "interpolate",
) -> tuple[RealField, RealField, RealField]:
    """Demultiplexed pixel super-resolution of raw Bayer mosaics.

    Returns the three unmixed high-resolution holograms (R, G, B) at
    ``sensor pitch / factor``. With ``IDENTITY_DEMIX`` and a zero
    cross-talk acquisition this reduces exactly to per-channel
    shift-and-add.
    """
    if not bayer_frames:
        raise DimensionMismatch("no frames to merge")
    for frame in bayer_frames:
        if len(frame.illumination) != 3:
            raise ConfigMismatch(
                "dpsr expects multiplexed frames (three illumination wavelengths)"
            )
    if len(shifts) != len(bayer_frames):
        raise DimensionMismatch(f"{len(bayer_frames)} frames but {len(shifts)} shifts")
    _check_same_lattice(bayer_frames)

    sensor_pitch = bayer_frames[0].intensity.pitch
    splits = [split_mosaic(frame, layout) for frame in bayer_frames]
    per_channel: dict[Channel, RealField] = {}
    for channel in (Channel.R, Channel.G1, Channel.G2, Channel.B):
        offset = layout.offset(channel)
        quarters = [s[channel] for s in splits]
        per_channel[channel] = channel_psr(
            quarters, shifts, offset, sensor_pitch, factor, fill=fill
        )
    return demultiplex(
        per_channel[Channel.R],
        per_channel[Channel.G1],
        per_channel[Channel.G2],
        per_channel[Channel.B],
        w,
    )
