"""Lossless raster serialization (HSF1).

Layout, all little-endian:

``magic "HSF1" | dtype u32 | width u32 | height u32 | pitch f64 | wavelength f64``

followed by the payload as row-major float64:

* dtype 1: one real plane, ``height * width`` doubles. The wavelength
  header slot is written as 0.
* dtype 2: one complex plane, ``height * width`` (re, im) pairs.
* dtype 3: interleaved real planes. A 32-byte extension header follows
  the base header: ``channels u32 | reserved u32 | 3 x wavelength f64``.
  The payload is ``height * width * channels`` doubles, channel-fastest
  (all channels of a pixel are adjacent).

Round trips are bit-exact: payloads are written from and read into
float64 without any conversion.
"""
from __future__ import annotations

import os
import struct

import numpy as np

from .errors import FormatError
from .fields import ComplexField, RealField

MAGIC = b"HSF1"
DTYPE_REAL = 1
DTYPE_COMPLEX = 2
DTYPE_PLANES = 3

_HEADER = struct.Struct("<4sIIIdd")
_PLANES_EXT = struct.Struct("<II3d")


def write_raster(fld: RealField | ComplexField, path: str | os.PathLike) -> None:
    """Serialize a field to an HSF1 file."""
    if isinstance(fld, ComplexField):
        header = _HEADER.pack(
            MAGIC, DTYPE_COMPLEX, fld.width, fld.height, fld.pitch, fld.wavelength
        )
        payload = np.empty((fld.height, fld.width, 2), dtype="<f8")
        payload[..., 0] = fld.data.real
        payload[..., 1] = fld.data.imag
    elif isinstance(fld, RealField):
        header = _HEADER.pack(MAGIC, DTYPE_REAL, fld.width, fld.height, fld.pitch, 0.0)
        payload = np.ascontiguousarray(fld.data, dtype="<f8")
    else:
        raise TypeError(f"cannot serialize {type(fld).__name__}")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload.tobytes())


def _read_header(blob: bytes, path) -> tuple[int, int, int, float, float]:
    if len(blob) < _HEADER.size:
        raise FormatError(f"{path}: truncated header ({len(blob)} bytes)")
    magic, dtype, width, height, pitch, wavelength = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if width < 1 or height < 1:
        raise FormatError(f"{path}: degenerate dimensions {width}x{height}")
    if not pitch > 0:
        raise FormatError(f"{path}: nonpositive pitch {pitch}")
    return dtype, width, height, pitch, wavelength


def read_raster(path: str | os.PathLike) -> RealField | ComplexField:
    """Read an HSF1 file back into the matching field type.

    Raises
    ------
    FormatError
        On bad magic, unknown dtype tag, or a payload whose length does
        not match the header dimensions.
    """
    with open(path, "rb") as fh:
        blob = fh.read()
    dtype, width, height, pitch, wavelength = _read_header(blob, path)
    body = blob[_HEADER.size:]
    if dtype == DTYPE_REAL:
        expected = width * height * 8
        if len(body) != expected:
            raise FormatError(
                f"{path}: payload is {len(body)} bytes, header implies {expected}"
            )
        data = np.frombuffer(body, dtype="<f8").reshape(height, width)
        return RealField(data, pitch)
    if dtype == DTYPE_COMPLEX:
        expected = width * height * 16
        if len(body) != expected:
            raise FormatError(
                f"{path}: payload is {len(body)} bytes, header implies {expected}"
            )
        pairs = np.frombuffer(body, dtype="<f8").reshape(height, width, 2)
        return ComplexField(pairs[..., 0] + 1j * pairs[..., 1], pitch, wavelength)
    if dtype == DTYPE_PLANES:
        raise FormatError(f"{path}: multi-plane file, use read_tensor")
    raise FormatError(f"{path}: unknown dtype tag {dtype}")


def write_tensor(
    data: np.ndarray,
    pitch: float,
    wavelengths: tuple[float, float, float],
    path: str | os.PathLike,
) -> None:
    """Serialize an ``(H, W, C)`` stack of real planes (dtype tag 3)."""
    arr = np.ascontiguousarray(data, dtype="<f8")
    if arr.ndim != 3:
        raise ValueError(f"tensor must be (H, W, C), got shape {arr.shape}")
    height, width, channels = arr.shape
    wl = tuple(float(w) for w in wavelengths)
    if len(wl) != 3:
        raise ValueError("exactly three reference wavelengths are stored")
    header = _HEADER.pack(MAGIC, DTYPE_PLANES, width, height, float(pitch), 0.0)
    ext = _PLANES_EXT.pack(channels, 0, *wl)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(ext)
        fh.write(arr.tobytes())


def read_tensor(path: str | os.PathLike) -> tuple[np.ndarray, float, tuple[float, ...]]:
    """Read a dtype-3 HSF1 file; returns ``(data, pitch, wavelengths)``."""
    with open(path, "rb") as fh:
        blob = fh.read()
    dtype, width, height, pitch, _ = _read_header(blob, path)
    if dtype != DTYPE_PLANES:
        raise FormatError(f"{path}: dtype tag {dtype} is not a multi-plane file")
    if len(blob) < _HEADER.size + _PLANES_EXT.size:
        raise FormatError(f"{path}: truncated plane extension header")
    channels, _, w0, w1, w2 = _PLANES_EXT.unpack_from(blob, _HEADER.size)
    if channels < 1:
        raise FormatError(f"{path}: nonpositive channel count {channels}")
    body = blob[_HEADER.size + _PLANES_EXT.size:]
    expected = width * height * channels * 8
    if len(body) != expected:
        raise FormatError(
            f"{path}: payload is {len(body)} bytes, header implies {expected}"
        )
    data = np.frombuffer(body, dtype="<f8").reshape(height, width, channels).copy()
    return data, pitch, (w0, w1, w2)
