"""Exception types raised by the reconstruction chain.

Names follow the error contracts of the public operations; everything
derives from :class:`HolochromeError` so callers can catch the whole
family at once.
"""


class HolochromeError(Exception):
    """Base class for all toolkit errors."""


class NegativeIntensity(HolochromeError):
    """An intensity sample was negative where a measurement is required."""


class DimensionMismatch(HolochromeError):
    """Arrays that must share shape, pitch, or wavelength do not."""


class FormatError(HolochromeError):
    """A raster file has a bad magic, header, or payload size."""


class DegenerateField(HolochromeError):
    """A focus metric was requested for a field with no structure."""


class NoPeak(HolochromeError):
    """The autofocus sweep peaked on a window edge; no interior maximum."""


class EmptyCell(HolochromeError):
    """A high-resolution site received no sample and strict fill is on."""


class EmptyMeasurements(HolochromeError):
    """A recovery was asked to run on an empty measurement list."""


class NonPositiveZ(HolochromeError):
    """A sample-to-sensor distance was zero or negative."""


class GridMismatch(HolochromeError):
    """Spectral data does not lie on the 400-700 nm / 10 nm grid."""


class ConfigMismatch(HolochromeError):
    """Acquisition geometry is inconsistent (pitch ratios, raster size)."""


class ConfigError(HolochromeError):
    """A pipeline configuration file is missing or malformed; the message
    names the offending section/field."""


class CoverageGap(HolochromeError):
    """Stitch tiles leave part of the output rectangle uncovered."""
