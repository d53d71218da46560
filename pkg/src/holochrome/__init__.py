"""Lensfree holographic color microscopy reconstruction.

Computational reconstruction for chip-scale in-line holography: angular
spectrum propagation, autofocus, pixel super-resolution with Bayer
cross-talk demultiplexing, multiheight phase recovery, colorimetric
rendering, and image quality metrics, plus a synthetic forward model for
testing the whole chain end to end.
"""
from .autofocus import FocusSearch, estimate_z, focus_metric
from .colorimetry import (
    ColorMatchingTable,
    Illuminant,
    RGB_TO_XYZ,
    WHITE_POINT,
    XYZ_TO_RGB,
    XyzImage,
    load_cmf,
    load_illuminant,
    srgb_decode,
    srgb_encode,
    srgb_to_lab,
    srgb_to_linear_xyz,
    tristimulus,
    white_point_xyz,
    xyz_to_srgb,
)
from .errors import (
    ConfigError,
    ConfigMismatch,
    CoverageGap,
    DegenerateField,
    DimensionMismatch,
    EmptyCell,
    EmptyMeasurements,
    FormatError,
    GridMismatch,
    HolochromeError,
    NegativeIntensity,
    NoPeak,
    NonPositiveZ,
)
from .fields import (
    Channel,
    ComplexField,
    GRID_STEP_NM,
    HologramFrame,
    RealField,
    RgbImage,
    SpectralCube,
    WAVELENGTH_GRID,
    amplitude,
    from_intensity,
)
from .metrics import SsimConstants, delta_e94, delta_e94_lab, ssim
from .phase_recovery import (
    HeightMeasurement,
    RecoveryConfig,
    RecoveryTrace,
    multiheight_recover,
    recover_trace,
    residual,
)
from .pipeline import (
    NetworkInputTensor,
    PipelineConfig,
    PipelineResult,
    load_config,
    load_manifest,
    load_network_input,
    load_rgb,
    prepare_network_input,
    run,
    save_network_input,
    save_png,
    save_rgb_raster,
    stitch,
    three_channel_composite,
    write_manifest,
    write_report,
)
from .propagation import (
    FrequencyGrid,
    PropagationParams,
    frequency_grid,
    propagate,
    transfer_function,
)
from .raster import read_raster, read_tensor, write_raster, write_tensor
from .simulate import (
    AcquisitionSpec,
    Phantom,
    PhantomSpec,
    Scene,
    bayer_acquire,
    build_phantom,
    forward_hologram,
    fourier_translate,
    make_phantom,
    simulate_scene,
)
from .superres import (
    BayerLayout,
    CrosstalkMatrix,
    IDENTITY_DEMIX,
    RGGB,
    ShiftTable,
    channel_psr,
    demix_from_mixing,
    demultiplex,
    dpsr,
    estimate_shifts,
    load_crosstalk,
    save_crosstalk,
    sequential_channel,
    shift_and_add,
    split_mosaic,
)

__version__ = "0.1.0"
