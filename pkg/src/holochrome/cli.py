"""Command-line front end.

Verbs:

``simulate``
    Generate a synthetic acquisition from a scenario file: frame rasters,
    a manifest, a matched demixing matrix, and ground-truth renderings.
``reconstruct``
    Run the reconstruction pipeline described by a run configuration.
``metrics``
    Compare two RGB images (PNG or 3-plane raster).
``prepare-input``
    Produce the 6-channel network input tensor from a single-height
    acquisition.

Flag values override configuration file values, which override defaults.
"""
from __future__ import annotations

import argparse
import configparser
import logging
import os
import sys
from dataclasses import replace

import numpy as np

from . import raster
from .colorimetry import load_cmf, load_illuminant, tristimulus, xyz_to_srgb
from .errors import ConfigError, HolochromeError
from .fields import WAVELENGTH_GRID
from .metrics import delta_e94, ssim
from .pipeline import (
    load_config,
    load_rgb,
    run,
    save_png,
    save_rgb_raster,
    three_channel_composite,
    write_manifest,
    write_report,
)
from .simulate import (
    AcquisitionSpec,
    PhantomSpec,
    bayer_acquire,
    build_phantom,
    forward_hologram,
)
from .superres import demix_from_mixing, save_crosstalk

log = logging.getLogger(__name__)

_SIM_MODES = ("multiplexed", "sequential", "hyperspectral")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in str(text).replace(",", " ").split())


def _load_scenario(path: str):
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    if not parser.read(path):
        raise ConfigError(f"cannot read scenario file {path}")
    base = os.path.dirname(os.path.abspath(path))

    def require(section, option):
        if not parser.has_option(section, option):
            raise ConfigError(f"missing required field [{section}] {option}")
        return parser.get(section, option)

    try:
        phantom = PhantomSpec(
            size=parser.getint("phantom", "size"),
            pitch=parser.getfloat("phantom", "pitch_um"),
            seed=parser.getint("phantom", "seed", fallback=0),
            style=parser.get("phantom", "style", fallback="textured_tissue"),
            absorption_range=tuple(
                _floats(parser.get("phantom", "absorption", fallback="0.15, 0.8"))
            ),
            phase_range=parser.getfloat("phantom", "phase_range", fallback=1.0),
        )
    except (configparser.Error, ValueError) as exc:
        raise ConfigError(f"[phantom] section: {exc}") from exc

    mode = require("acquisition", "mode")
    if mode not in _SIM_MODES:
        raise ConfigError(f"acquisition.mode must be one of {_SIM_MODES}, got {mode!r}")
    heights = _floats(require("acquisition", "heights_um"))
    if mode == "hyperspectral":
        wavelengths = tuple(float(w) for w in WAVELENGTH_GRID)
    else:
        wavelengths = tuple(sorted(_floats(require("acquisition", "wavelengths_nm"))))
        if len(wavelengths) != 3:
            raise ConfigError(
                f"mode {mode} needs exactly 3 wavelengths, got {len(wavelengths)}"
            )

    raster_text = require("acquisition", "raster")
    try:
        rows, cols = (int(tok) for tok in raster_text.lower().split("x"))
    except ValueError as exc:
        raise ConfigError(f"acquisition.raster must look like '4x4', got {raster_text!r}") from exc
    step_px = parser.getfloat("acquisition", "raster_step_px", fallback=0.5)
    sensor_pitch = parser.getfloat("acquisition", "sensor_pitch_um")
    step_um = step_px * sensor_pitch
    positions = tuple(
        (c * step_um, r * step_um) for r in range(rows) for c in range(cols)
    )

    mixing_text = parser.get("acquisition", "mixing", fallback="ideal")
    if mixing_text == "ideal":
        mixing = None
    else:
        mixing = np.loadtxt(os.path.join(base, mixing_text))
        if mixing.shape != (4, 3):
            raise ConfigError(f"mixing matrix must be 4x3, got {mixing.shape}")

    return phantom, mode, wavelengths, {
        "heights": heights,
        "raster": positions,
        "sensor_pitch": sensor_pitch,
        "mixing": mixing,
        "noise_sigma": parser.getfloat("acquisition", "noise_sigma", fallback=0.0),
        "seed": parser.getint("acquisition", "seed", fallback=0),
        "n": parser.getfloat("acquisition", "refractive_index", fallback=1.0),
    }


def cmd_simulate(args) -> int:
    phantom_spec, mode, wavelengths, acq_kw = _load_scenario(args.scenario)
    if args.seed is not None:
        phantom_spec = replace(phantom_spec, seed=args.seed)
    if args.noise is not None:
        acq_kw["noise_sigma"] = args.noise
    out = args.out
    frames_dir = os.path.join(out, "frames")
    os.makedirs(frames_dir, exist_ok=True)

    phantom = build_phantom(phantom_spec)
    n = acq_kw["n"]
    entries = []
    base_seed = acq_kw["seed"]

    def emit(frame, name):
        path = os.path.join(frames_dir, name)
        raster.write_raster(frame.intensity, path)
        entries.append(
            {
                "file": os.path.join("frames", name),
                "height_index": frame.height_index,
                "z_um": acq_kw["heights"][frame.height_index],
                "shift_um": list(frame.shift),
                "channel": frame.channel.value,
                "illumination": list(frame.illumination),
            }
        )

    if mode == "multiplexed":
        acq = AcquisitionSpec(wavelengths=wavelengths, **acq_kw)
        fields = {w: phantom.field(w) for w in acq.wavelengths}
        for h, z in enumerate(acq.heights):
            sensor = {w: forward_hologram(fields[w], z, n) for w in acq.wavelengths}
            for k, frame in enumerate(bayer_acquire(sensor, acq, h)):
                emit(frame, f"h{h}_{k:03d}.hsf1")
        demix = demix_from_mixing(acq.mixing_or_default())
    else:
        for wi, wl in enumerate(wavelengths):
            acq = AcquisitionSpec(
                wavelengths=(wl,), **{**acq_kw, "seed": base_seed + wi}
            )
            obj = phantom.field(wl)
            for h, z in enumerate(acq.heights):
                sensor = {wl: forward_hologram(obj, z, n)}
                for k, frame in enumerate(bayer_acquire(sensor, acq, h)):
                    emit(frame, f"h{h}_w{wl:.0f}_{k:03d}.hsf1")
        demix = None

    write_manifest(os.path.join(out, "manifest.json"), entries, acq_kw["sensor_pitch"])
    if demix is not None:
        save_crosstalk(demix, os.path.join(out, "demix.txt"))

    cmf = load_cmf()
    illum = load_illuminant()
    if mode == "hyperspectral":
        reference = xyz_to_srgb(tristimulus(phantom.cube(), cmf, illum))
    else:
        t_maps = {wl: phantom.transmittance(wl) for wl in wavelengths}
        reference = three_channel_composite(t_maps, cmf, illum)
    save_rgb_raster(reference, phantom_spec.pitch, os.path.join(out, "reference_rgb.hsf1"))
    save_png(reference, os.path.join(out, "reference_rgb.png"))

    print(f"wrote {len(entries)} frames to {frames_dir}")
    print(f"manifest: {os.path.join(out, 'manifest.json')}")
    if demix is not None:
        print(f"demixing matrix: {os.path.join(out, 'demix.txt')}")
    print(f"reference: {os.path.join(out, 'reference_rgb.png')}")
    return 0


def _override_path(value: str | None) -> str | None:
    # Flag paths are relative to the invocation directory, not the config
    # file; absolutize before they reach the config resolver.
    if value is None:
        return None
    return os.path.abspath(value)


def _reconstruct_overrides(args) -> dict:
    return {
        "pipeline.mode": getattr(args, "mode", None),
        "pipeline.output_dir": _override_path(getattr(args, "output", None)),
        "pipeline.reference": _override_path(getattr(args, "reference", None)),
        "input.manifest": _override_path(getattr(args, "manifest", None)),
        "input.crosstalk": _override_path(getattr(args, "crosstalk", None)),
        "psr.factor": getattr(args, "factor", None),
        "psr.fill": getattr(args, "fill", None),
        "psr.shifts": getattr(args, "shifts", None),
        "tiling.tile": getattr(args, "tile", None),
        "tiling.overlap": getattr(args, "overlap", None),
        "network.z": getattr(args, "z", None),
    }


def cmd_reconstruct(args) -> int:
    cfg = load_config(args.config, _reconstruct_overrides(args))
    result = run(cfg)
    for key, value in result.report.items():
        if isinstance(value, float):
            print(f"{key}={value:.6g}")
        else:
            print(f"{key}={value}")
    print(f"outputs: {result.output_dir}")
    return 0


def cmd_prepare_input(args) -> int:
    overrides = _reconstruct_overrides(args)
    overrides["pipeline.mode"] = "singleshot-network-input"
    cfg = load_config(args.config, overrides)
    result = run(cfg)
    print(f"z_um={result.report['z_um']:.6g}")
    print(f"tensor: {os.path.join(result.output_dir, 'network_input.hsf1')}")
    return 0


def cmd_metrics(args) -> int:
    a = load_rgb(args.a)
    b = load_rgb(args.b)
    report = {"ssim": ssim(a, b), "delta_e94": delta_e94(a, b)}
    print(f"ssim={report['ssim']:.6g}")
    print(f"delta_e94={report['delta_e94']:.6g}")
    if args.out:
        write_report(report, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="holochrome",
        description="Lensfree holographic color microscopy reconstruction.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log stage progress")
    sub = parser.add_subparsers(dest="verb", required=True)

    sim = sub.add_parser("simulate", help="generate a synthetic acquisition")
    sim.add_argument("--scenario", required=True, help="scenario configuration file")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--seed", type=int, help="override the phantom seed")
    sim.add_argument("--noise", type=float, help="override the noise level")
    sim.set_defaults(func=cmd_simulate)

    rec = sub.add_parser("reconstruct", help="run the reconstruction pipeline")
    rec.add_argument("--config", required=True, help="run configuration file")
    rec.add_argument("--mode", help="override pipeline.mode")
    rec.add_argument("--output", help="override pipeline.output_dir")
    rec.add_argument("--manifest", help="override input.manifest")
    rec.add_argument("--crosstalk", help="override input.crosstalk")
    rec.add_argument("--reference", help="override pipeline.reference")
    rec.add_argument("--factor", type=int, help="override psr.factor")
    rec.add_argument("--fill", choices=("interpolate", "strict"), help="override psr.fill")
    rec.add_argument("--shifts", choices=("estimate", "manifest"), help="override psr.shifts")
    rec.add_argument("--tile", type=int, help="override tiling.tile")
    rec.add_argument("--overlap", type=float, help="override tiling.overlap")
    rec.set_defaults(func=cmd_reconstruct)

    met = sub.add_parser("metrics", help="compare two RGB images")
    met.add_argument("--a", required=True, help="reference image (png or 3-plane raster)")
    met.add_argument("--b", required=True, help="image under test")
    met.add_argument("--out", help="also write a key=value report file")
    met.set_defaults(func=cmd_metrics)

    prep = sub.add_parser("prepare-input", help="build the network input tensor")
    prep.add_argument("--config", required=True, help="run configuration file")
    prep.add_argument("--output", help="override pipeline.output_dir")
    prep.add_argument("--manifest", help="override input.manifest")
    prep.add_argument("--crosstalk", help="override input.crosstalk")
    prep.add_argument("--factor", type=int, help="override psr.factor")
    prep.add_argument("--z", help="backpropagation distance in um, or 'auto'")
    prep.set_defaults(func=cmd_prepare_input)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except HolochromeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
