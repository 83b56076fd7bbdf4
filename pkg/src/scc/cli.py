"""Command-line pipeline mirroring the two correction flavors.

Every subcommand is a pure function of its input files: rerunning with
identical inputs reproduces output files bit for bit.  Exit codes:

====  =========================================================
code  meaning
====  =========================================================
0     success
2     usage error (unknown flags / bad arguments)
3     a required input file is missing
4     malformed container, scenario, or plane file
5     incompatible grids or domains between inputs
6     invalid configuration value (e.g. non-positive lambda)
7     numeric failure (CG divergence, non-finite output samples)
====  =========================================================

The ``SCC_THREADS`` environment variable caps internal FFT parallelism
(0 = auto).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import container
from .coils import estimate_ssos_maps
from .correction import SccConfig, estimate_g_map, estimate_h_map, interpolate_to_plane
from .operators import CgConfig, CgDivergenceError, ifft_centered
from .prescan import (
    NORMALIZE_BY_BODY,
    NORMALIZE_BY_SURFACE,
    PrescanConfig,
    PrescanPair,
    condition_prescan,
)
from .recon import ReconConfig, apply_image_correction, reconstruct, reconstruct_corrected
from .simulate import run_scenario
from .volumes import DomainError, GridMismatchError, SamplingMask, nmse

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MISSING_FILE = 3
EXIT_BAD_FORMAT = 4
EXIT_GRID_MISMATCH = 5
EXIT_BAD_CONFIG = 6
EXIT_NUMERIC = 7


def _positive(value: str) -> float:
    x = float(value)
    if x <= 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {value}")
    return x


def _pad_triple(value: str) -> tuple[int, int, int]:
    parts = value.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected x,y,z")
    x, y, z = (int(p) for p in parts)
    return (z, y, x)  # store as spatial (nz, ny, nx)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scc",
        description="Pre-scan based surface-coil intensity correction pipeline.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a digital-phantom scenario")
    p.add_argument("scenario", help="scenario JSON file")
    p.add_argument("outdir", help="output directory")
    p.add_argument("--sigma", type=float, default=None, help="override scenario noise sigma")
    p.add_argument("--seed", type=int, default=None, help="override scenario RNG seed")
    p.add_argument("--allow-nan", action="store_true")

    p = sub.add_parser("condition-prescan", help="combine, apodize, pad, normalize")
    p.add_argument("body", help="body-coil pre-scan stack (container stem)")
    p.add_argument("surface", help="surface-coil pre-scan stack (container stem)")
    p.add_argument("out_bc", help="output stem for the combined body volume")
    p.add_argument("out_sc", help="output stem for the combined surface volume")
    p.add_argument("--kind", choices=("g", "h"), default="g",
                   help="g normalizes by the body max, h by the surface max")
    p.add_argument("--alpha", type=float, default=0.5, help="Tukey window parameter")
    p.add_argument("--pad", type=_pad_triple, default=None, metavar="X,Y,Z",
                   help="zero-pad the pre-scan k-space to this matrix")
    p.add_argument("--allow-nan", action="store_true")

    p = sub.add_parser("estimate-map", help="fit a correction map")
    p.add_argument("x_bc")
    p.add_argument("x_sc")
    p.add_argument("out")
    p.add_argument("--kind", choices=("g", "h"), default="g")
    p.add_argument("--lambda", dest="lam", type=float, default=5e-2,
                   help="smoothness regularization strength")
    p.add_argument("--cg-tol", type=float, default=1e-8)
    p.add_argument("--cg-iters", type=int, default=2000)
    p.add_argument("--allow-nan", action="store_true")

    p = sub.add_parser("interp-plane", help="resample a 3D map onto a plane")
    p.add_argument("map")
    p.add_argument("out")
    p.add_argument("--plane", required=True, help="plane JSON file")
    p.add_argument("--allow-nan", action="store_true")

    p = sub.add_parser("recon", help="SENSE reconstruction (optionally map-corrected)")
    p.add_argument("y", help="stacked k-space container stem")
    p.add_argument("mask", help="sampling-mask container stem")
    p.add_argument("out")
    p.add_argument("--gmap", default=None, help="sensitivity-correction map stem")
    p.add_argument("--smaps", default=None,
                   help="sensitivity maps stem (default: SSoS estimate from y)")
    p.add_argument("--sigma", type=_positive, default=1.0, help="noise sigma weighting")
    p.add_argument("--image-lambda", type=float, default=0.0,
                   help="Tikhonov weight on the image")
    p.add_argument("--cg-tol", type=float, default=1e-8)
    p.add_argument("--cg-iters", type=int, default=500)
    p.add_argument("--allow-nan", action="store_true")

    p = sub.add_parser("apply-h", help="multiply an image by a correction map")
    p.add_argument("image")
    p.add_argument("out")
    p.add_argument("--hmap", required=True)
    p.add_argument("--allow-nan", action="store_true")

    p = sub.add_parser("nmse", help="print NMSE_dB between two volumes")
    p.add_argument("reference")
    p.add_argument("estimate")

    p = sub.add_parser("render", help="write a grayscale PNG")
    p.add_argument("input", help="volume or map container stem")
    p.add_argument("out")
    p.add_argument("--scale", choices=("fixed01", "max"), default="fixed01")
    p.add_argument("--slice", dest="slice_index", type=int, default=None)

    return parser


def _load_volume(path):
    return container.read_volume(path)


def _load_mask(path) -> SamplingMask:
    return container.read_mask(path)


def _cmd_simulate(args) -> int:
    scenario = container.load_scenario(args.scenario)
    if args.sigma is not None or args.seed is not None:
        scenario = replace(
            scenario,
            sigma=scenario.sigma if args.sigma is None else args.sigma,
            seed=scenario.seed if args.seed is None else args.seed,
        )
    result = run_scenario(scenario)
    out = Path(args.outdir)
    an = args.allow_nan
    container.write_volume(result.y, out / "y", allow_nan=an)
    container.write_mask(result.mask, out / "mask",
                         voxel_size_mm=result.y.voxel_size_mm,
                         origin_mm=result.y.origin_mm)
    container.write_volume(result.prescan.body, out / "prescan_body", allow_nan=an)
    container.write_volume(result.prescan.surface, out / "prescan_surface", allow_nan=an)
    container.write_volume(result.truth.phantom, out / "phantom", allow_nan=an)
    container.write_volume(result.truth.surface_maps.maps, out / "surface_maps", allow_nan=an)
    container.write_volume(result.truth.body_maps.maps, out / "body_maps", allow_nan=an)
    container.write_map(result.truth.modulation, out / "g_true", allow_nan=an)
    print(f"wrote simulation outputs to {out}")
    return EXIT_OK


def _cmd_condition(args) -> int:
    pair = PrescanPair(body=_load_volume(args.body), surface=_load_volume(args.surface))
    normalize = NORMALIZE_BY_BODY if args.kind == "g" else NORMALIZE_BY_SURFACE
    cfg = PrescanConfig(tukey_alpha=args.alpha, pad_to=args.pad, normalize=normalize)
    x_bc, x_sc = condition_prescan(pair, cfg)
    container.write_volume(x_bc, args.out_bc, allow_nan=args.allow_nan)
    container.write_volume(x_sc, args.out_sc, allow_nan=args.allow_nan)
    return EXIT_OK


def _cmd_estimate_map(args) -> int:
    cfg = SccConfig(lam=args.lam,
                    cg=CgConfig(max_iters=args.cg_iters, rel_tol=args.cg_tol))
    x_bc = _load_volume(args.x_bc)
    x_sc = _load_volume(args.x_sc)
    estimate = estimate_g_map if args.kind == "g" else estimate_h_map
    cmap = estimate(x_bc, x_sc, cfg)
    container.write_map(cmap, args.out, allow_nan=args.allow_nan)
    return EXIT_OK


def _cmd_interp_plane(args) -> int:
    cmap = container.read_map(args.map)
    plane = container.load_plane(args.plane)
    container.write_map(interpolate_to_plane(cmap, plane), args.out,
                        allow_nan=args.allow_nan)
    return EXIT_OK


def _cmd_recon(args) -> int:
    y = _load_volume(args.y)
    mask = _load_mask(args.mask)
    if args.smaps is not None:
        maps = estimate_ssos_maps(_load_volume(args.smaps))
    else:
        maps = estimate_ssos_maps(ifft_centered(y))
    cfg = ReconConfig(image_reg_lambda=args.image_lambda,
                      cg=CgConfig(max_iters=args.cg_iters, rel_tol=args.cg_tol),
                      noise_sigma=args.sigma)
    if args.gmap is not None:
        xhat = reconstruct_corrected(y, maps, mask, container.read_map(args.gmap), cfg)
    else:
        xhat = reconstruct(y, maps, mask, cfg)
    container.write_volume(xhat, args.out, allow_nan=args.allow_nan)
    return EXIT_OK


def _cmd_apply_h(args) -> int:
    xhat = _load_volume(args.image)
    hmap = container.read_map(args.hmap)
    container.write_volume(apply_image_correction(xhat, hmap), args.out,
                           allow_nan=args.allow_nan)
    return EXIT_OK


def _cmd_nmse(args) -> int:
    value = nmse(_load_volume(args.reference), _load_volume(args.estimate))
    print(f"NMSE_dB={value:.6f}")
    return EXIT_OK


def _cmd_render(args) -> int:
    stem = Path(args.input)
    header = container._read(stem)[0]
    if header["dtype"] == "f32":
        source = container.read_map(stem)
    else:
        source = container.read_volume(stem)
    container.render_png(source, args.out, scale=args.scale,
                         slice_index=args.slice_index)
    return EXIT_OK


_HANDLERS = {
    "simulate": _cmd_simulate,
    "condition-prescan": _cmd_condition,
    "estimate-map": _cmd_estimate_map,
    "interp-plane": _cmd_interp_plane,
    "recon": _cmd_recon,
    "apply-h": _cmd_apply_h,
    "nmse": _cmd_nmse,
    "render": _cmd_render,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return int(err.code) if err.code else EXIT_OK
    try:
        return _HANDLERS[args.command](args)
    except FileNotFoundError as err:
        print(f"scc: missing file: {err.filename or err}", file=sys.stderr)
        return EXIT_MISSING_FILE
    except container.ContainerFormatError as err:
        print(f"scc: bad file format: {err}", file=sys.stderr)
        return EXIT_BAD_FORMAT
    except (GridMismatchError, DomainError) as err:
        print(f"scc: incompatible inputs: {err}", file=sys.stderr)
        return EXIT_GRID_MISMATCH
    except CgDivergenceError as err:
        print(f"scc: numeric failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as err:
        if "non-finite" in str(err):
            print(f"scc: numeric failure: {err}", file=sys.stderr)
            return EXIT_NUMERIC
        print(f"scc: invalid configuration: {err}", file=sys.stderr)
        return EXIT_BAD_CONFIG


if __name__ == "__main__":
    sys.exit(main())
