"""On-disk formats: the two-file volume container, scenario and plane JSON,
and grayscale PNG rendering.

A stored volume is a pair of files sharing a stem: ``<stem>.json`` (header)
and ``<stem>.bin`` (payload).  The header carries::

    {
      "magic": "SCCVOL1",
      "shape": [coil, z, y, x],
      "dtype": "c64" | "f32",
      "byte_order": "little-endian",
      "layout": "x-fastest",
      "voxel_size_mm": [x, y, z],
      "origin_mm": [x, y, z],
      "domain_tag": "image" | "kspace",
      "meta": { ... }
    }

``c64`` payloads are interleaved re/im float32 pairs, x fastest within a
coil, coil slowest.  ``f32`` payloads hold real maps the same way.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .simulate import CoilGeometry, PhantomSpec, Scenario, ShapeSpec
from .volumes import ComplexVolume, CorrectionMap, PlaneSpec, SamplingMask

MAGIC = "SCCVOL1"

_DTYPES = {"c64": np.dtype("<c8"), "f32": np.dtype("<f4")}


class ContainerFormatError(ValueError):
    """A container header or payload is malformed."""


def _stem(path) -> Path:
    p = Path(path)
    if p.suffix in (".json", ".bin"):
        p = p.with_suffix("")
    return p


def _check_finite(arr: np.ndarray, allow_nan: bool) -> None:
    if not allow_nan and not np.all(np.isfinite(arr)):
        raise ValueError("refusing to write non-finite samples (pass allow_nan to override)")


def _write(stem: Path, payload: np.ndarray, dtype: str, shape, voxel_size_mm,
           origin_mm, domain_tag: str, meta: dict) -> None:
    header = {
        "magic": MAGIC,
        "shape": [int(n) for n in shape],
        "dtype": dtype,
        "byte_order": "little-endian",
        "layout": "x-fastest",
        "voxel_size_mm": [float(v) for v in voxel_size_mm],
        "origin_mm": [float(v) for v in origin_mm],
        "domain_tag": domain_tag,
        "meta": meta,
    }
    stem.parent.mkdir(parents=True, exist_ok=True)
    stem.with_suffix(".json").write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
    stem.with_suffix(".bin").write_bytes(np.ascontiguousarray(payload).tobytes())


def write_volume(volume: ComplexVolume, path, allow_nan: bool = False,
                 meta: dict | None = None) -> None:
    """Persist a complex volume as ``<stem>.json`` + ``<stem>.bin`` (c64)."""
    _check_finite(volume.data, allow_nan)
    _write(_stem(path), volume.data.astype(_DTYPES["c64"]), "c64",
           volume.data.shape, volume.voxel_size_mm, volume.origin_mm,
           volume.domain, meta or {})


def write_map(cmap: CorrectionMap, path, allow_nan: bool = False) -> None:
    """Persist a correction map as an f32 container (coil axis = 1)."""
    vals = cmap.volume_values
    _check_finite(vals, allow_nan)
    _write(_stem(path), vals.astype(_DTYPES["f32"]), "f32",
           (1,) + vals.shape, cmap.voxel_size_mm, cmap.origin_mm,
           "image", {"map_kind": cmap.kind})


def read_header(path) -> dict:
    """Parse and validate a container header without decoding the payload."""
    header_path = _stem(path).with_suffix(".json")
    try:
        header = json.loads(header_path.read_text())
    except json.JSONDecodeError as err:
        raise ContainerFormatError(f"unparseable header {header_path}: {err}") from err
    if header.get("magic") != MAGIC:
        raise ContainerFormatError(
            f"bad magic in {header_path}: {header.get('magic')!r} (expected {MAGIC!r})")
    if header.get("dtype") not in _DTYPES:
        raise ContainerFormatError(f"unknown dtype {header.get('dtype')!r} in {header_path}")
    shape = tuple(int(n) for n in header.get("shape", ()))
    if len(shape) != 4 or any(n < 1 for n in shape):
        raise ContainerFormatError(f"bad shape {shape} in {header_path}")
    return header


def _read(path) -> tuple[dict, np.ndarray]:
    stem = _stem(path)
    header = read_header(stem)
    payload_path = stem.with_suffix(".bin")
    shape = tuple(int(n) for n in header["shape"])
    dtype = _DTYPES[header["dtype"]]
    expected = int(np.prod(shape)) * dtype.itemsize
    raw = payload_path.read_bytes()
    if len(raw) < expected:
        raise ContainerFormatError(
            f"truncated payload {payload_path}: {len(raw)} bytes, expected {expected}")
    if len(raw) > expected:
        raise ContainerFormatError(
            f"oversized payload {payload_path}: {len(raw)} bytes, expected {expected}")
    data = np.frombuffer(raw, dtype=dtype).reshape(shape)
    return header, data


def read_header(path) -> dict:
    """Parse and validate a container header without decoding the payload."""
    return _read(path)[0]


def read_volume(path) -> ComplexVolume:
    """Load a c64 (or real f32) container back into a ComplexVolume."""
    header, data = _read(path)
    return ComplexVolume(
        data=np.asarray(data, dtype=np.complex128),
        domain=header.get("domain_tag", "image"),
        voxel_size_mm=tuple(header["voxel_size_mm"]),
        origin_mm=tuple(header["origin_mm"]),
    )


def write_mask(mask: SamplingMask, path, voxel_size_mm=(1.0, 1.0, 1.0),
               origin_mm=(0.0, 0.0, 0.0)) -> None:
    """Persist a sampling mask as a 0/1-valued f32 container."""
    vals = mask.keep.astype(_DTYPES["f32"])
    _write(_stem(path), vals, "f32", (1,) + mask.keep.shape, voxel_size_mm,
           origin_mm, "kspace", {"content": "sampling_mask"})


def read_mask(path) -> SamplingMask:
    """Load a sampling mask written by :func:`write_mask`."""
    header, data = _read(path)
    if header["dtype"] != "f32":
        raise ContainerFormatError(f"{path}: sampling masks use dtype f32")
    return SamplingMask(np.asarray(data[0]) > 0.5)


def read_map(path) -> CorrectionMap:
    """Load an f32 container back into a CorrectionMap."""
    header, data = _read(path)
    if header["dtype"] != "f32":
        raise ContainerFormatError(f"{path}: correction maps use dtype f32")
    kind = header.get("meta", {}).get("map_kind", "g")
    values = np.asarray(data[0], dtype=np.float64)
    return CorrectionMap(values=values, kind=kind,
                         voxel_size_mm=tuple(header["voxel_size_mm"]),
                         origin_mm=tuple(header["origin_mm"]))


def render_png(source, path, scale: str = "fixed01", slice_index: int | None = None) -> None:
    """Write an 8-bit grayscale PNG of a 2D map, image slice, or array.

    ``fixed01`` maps [0, 1] to [0, 255] with clipping and round-half-up;
    ``max`` divides by the array maximum first.
    """
    if isinstance(source, CorrectionMap):
        arr = source.volume_values
    elif isinstance(source, ComplexVolume):
        arr = np.abs(source.data[0])
    else:
        arr = np.abs(np.asarray(source))
    if arr.ndim == 3:
        if arr.shape[0] == 1:
            arr = arr[0]
        elif slice_index is None:
            raise ValueError("3D input needs a slice index")
        else:
            arr = arr[slice_index]
    if arr.ndim != 2:
        raise ValueError(f"cannot render {arr.ndim}D data")
    if scale == "max":
        peak = arr.max()
        arr = arr / peak if peak > 0 else np.zeros_like(arr)
    elif scale != "fixed01":
        raise ValueError(f"unknown scale mode {scale!r}")
    level = np.floor(np.clip(arr, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    Image.fromarray(level, mode="L").save(Path(path), format="PNG")


# --- scenario and plane JSON -------------------------------------------------

def scenario_to_dict(s: Scenario) -> dict:
    def coil(c: CoilGeometry) -> dict:
        return {"center_mm": list(c.center_mm), "axis": list(c.axis),
                "radius_mm": c.radius_mm, "segments": c.segments}

    return {
        "phantom": {
            "matrix": list(s.phantom.matrix),
            "fov_mm": list(s.phantom.fov_mm),
            "shapes": [{"kind": sh.kind, "center_mm": list(sh.center_mm),
                        "semi_axes_mm": list(sh.semi_axes_mm),
                        "intensity": sh.intensity} for sh in s.phantom.shapes],
        },
        "surface_coils": [coil(c) for c in s.surface_coils],
        "body_coils": [coil(c) for c in s.body_coils],
        "mask": dict(s.mask),
        "sigma": s.sigma,
        "seed": s.seed,
        "prescan_matrix": list(s.prescan_matrix),
    }


def scenario_from_dict(d: dict) -> Scenario:
    try:
        phantom = PhantomSpec(
            matrix=tuple(d["phantom"]["matrix"]),
            fov_mm=tuple(d["phantom"]["fov_mm"]),
            shapes=tuple(ShapeSpec(kind=sh["kind"], center_mm=tuple(sh["center_mm"]),
                                   semi_axes_mm=tuple(sh["semi_axes_mm"]),
                                   intensity=sh["intensity"])
                         for sh in d["phantom"].get("shapes", [])),
        )
        coils = {}
        for group in ("surface_coils", "body_coils"):
            coils[group] = tuple(
                CoilGeometry(center_mm=tuple(c["center_mm"]), axis=tuple(c["axis"]),
                             radius_mm=c["radius_mm"],
                             segments=int(c.get("segments", 256)))
                for c in d[group])
        return Scenario(
            phantom=phantom,
            surface_coils=coils["surface_coils"],
            body_coils=coils["body_coils"],
            mask=dict(d.get("mask", {"type": "full"})),
            sigma=float(d.get("sigma", 0.0)),
            seed=int(d.get("seed", 0)),
            prescan_matrix=tuple(d.get("prescan_matrix", (32, 32))),
        )
    except KeyError as err:
        raise ContainerFormatError(f"scenario is missing field {err}") from err


def load_scenario(path) -> Scenario:
    try:
        payload = json.loads(Path(path).read_text())
    except json.JSONDecodeError as err:
        raise ContainerFormatError(f"unparseable scenario {path}: {err}") from err
    return scenario_from_dict(payload)


def save_scenario(s: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(s), indent=2) + "\n")


def load_plane(path) -> PlaneSpec:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as err:
        raise ContainerFormatError(f"unparseable plane file {path}: {err}") from err
    try:
        return PlaneSpec(
            origin_mm=tuple(d["origin_mm"]),
            row_dir=tuple(d["row_dir"]),
            col_dir=tuple(d["col_dir"]),
            row_spacing_mm=float(d["row_spacing_mm"]),
            col_spacing_mm=float(d["col_spacing_mm"]),
            rows=int(d["rows"]),
            cols=int(d["cols"]),
        )
    except KeyError as err:
        raise ContainerFormatError(f"plane file is missing field {err}") from err


def save_plane(plane: PlaneSpec, path) -> None:
    d = {
        "origin_mm": list(plane.origin_mm),
        "row_dir": list(plane.row_dir),
        "col_dir": list(plane.col_dir),
        "row_spacing_mm": plane.row_spacing_mm,
        "col_spacing_mm": plane.col_spacing_mm,
        "rows": plane.rows,
        "cols": plane.cols,
    }
    Path(path).write_text(json.dumps(d, indent=2) + "\n")
