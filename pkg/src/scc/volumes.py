"""Core data model: complex volumes, sensitivity sets, correction maps, masks.

Array convention used throughout the package: volume data is a C-ordered
complex array of shape ``(coil, z, y, x)`` so that x varies fastest in
memory and the coil axis is slowest.  Geometry vectors (``voxel_size_mm``,
``origin_mm``, plane directions) are given in world ``(x, y, z)`` order,
and the world position of the volume center is ``origin_mm``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

IMAGE = "image"
KSPACE = "kspace"

#: Voxels whose SSoS magnitude falls below this fraction of the peak are
#: treated as background (outside the sensitivity-map support).
SUPPORT_RTOL = 1e-6

#: Floor returned by :func:`nmse` for a zero residual, in dB.
NMSE_FLOOR_DB = -300.0


class GridMismatchError(ValueError):
    """Two objects that must share a grid (shape / geometry) do not."""


class DomainError(ValueError):
    """An operation received data in the wrong domain (image vs k-space)."""


def _as_tuple3(values, name: str) -> tuple[float, float, float]:
    t = tuple(float(v) for v in values)
    if len(t) != 3:
        raise ValueError(f"{name} must have 3 components, got {len(t)}")
    return t


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ComplexVolume:
    """N-dimensional complex image or k-space array with grid geometry.

    Parameters
    ----------
    data : ndarray
        Complex samples, shape ``(coil, z, y, x)``.
    domain : str
        Either ``"image"`` or ``"kspace"``.
    voxel_size_mm : tuple of float
        Spacing per world axis ``(x, y, z)``; strictly positive.
    origin_mm : tuple of float
        World position of the volume center, ``(x, y, z)``.
    """

    data: NDArray[np.complexfloating]
    domain: str = IMAGE
    voxel_size_mm: tuple[float, float, float] = (1.0, 1.0, 1.0)
    origin_mm: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.ndim == 2:
            arr = arr[None, None]
        elif arr.ndim == 3:
            arr = arr[None]
        elif arr.ndim != 4:
            raise ValueError(f"volume data must be 2D..4D, got {arr.ndim}D")
        arr = np.ascontiguousarray(arr, dtype=np.complex128)
        object.__setattr__(self, "data", _readonly(arr))
        if self.domain not in (IMAGE, KSPACE):
            raise DomainError(f"unknown domain {self.domain!r}")
        vs = _as_tuple3(self.voxel_size_mm, "voxel_size_mm")
        if any(v <= 0 for v in vs):
            raise ValueError(f"voxel_size_mm must be positive, got {vs}")
        object.__setattr__(self, "voxel_size_mm", vs)
        object.__setattr__(self, "origin_mm", _as_tuple3(self.origin_mm, "origin_mm"))

    @property
    def ncoils(self) -> int:
        return self.data.shape[0]

    @property
    def spatial_shape(self) -> tuple[int, int, int]:
        """Grid extents ``(nz, ny, nx)``."""
        return self.data.shape[1:]

    @property
    def is_2d(self) -> bool:
        return self.data.shape[1] == 1

    def with_data(self, data: np.ndarray, domain: str | None = None,
                  voxel_size_mm=None) -> "ComplexVolume":
        """Copy geometry onto new samples, optionally switching domain."""
        return ComplexVolume(
            data=data,
            domain=self.domain if domain is None else domain,
            voxel_size_mm=self.voxel_size_mm if voxel_size_mm is None else voxel_size_mm,
            origin_mm=self.origin_mm,
        )

    def coil(self, k: int) -> NDArray[np.complexfloating]:
        """Samples of a single coil, shape ``(nz, ny, nx)``."""
        return self.data[k]

    def axis_coords_mm(self, world_axis: int) -> NDArray[np.floating]:
        """World coordinates of voxel centers along ``world_axis`` (0=x,1=y,2=z)."""
        n = self.spatial_shape[2 - world_axis]
        step = self.voxel_size_mm[world_axis]
        return self.origin_mm[world_axis] + (np.arange(n) - (n - 1) / 2.0) * step


@dataclass(frozen=True)
class SensitivitySet:
    """Per-coil complex sensitivity maps plus a validity mask.

    ``kind`` is ``"ssos_estimate"`` for maps normalized so the coil-wise
    sum of squared magnitudes is one on the support, or ``"true_map"``
    for maps without that constraint.
    """

    maps: ComplexVolume
    support: NDArray[np.bool_]
    kind: str = "ssos_estimate"

    def __post_init__(self):
        sup = np.ascontiguousarray(np.asarray(self.support, dtype=bool))
        if sup.shape != self.maps.spatial_shape:
            raise GridMismatchError(
                f"support shape {sup.shape} != maps spatial shape {self.maps.spatial_shape}")
        if self.kind not in ("ssos_estimate", "true_map"):
            raise ValueError(f"unknown sensitivity kind {self.kind!r}")
        if self.kind == "ssos_estimate":
            total = np.sum(np.abs(self.maps.data) ** 2, axis=0)
            if sup.any() and np.max(np.abs(total[sup] - 1.0)) > 1e-6:
                raise ValueError(
                    "ssos_estimate maps must have unit sum-of-squares on the support")
            if (~sup).any() and self.maps.data[:, ~sup].any():
                raise ValueError("unsupported voxels must hold exactly zero")
        object.__setattr__(self, "support", _readonly(sup))

    @property
    def ncoils(self) -> int:
        return self.maps.ncoils


@dataclass(frozen=True)
class CorrectionMap:
    """Real nonnegative voxelwise intensity-correction map.

    ``kind`` is ``"g"`` for a map that multiplies sensitivity maps before
    reconstruction, ``"h"`` for a map that multiplies the reconstructed
    image.  ``values`` is ``(nz, ny, nx)`` for volume maps or
    ``(rows, cols)`` for maps resampled onto an imaging plane.
    """

    values: NDArray[np.floating]
    kind: str
    voxel_size_mm: tuple[float, float, float] = (1.0, 1.0, 1.0)
    origin_mm: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.values, dtype=np.float64))
        if arr.ndim not in (2, 3):
            raise ValueError(f"correction map must be 2D or 3D, got {arr.ndim}D")
        if not np.all(np.isfinite(arr)):
            raise ValueError("correction map contains non-finite values")
        if arr.size and arr.min() < 0:
            raise ValueError("correction map contains negative values")
        if self.kind not in ("g", "h"):
            raise ValueError(f"unknown correction-map kind {self.kind!r}")
        object.__setattr__(self, "values", _readonly(arr))
        object.__setattr__(self, "voxel_size_mm", _as_tuple3(self.voxel_size_mm, "voxel_size_mm"))
        object.__setattr__(self, "origin_mm", _as_tuple3(self.origin_mm, "origin_mm"))

    @property
    def volume_values(self) -> NDArray[np.floating]:
        """Values as ``(nz, ny, nx)`` (plane maps gain a singleton z axis)."""
        return self.values if self.values.ndim == 3 else self.values[None]


@dataclass(frozen=True)
class SamplingMask:
    """Binary k-space selection shared across coils, shape ``(nz, ny, nx)``."""

    keep: NDArray[np.bool_]

    def __post_init__(self):
        keep = np.ascontiguousarray(np.asarray(self.keep, dtype=bool))
        if keep.ndim == 2:
            keep = keep[None]
        if keep.ndim != 3:
            raise ValueError(f"mask must be 2D or 3D, got {keep.ndim}D")
        if not keep.any():
            raise ValueError("sampling mask selects no locations")
        object.__setattr__(self, "keep", _readonly(keep))

    @property
    def count(self) -> int:
        """Number of sampled locations per coil."""
        return int(self.keep.sum())

    @classmethod
    def full(cls, spatial_shape: Sequence[int]) -> "SamplingMask":
        return cls(np.ones(tuple(spatial_shape), dtype=bool))


@dataclass(frozen=True)
class PlaneSpec:
    """Oblique 2D slice descriptor: origin of the (0, 0) sample plus two
    orthonormal in-plane directions and the sample spacing/extent."""

    origin_mm: tuple[float, float, float]
    row_dir: tuple[float, float, float]
    col_dir: tuple[float, float, float]
    row_spacing_mm: float
    col_spacing_mm: float
    rows: int
    cols: int

    def __post_init__(self):
        object.__setattr__(self, "origin_mm", _as_tuple3(self.origin_mm, "origin_mm"))
        rd = np.array(_as_tuple3(self.row_dir, "row_dir"))
        cd = np.array(_as_tuple3(self.col_dir, "col_dir"))
        for name, d in (("row_dir", rd), ("col_dir", cd)):
            if abs(np.linalg.norm(d) - 1.0) > 1e-9:
                raise ValueError(f"{name} must be unit length")
        if abs(float(rd @ cd)) > 1e-9:
            raise ValueError("row_dir and col_dir must be orthogonal")
        object.__setattr__(self, "row_dir", tuple(rd))
        object.__setattr__(self, "col_dir", tuple(cd))
        if self.row_spacing_mm <= 0 or self.col_spacing_mm <= 0:
            raise ValueError("plane spacing must be positive")
        if self.rows < 1 or self.cols < 1:
            raise ValueError("plane extent must be at least 1x1")


def nmse(reference, estimate) -> float:
    """Normalized mean squared error in dB: ``20*log10(||x - xhat|| / ||x||)``.

    Accepts :class:`ComplexVolume` or plain arrays.  A zero residual
    returns the ``-300`` dB floor rather than ``-inf``.

    Raises
    ------
    GridMismatchError
        If the two inputs differ in shape.
    ValueError
        If the reference has zero norm.
    """
    ref = reference.data if isinstance(reference, ComplexVolume) else np.asarray(reference)
    est = estimate.data if isinstance(estimate, ComplexVolume) else np.asarray(estimate)
    if ref.shape != est.shape:
        raise GridMismatchError(f"shape mismatch: {ref.shape} vs {est.shape}")
    ref_norm = np.linalg.norm(ref.ravel())
    if ref_norm == 0:
        raise ValueError("reference volume has zero norm")
    resid = np.linalg.norm((est - ref).ravel())
    if resid == 0:
        return NMSE_FLOOR_DB
    return max(NMSE_FLOOR_DB, float(20.0 * np.log10(resid / ref_norm)))


def elementwise_scale(volume: ComplexVolume, cmap: CorrectionMap) -> ComplexVolume:
    """Multiply a volume voxelwise by a correction map (broadcast over coils)."""
    vals = cmap.volume_values
    if vals.shape != volume.spatial_shape:
        raise GridMismatchError(
            f"map shape {vals.shape} does not match volume grid {volume.spatial_shape}")
    return volume.with_data(volume.data * vals[None])


def validate_volume(volume: ComplexVolume) -> list[str]:
    """Return a list of violated invariants (empty when well-formed)."""
    problems: list[str] = []
    arr = volume.data
    if arr.ndim != 4:
        problems.append(f"expected 4 axes (coil, z, y, x), found {arr.ndim}")
    if volume.domain not in (IMAGE, KSPACE):
        problems.append(f"unknown domain tag {volume.domain!r}")
    if any(v <= 0 for v in volume.voxel_size_mm):
        problems.append(f"non-positive voxel size {volume.voxel_size_mm}")
    bad = ~np.isfinite(arr)
    if bad.any():
        idx = int(np.flatnonzero(bad.ravel())[0])
        problems.append(f"non-finite sample at flat index {idx}")
    return problems
