"""Correction-map estimation from conditioned pre-scan volumes.

Fits a smooth voxelwise map relating the two coil-combined pre-scan
volumes by solving a diagonally weighted least-squares problem with a
first-order finite-difference smoothness penalty, via conjugate gradient
on the normal equations.  The "g" map multiplies sensitivity maps before
reconstruction; the "h" map multiplies the reconstructed image.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.ndimage
from numpy.typing import NDArray

from .operators import CgConfig, cg_solve
from .validation import as_real_array
from .volumes import ComplexVolume, CorrectionMap, PlaneSpec


@dataclass(frozen=True)
class SccConfig:
    """Fit parameters: smoothness weight, CG settings, optional data mask.

    ``fit_mask_threshold > 0`` zeroes the data-term weight at voxels whose
    reference intensity falls below that fraction of its peak; the default
    of 0 keeps every voxel at its natural weight and lets the smoothness
    term fill in the background.
    """

    lam: float = 5e-2
    cg: CgConfig = field(default_factory=lambda: CgConfig(max_iters=2000, rel_tol=1e-8))
    fit_mask_threshold: float = 0.0

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("regularization strength must be > 0")
        if not (0.0 <= self.fit_mask_threshold < 1.0):
            raise ValueError("fit_mask_threshold must lie in [0, 1)")


def _diff_axes(shape) -> tuple[int, ...]:
    """Axes that participate in the smoothness penalty (singletons dropped)."""
    return tuple(ax for ax, n in enumerate(shape) if n > 1)


def gradient_forward(m: NDArray[np.floating]) -> NDArray[np.floating]:
    """First-order forward differences along each non-singleton axis.

    Output shape is ``(ndirs,) + m.shape``; the difference at the far
    boundary of each axis is zero (replicated edge).
    """
    m = np.asarray(m, dtype=np.float64)
    axes = _diff_axes(m.shape)
    out = np.zeros((len(axes),) + m.shape)
    for i, ax in enumerate(axes):
        head = [slice(None)] * m.ndim
        tail = [slice(None)] * m.ndim
        head[ax] = slice(None, -1)
        tail[ax] = slice(1, None)
        out[i][tuple(head)] = m[tuple(tail)] - m[tuple(head)]
    return out


def gradient_adjoint(p: NDArray[np.floating]) -> NDArray[np.floating]:
    """Exact adjoint of :func:`gradient_forward` (negative divergence)."""
    p = np.asarray(p, dtype=np.float64)
    shape = p.shape[1:]
    axes = _diff_axes(shape)
    if p.shape[0] != len(axes):
        raise ValueError(
            f"expected {len(axes)} stacked difference volumes, got {p.shape[0]}")
    out = np.zeros(shape)
    for i, ax in enumerate(axes):
        head = [slice(None)] * len(shape)
        tail = [slice(None)] * len(shape)
        head[ax] = slice(None, -1)
        tail[ax] = slice(1, None)
        d = p[i][tuple(head)]
        out[tuple(head)] -= d
        out[tuple(tail)] += d
    return out


def _solve_map(weight: NDArray, data: NDArray, cfg: SccConfig, kind: str,
               geometry: ComplexVolume | None) -> CorrectionMap:
    if not np.any(weight):
        raise ValueError("reference volume is all zero; the fit is unconstrained")
    if cfg.fit_mask_threshold > 0.0:
        weight = np.where(weight >= cfg.fit_mask_threshold * weight.max(), weight, 0.0)
    w2 = weight * weight
    lam = cfg.lam

    def op(g):
        return w2 * g + lam * gradient_adjoint(gradient_forward(g))

    result = cg_solve(op, weight * data, cfg.cg)
    values = np.maximum(result.solution, 0.0)
    if geometry is not None:
        return CorrectionMap(values=values, kind=kind,
                             voxel_size_mm=geometry.voxel_size_mm,
                             origin_mm=geometry.origin_mm)
    return CorrectionMap(values=values, kind=kind)


def estimate_g_map(x_bc, x_sc, cfg: SccConfig | None = None) -> CorrectionMap:
    """Fit the sensitivity-correction map: ``diag(x_bc) g ~ x_sc``, smooth g.

    Solves ``(diag(x_bc)^2 + lam * grad^T grad) g = diag(x_bc) x_sc`` and
    clamps the result at zero.

    Parameters
    ----------
    x_bc, x_sc : ComplexVolume or array
        Conditioned body-coil and surface-coil combined volumes (real,
        nonnegative, same grid).
    """
    cfg = cfg or SccConfig()
    geometry = x_bc if isinstance(x_bc, ComplexVolume) else None
    bc = as_real_array(x_bc, "x_bc")
    sc = as_real_array(x_sc, "x_sc")
    _check_fit_inputs(bc, sc)
    return _solve_map(bc, sc, cfg, "g", geometry)


def estimate_h_map(x_bc, x_sc, cfg: SccConfig | None = None) -> CorrectionMap:
    """Fit the image-correction map: ``diag(x_sc) h ~ x_bc``, smooth h."""
    cfg = cfg or SccConfig()
    geometry = x_sc if isinstance(x_sc, ComplexVolume) else None
    bc = as_real_array(x_bc, "x_bc")
    sc = as_real_array(x_sc, "x_sc")
    _check_fit_inputs(bc, sc)
    return _solve_map(sc, bc, cfg, "h", geometry)


def _check_fit_inputs(bc: NDArray, sc: NDArray) -> None:
    if bc.shape != sc.shape:
        raise ValueError(f"pre-scan volumes disagree in shape: {bc.shape} vs {sc.shape}")
    if bc.min() < 0 or sc.min() < 0:
        raise ValueError("conditioned pre-scan volumes must be nonnegative")


def interpolate_to_plane(map3d: CorrectionMap, plane: PlaneSpec) -> CorrectionMap:
    """Trilinearly sample a 3D correction map on an oblique imaging plane.

    Plane sample ``(r, c)`` sits at
    ``origin + r * row_spacing * row_dir + c * col_spacing * col_dir`` in
    world coordinates (the volume center is the map's ``origin_mm``).
    Points outside the volume clamp to the nearest voxel.
    """
    values = map3d.values
    if values.ndim != 3:
        raise ValueError("interpolate_to_plane needs a 3D correction map")
    r = np.arange(plane.rows)[:, None] * plane.row_spacing_mm
    c = np.arange(plane.cols)[None, :] * plane.col_spacing_mm
    row_dir = np.asarray(plane.row_dir)
    col_dir = np.asarray(plane.col_dir)
    origin = np.asarray(plane.origin_mm)
    # world points, shape (rows, cols, 3), components (x, y, z)
    pts = origin + r[..., None] * row_dir + c[..., None] * col_dir
    coords = np.empty((3, plane.rows, plane.cols))
    for world_axis in range(3):  # x, y, z -> data axes 2, 1, 0
        n = values.shape[2 - world_axis]
        step = map3d.voxel_size_mm[world_axis]
        center = map3d.origin_mm[world_axis]
        coords[2 - world_axis] = (pts[..., world_axis] - center) / step + (n - 1) / 2.0
    sampled = scipy.ndimage.map_coordinates(values, coords, order=1, mode="nearest")
    return CorrectionMap(values=sampled, kind=map3d.kind,
                         voxel_size_mm=(plane.col_spacing_mm, plane.row_spacing_mm, 1.0),
                         origin_mm=plane.origin_mm)
