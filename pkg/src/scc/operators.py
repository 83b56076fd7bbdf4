"""Forward-model linear operators and the conjugate-gradient solver.

The acquisition operator for coil ``k`` is ``A_k = P F S_k``: voxelwise
sensitivity weighting, a centered unitary FFT, then k-space sampling.
Masked k-space is represented on the full grid with structural zeros at
unsampled locations; the mask travels alongside.
"""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.fft
from numpy.typing import NDArray

from .volumes import (
    IMAGE,
    KSPACE,
    ComplexVolume,
    DomainError,
    GridMismatchError,
    SamplingMask,
    SensitivitySet,
)

log = logging.getLogger(__name__)


class CgDivergenceError(RuntimeError):
    """Conjugate gradient encountered non-finite values."""


def worker_count() -> int | None:
    """FFT worker cap from the ``SCC_THREADS`` environment variable.

    Unset or ``0`` means auto (the FFT backend default); a positive value
    caps the worker pool at that many threads.
    """
    raw = os.environ.get("SCC_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n <= 0:
        return None
    return min(n, os.cpu_count() or 1)


def _spatial_fft_axes(spatial_shape, dims: int | None) -> tuple[int, ...]:
    if dims is None:
        axes = tuple(ax for ax, n in zip((-3, -2, -1), spatial_shape) if n > 1)
        return axes or (-1,)
    if dims == 2:
        return (-2, -1)
    if dims == 3:
        return (-3, -2, -1)
    raise ValueError(f"fft dims must be 2 or 3, got {dims}")


def fft_centered(volume: ComplexVolume, dims: int | None = None) -> ComplexVolume:
    """Unitary DFT with the DC component at the grid center.

    ``dims=None`` transforms every spatial axis with extent > 1.
    """
    if volume.domain != IMAGE:
        raise DomainError("fft_centered expects an image-domain volume")
    axes = _spatial_fft_axes(volume.spatial_shape, dims)
    shifted = np.fft.ifftshift(volume.data, axes=axes)
    spec = scipy.fft.fftn(shifted, axes=axes, norm="ortho", workers=worker_count())
    return volume.with_data(np.fft.fftshift(spec, axes=axes), domain=KSPACE)


def ifft_centered(volume: ComplexVolume, dims: int | None = None) -> ComplexVolume:
    """Inverse of :func:`fft_centered`."""
    if volume.domain != KSPACE:
        raise DomainError("ifft_centered expects a k-space volume")
    axes = _spatial_fft_axes(volume.spatial_shape, dims)
    shifted = np.fft.fftshift(volume.data, axes=axes)
    img = scipy.fft.ifftn(shifted, axes=axes, norm="ortho", workers=worker_count())
    return volume.with_data(np.fft.ifftshift(img, axes=axes), domain=IMAGE)


@dataclass(frozen=True)
class ForwardModel:
    """Stacked multicoil acquisition model (sensitivities, sampling, FFT dims)."""

    sens: SensitivitySet
    mask: SamplingMask
    fft_dims: int | None = None
    noise_sigma: float = 0.0

    def __post_init__(self):
        if self.sens.maps.spatial_shape != self.mask.keep.shape:
            raise GridMismatchError(
                f"sensitivity grid {self.sens.maps.spatial_shape} != mask grid "
                f"{self.mask.keep.shape}")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")

    @property
    def ncoils(self) -> int:
        return self.sens.ncoils


def apply_forward(model: ForwardModel, x: ComplexVolume) -> ComplexVolume:
    """Map a single-coil image to stacked masked k-space, coil by coil."""
    if x.spatial_shape != model.mask.keep.shape:
        raise GridMismatchError(
            f"image grid {x.spatial_shape} != model grid {model.mask.keep.shape}")
    if x.ncoils != 1:
        raise ValueError("apply_forward expects a single-coil image")
    weighted = x.with_data(model.sens.maps.data * x.data[0][None])
    spec = fft_centered(weighted, dims=model.fft_dims)
    return spec.with_data(spec.data * model.mask.keep[None])


def apply_adjoint(model: ForwardModel, y: ComplexVolume) -> ComplexVolume:
    """Adjoint of :func:`apply_forward`: coil-combine the zero-filled inverse FFT."""
    if y.spatial_shape != model.mask.keep.shape:
        raise GridMismatchError(
            f"k-space grid {y.spatial_shape} != model grid {model.mask.keep.shape}")
    if y.ncoils != model.ncoils:
        raise GridMismatchError(
            f"k-space has {y.ncoils} coils, model has {model.ncoils}")
    masked = y.with_data(y.data * model.mask.keep[None], domain=KSPACE)
    imgs = ifft_centered(masked, dims=model.fft_dims)
    combined = np.sum(np.conj(model.sens.maps.data) * imgs.data, axis=0)
    return imgs.with_data(combined[None])


def normal_operator(model: ForwardModel) -> Callable[[np.ndarray], np.ndarray]:
    """Matrix-free ``x -> A^H A x`` acting on ``(nz, ny, nx)`` arrays."""
    template = ComplexVolume(
        data=np.zeros((1,) + model.mask.keep.shape, dtype=np.complex128),
        domain=IMAGE,
        voxel_size_mm=model.sens.maps.voxel_size_mm,
        origin_mm=model.sens.maps.origin_mm,
    )

    def op(arr: np.ndarray) -> np.ndarray:
        vol = template.with_data(arr[None])
        return apply_adjoint(model, apply_forward(model, vol)).data[0]

    return op


@dataclass(frozen=True)
class CgConfig:
    """Conjugate-gradient stopping rule."""

    max_iters: int = 500
    rel_tol: float = 1e-6
    report_every: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not (0.0 < self.rel_tol < 1.0):
            raise ValueError("rel_tol must lie in (0, 1)")


@dataclass(frozen=True)
class CgResult:
    solution: np.ndarray
    iterations: int
    residual_norm: float


def cg_solve(op: Callable[[np.ndarray], np.ndarray], rhs: np.ndarray,
             config: CgConfig | None = None) -> CgResult:
    """Solve ``op(x) = rhs`` for a Hermitian positive semidefinite ``op``.

    Starts from zero and stops when ``||op(x) - rhs|| <= rel_tol * ||rhs||``
    or ``max_iters`` is reached.  Deterministic for fixed inputs.

    Raises
    ------
    CgDivergenceError
        If non-finite values appear during the iteration.
    """
    cfg = config or CgConfig()
    rhs = np.asarray(rhs)
    if not np.all(np.isfinite(rhs)):
        raise CgDivergenceError("right-hand side contains non-finite values")
    x = np.zeros_like(rhs)
    r = rhs.copy()
    rs = np.vdot(r, r).real
    rhs_norm = np.sqrt(rs)
    if rhs_norm == 0.0:
        return CgResult(x, 0, 0.0)
    threshold = cfg.rel_tol * rhs_norm
    p = r.copy()
    iterations = 0
    for iterations in range(1, cfg.max_iters + 1):
        ap = op(p)
        denom = np.vdot(p, ap).real
        if not np.isfinite(denom) or denom <= 0.0:
            if denom == 0.0 and not p.any():
                break  # stagnated exactly; solution already optimal
            raise CgDivergenceError(
                f"operator lost positive definiteness at iteration {iterations}")
        alpha = rs / denom
        x += alpha * p
        r -= alpha * ap
        rs_new = np.vdot(r, r).real
        if not np.isfinite(rs_new):
            raise CgDivergenceError(f"residual diverged at iteration {iterations}")
        if cfg.report_every and iterations % cfg.report_every == 0:
            log.info("cg iter %d residual %.3e", iterations, np.sqrt(rs_new))
        if np.sqrt(rs_new) <= threshold:
            rs = rs_new
            break
        p = r + (rs_new / rs) * p
        rs = rs_new
    return CgResult(x, iterations, float(np.sqrt(rs)))
