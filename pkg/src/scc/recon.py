"""SENSE-style regularized least-squares reconstruction and correction hooks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .operators import CgConfig, ForwardModel, apply_adjoint, cg_solve, normal_operator
from .volumes import (
    ComplexVolume,
    CorrectionMap,
    GridMismatchError,
    SamplingMask,
    SensitivitySet,
    elementwise_scale,
)


@dataclass(frozen=True)
class ReconConfig:
    """Reconstruction parameters.

    ``image_reg_lambda`` is the optional Tikhonov weight on ``||x||^2``
    (0 = plain SENSE); ``noise_sigma`` scales the data term by ``1/sigma^2``.
    """

    image_reg_lambda: float = 0.0
    cg: CgConfig = field(default_factory=CgConfig)
    noise_sigma: float = 1.0

    def __post_init__(self):
        if self.noise_sigma <= 0:
            raise ValueError("noise_sigma must be > 0")
        if self.image_reg_lambda < 0:
            raise ValueError("image_reg_lambda must be >= 0")


def reconstruct(y: ComplexVolume, maps: SensitivitySet, mask: SamplingMask,
                cfg: ReconConfig | None = None) -> ComplexVolume:
    """Solve ``(A^H A / sigma^2 + lambda I) x = A^H y / sigma^2`` by CG."""
    cfg = cfg or ReconConfig()
    model = ForwardModel(sens=maps, mask=mask)
    inv_var = 1.0 / (cfg.noise_sigma ** 2)
    lam = cfg.image_reg_lambda
    aha = normal_operator(model)

    def op(x):
        out = inv_var * aha(x)
        if lam:
            out = out + lam * x
        return out

    rhs = inv_var * apply_adjoint(model, y).data[0]
    result = cg_solve(op, rhs, cfg.cg)
    return ComplexVolume(
        data=result.solution[None],
        domain="image",
        voxel_size_mm=maps.maps.voxel_size_mm,
        origin_mm=maps.maps.origin_mm,
    )


def correct_sensitivities(maps: SensitivitySet, g: CorrectionMap) -> SensitivitySet:
    """Multiply every coil map voxelwise by a correction map."""
    scaled = elementwise_scale(maps.maps, g)
    return SensitivitySet(maps=scaled, support=maps.support, kind="true_map")


def reconstruct_corrected(y: ComplexVolume, maps: SensitivitySet, mask: SamplingMask,
                          g: CorrectionMap, cfg: ReconConfig | None = None) -> ComplexVolume:
    """Reconstruct with sensitivity maps corrected by ``g`` before inversion."""
    if g.volume_values.shape != maps.maps.spatial_shape:
        raise GridMismatchError(
            f"correction map grid {g.volume_values.shape} != image grid "
            f"{maps.maps.spatial_shape}")
    return reconstruct(y, correct_sensitivities(maps, g), mask, cfg)


def apply_image_correction(xhat: ComplexVolume, h: CorrectionMap) -> ComplexVolume:
    """Multiply a reconstructed image voxelwise by ``h``."""
    return elementwise_scale(xhat, h)


def uniform_undersampling_mask(spatial_shape, rate: int, axis: int = -2) -> SamplingMask:
    """Keep every ``rate``-th line along one phase-encode axis.

    The retained lines are phased so the central (DC) line is kept.
    """
    if rate < 1:
        raise ValueError("acceleration rate must be >= 1")
    shape = tuple(int(n) for n in spatial_shape)
    if len(shape) == 2:
        shape = (1,) + shape
    keep = np.zeros(shape, dtype=bool)
    n = shape[axis]
    center = n // 2
    idx = [i for i in range(n) if i % rate == center % rate]
    sl = [slice(None)] * 3
    sl[axis] = idx
    keep[tuple(sl)] = True
    return SamplingMask(keep)
