"""Pre-scan conditioning: apodize, zero-pad, coil-combine, normalize.

Turns raw low-resolution body/surface coil stacks into the matched pair of
real nonnegative reference volumes that correction-map fitting consumes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .coils import ssos_combine
from .operators import fft_centered, ifft_centered
from .validation import as_volume, check_same_grid
from .volumes import KSPACE, ComplexVolume, DomainError, GridMismatchError

NORMALIZE_BY_BODY = "by_body_max"
NORMALIZE_BY_SURFACE = "by_surface_max"


@dataclass(frozen=True)
class PrescanPair:
    """Simultaneously acquired body-coil and surface-coil image stacks."""

    body: ComplexVolume
    surface: ComplexVolume

    def __post_init__(self):
        check_same_grid(self.body, self.surface, "body and surface pre-scans")
        if self.body.ncoils < 1 or self.surface.ncoils < 1:
            raise ValueError("pre-scan stacks need at least one coil each")


@dataclass(frozen=True)
class PrescanConfig:
    """Conditioning parameters.

    ``pad_to`` is a target spatial shape ``(nz, ny, nx)`` or ``None`` to
    keep the acquired matrix.  ``normalize`` selects which combined volume
    provides the shared normalization scalar.
    """

    tukey_alpha: float = 0.5
    pad_to: tuple[int, int, int] | None = None
    normalize: str = NORMALIZE_BY_BODY

    def __post_init__(self):
        if not (0.0 <= self.tukey_alpha <= 1.0):
            raise ValueError("tukey_alpha must lie in [0, 1]")
        if self.normalize not in (NORMALIZE_BY_BODY, NORMALIZE_BY_SURFACE):
            raise ValueError(f"unknown normalization {self.normalize!r}")


def tukey_window_1d(n: int, alpha: float) -> NDArray[np.float64]:
    """Symmetric tapered-cosine window: flat top with cosine flanks.

    ``alpha=0`` is rectangular, ``alpha=1`` is the Hann window.
    """
    if n < 1:
        raise ValueError("window length must be >= 1")
    if not (0.0 <= alpha <= 1.0):
        raise ValueError("alpha must lie in [0, 1]")
    if n == 1 or alpha == 0.0:
        return np.ones(n)
    k = np.arange(n)
    width = int(np.floor(alpha * (n - 1) / 2.0))
    w = np.ones(n, dtype=np.float64)
    head = k[: width + 1]
    tail = k[n - width - 1:]
    w[: width + 1] = 0.5 * (1 + np.cos(np.pi * (-1 + 2.0 * head / alpha / (n - 1))))
    w[n - width - 1:] = 0.5 * (
        1 + np.cos(np.pi * (-2.0 / alpha + 1 + 2.0 * tail / alpha / (n - 1))))
    return w


def apodize_kspace(volume: ComplexVolume, alpha: float) -> ComplexVolume:
    """Multiply k-space by a separable per-axis Tukey window (coils untouched)."""
    if volume.domain != KSPACE:
        raise DomainError("apodize_kspace expects a k-space volume")
    if alpha == 0.0:
        return volume
    data = volume.data
    for offset, n in enumerate(volume.spatial_shape):
        if n == 1:
            continue
        axis = 1 + offset
        w = tukey_window_1d(n, alpha)
        shape = [1] * data.ndim
        shape[axis] = n
        data = data * w.reshape(shape)
    return volume.with_data(data)


def zeropad_kspace(volume: ComplexVolume, pad_to) -> ComplexVolume:
    """Embed k-space centered in a larger zero grid, preserving the FOV.

    The voxel size shrinks by the padding ratio per axis; the total energy
    is unchanged.
    """
    if volume.domain != KSPACE:
        raise DomainError("zeropad_kspace expects a k-space volume")
    target = tuple(int(n) for n in pad_to)
    if len(target) != 3:
        raise ValueError("pad_to must give (nz, ny, nx)")
    src = volume.spatial_shape
    if any(t < s for t, s in zip(target, src)):
        raise GridMismatchError(f"pad_to {target} smaller than input grid {src}")
    if target == src:
        return volume
    out = np.zeros((volume.ncoils,) + target, dtype=np.complex128)
    starts = [t // 2 - s // 2 for t, s in zip(target, src)]
    sl = tuple(slice(st, st + s) for st, s in zip(starts, src))
    out[(slice(None),) + sl] = volume.data
    # voxel_size_mm is (x, y, z); spatial extents are (z, y, x)
    vx = tuple(volume.voxel_size_mm[i] * src[2 - i] / target[2 - i] for i in range(3))
    return volume.with_data(out, voxel_size_mm=vx)


def _condition_stack(stack: ComplexVolume, cfg: PrescanConfig) -> ComplexVolume:
    spec = fft_centered(stack)
    spec = apodize_kspace(spec, cfg.tukey_alpha)
    if cfg.pad_to is not None:
        spec = zeropad_kspace(spec, cfg.pad_to)
    return ssos_combine(ifft_centered(spec))


def condition_prescan(pair: PrescanPair, cfg: PrescanConfig | None = None
                      ) -> tuple[ComplexVolume, ComplexVolume]:
    """Condition a pre-scan pair into matched reference volumes.

    Per coil: FFT, Tukey apodization, centered zero-padding, inverse FFT;
    each stack is then SSoS-combined and both volumes are divided by one
    shared scalar (the max of the volume named by ``cfg.normalize``), so
    that their ratio is preserved.

    Returns
    -------
    (body_combined, surface_combined) : tuple of ComplexVolume
        Real nonnegative volumes; the chosen normalizer has max 1.
    """
    cfg = cfg or PrescanConfig()
    body = _condition_stack(pair.body, cfg)
    surface = _condition_stack(pair.surface, cfg)
    reference = body if cfg.normalize == NORMALIZE_BY_BODY else surface
    scale = reference.data.real.max()
    if scale <= 0:
        raise ValueError("pre-scan is all zero; cannot normalize")
    return (body.with_data(body.data / scale),
            surface.with_data(surface.data / scale))
