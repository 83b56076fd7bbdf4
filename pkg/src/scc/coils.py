"""Coil combination and SSoS sensitivity-map estimation."""

from __future__ import annotations

import numpy as np

from .validation import as_volume
from .volumes import SUPPORT_RTOL, ComplexVolume, SensitivitySet


def ssos_combine(coils) -> ComplexVolume:
    """Square-root of the sum-of-squares across coils.

    Returns a single-coil volume whose samples are real and nonnegative
    (the imaginary part is exactly zero).
    """
    vol = as_volume(coils)
    combined = np.sqrt(np.sum(np.abs(vol.data) ** 2, axis=0))
    return vol.with_data(combined.astype(np.complex128)[None])


def estimate_ssos_maps(coils) -> SensitivitySet:
    """Estimate sensitivity maps by dividing each coil image by the SSoS image.

    Voxels whose SSoS magnitude falls below ``SUPPORT_RTOL`` times the peak
    are left unsupported and hold exactly zero in every coil.  On the
    support the maps satisfy ``sum_k |map_k|^2 == 1``.
    """
    vol = as_volume(coils)
    ssos = np.sqrt(np.sum(np.abs(vol.data) ** 2, axis=0))
    peak = ssos.max()
    support = ssos > SUPPORT_RTOL * peak if peak > 0 else np.zeros_like(ssos, dtype=bool)
    maps = np.zeros_like(vol.data)
    np.divide(vol.data, ssos[None], out=maps, where=support[None])
    maps[:, ~support] = 0.0
    return SensitivitySet(maps=vol.with_data(maps), support=support, kind="ssos_estimate")
