"""Shared test helpers: dense matrix oracles for the small-grid checks."""

import numpy as np
import pytest

from scc import ComplexVolume, SamplingMask, SensitivitySet


def centered_dft_matrix(n: int) -> np.ndarray:
    """Dense unitary centered 1D DFT (DC at index n // 2)."""
    c = n // 2
    k = np.arange(n)[:, None] - c
    j = np.arange(n)[None, :] - c
    return np.exp(-2j * np.pi * k * j / n) / np.sqrt(n)


def dense_forward_matrix(maps: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Explicit stacked (P F S_k) matrix for a 2D grid.

    ``maps`` has shape (ncoils, ny, nx); ``mask`` (ny, nx).  Vectorization
    is C-order (x fastest), matching the package layout.
    """
    ncoils, ny, nx = maps.shape
    F = np.kron(centered_dft_matrix(ny), centered_dft_matrix(nx))
    P = np.eye(ny * nx)[mask.ravel()]
    blocks = [P @ F @ np.diag(maps[k].ravel()) for k in range(ncoils)]
    return np.vstack(blocks)


def random_ssos_maps(rng, ncoils: int, ny: int, nx: int) -> np.ndarray:
    """Random smooth-ish complex maps normalized to unit SSoS per voxel."""
    maps = rng.standard_normal((ncoils, ny, nx)) + 1j * rng.standard_normal((ncoils, ny, nx))
    ssos = np.sqrt(np.sum(np.abs(maps) ** 2, axis=0))
    return maps / ssos


def sensitivity_set(maps2d: np.ndarray) -> SensitivitySet:
    vol = ComplexVolume(data=maps2d[:, None, :, :])
    support = np.ones(vol.spatial_shape, dtype=bool)
    return SensitivitySet(maps=vol, support=support, kind="true_map")


def image_volume(arr2d: np.ndarray) -> ComplexVolume:
    return ComplexVolume(data=np.asarray(arr2d, dtype=complex))


def mask_from_2d(keep2d: np.ndarray) -> SamplingMask:
    return SamplingMask(keep2d[None])


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
