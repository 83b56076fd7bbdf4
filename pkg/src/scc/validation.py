"""Input validation helpers shared by the functional API and the estimator."""

from __future__ import annotations

import numpy as np
from numpy.typing import NDArray

from .volumes import IMAGE, ComplexVolume, GridMismatchError


def as_volume(x, domain: str = IMAGE, voxel_size_mm=None) -> ComplexVolume:
    """Coerce an array-like (2D/3D/4D) or ComplexVolume into a ComplexVolume."""
    if isinstance(x, ComplexVolume):
        return x
    kwargs = {} if voxel_size_mm is None else {"voxel_size_mm": voxel_size_mm}
    return ComplexVolume(data=np.asarray(x), domain=domain, **kwargs)


def as_real_array(x, name: str = "volume", imag_tol: float = 1e-9) -> NDArray[np.float64]:
    """Extract a real ``(nz, ny, nx)`` array, rejecting significant imaginary parts."""
    arr = x.data if isinstance(x, ComplexVolume) else np.asarray(x)
    if arr.ndim == 4:
        if arr.shape[0] != 1:
            raise ValueError(f"{name} must be single-coil, got {arr.shape[0]} coils")
        arr = arr[0]
    elif arr.ndim == 2:
        arr = arr[None]
    elif arr.ndim != 3:
        raise ValueError(f"{name} must be 2D or 3D, got {arr.ndim}D")
    if np.iscomplexobj(arr):
        scale = np.max(np.abs(arr)) or 1.0
        if np.max(np.abs(arr.imag)) > imag_tol * scale:
            raise ValueError(f"{name} has a non-negligible imaginary part")
        arr = arr.real
    return np.ascontiguousarray(arr, dtype=np.float64)


def check_same_grid(a, b, what: str = "inputs") -> None:
    """Require two volumes/arrays to share their spatial shape."""
    sa = a.spatial_shape if isinstance(a, ComplexVolume) else np.asarray(a).shape
    sb = b.spatial_shape if isinstance(b, ComplexVolume) else np.asarray(b).shape
    if tuple(sa) != tuple(sb):
        raise GridMismatchError(f"{what} have mismatched grids: {tuple(sa)} vs {tuple(sb)}")


def check_finite(arr: np.ndarray, name: str = "array") -> None:
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")


def coil_stack(x) -> NDArray[np.complex128]:
    """Coerce input into a complex coil stack of shape ``(ncoils, nz, ny, nx)``."""
    arr = x.data if isinstance(x, ComplexVolume) else np.asarray(x, dtype=np.complex128)
    if arr.ndim == 2:
        arr = arr[None, None]
    elif arr.ndim == 3:
        arr = arr[:, None]  # (coil, y, x) -> add z
    elif arr.ndim != 4:
        raise ValueError(f"coil stack must be 2D..4D, got {arr.ndim}D")
    return np.ascontiguousarray(arr, dtype=np.complex128)
