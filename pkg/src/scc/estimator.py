"""Estimator-style interface to the correction-map workflow.

Wraps pre-scan conditioning plus map fitting behind the familiar
``fit`` / ``transform`` API so the correction composes with scikit-learn
style pipelines: fit on the raw surface/body pre-scan stacks, then
transform images (kind ``"h"``) or sensitivity maps (kind ``"g"``).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .correction import SccConfig, estimate_g_map, estimate_h_map, interpolate_to_plane
from .operators import CgConfig
from .prescan import (
    NORMALIZE_BY_BODY,
    NORMALIZE_BY_SURFACE,
    PrescanConfig,
    PrescanPair,
    condition_prescan,
)
from .validation import coil_stack
from .volumes import ComplexVolume, CorrectionMap, PlaneSpec, elementwise_scale


class SurfaceCoilCorrection(BaseEstimator, TransformerMixin):
    """Learn a smooth intensity-correction map from pre-scan coil stacks.

    Parameters
    ----------
    kind : {"h", "g"}
        ``"h"`` fits the map that multiplies reconstructed images;
        ``"g"`` fits the map that multiplies sensitivity maps before
        reconstruction.  The normalization scalar follows the kind
        (surface max for h, body max for g).
    lam : float
        Smoothness regularization strength.
    tukey_alpha : float
        Apodization parameter for pre-scan conditioning.
    pad_to : tuple of int or None
        Target grid ``(nz, ny, nx)`` for zero-padded upsampling of the
        pre-scan, or None to keep the acquired matrix.
    cg_rel_tol, cg_max_iters : float, int
        Conjugate-gradient stopping rule for the fit.
    fit_mask_threshold : float
        Optional data-term mask threshold, see :class:`SccConfig`.

    Attributes
    ----------
    correction_map_ : CorrectionMap
        The fitted map, on the conditioned pre-scan grid.
    x_bc_, x_sc_ : ComplexVolume
        Conditioned (combined, normalized) body and surface volumes.
    """

    def __init__(self, kind: str = "h", lam: float = 5e-2, tukey_alpha: float = 0.5,
                 pad_to=None, cg_rel_tol: float = 1e-8, cg_max_iters: int = 2000,
                 fit_mask_threshold: float = 0.0):
        self.kind = kind
        self.lam = lam
        self.tukey_alpha = tukey_alpha
        self.pad_to = pad_to
        self.cg_rel_tol = cg_rel_tol
        self.cg_max_iters = cg_max_iters
        self.fit_mask_threshold = fit_mask_threshold

    def fit(self, X, y):
        """Fit the correction map.

        Parameters
        ----------
        X : array or ComplexVolume
            Surface-coil pre-scan stack, ``(ncoils, [nz,] ny, nx)``.
        y : array or ComplexVolume
            Body-coil pre-scan stack on the same grid.
        """
        if self.kind not in ("g", "h"):
            raise ValueError(f"kind must be 'g' or 'h', got {self.kind!r}")
        surface = X if isinstance(X, ComplexVolume) else ComplexVolume(data=coil_stack(X))
        body = y if isinstance(y, ComplexVolume) else ComplexVolume(
            data=coil_stack(y), voxel_size_mm=surface.voxel_size_mm,
            origin_mm=surface.origin_mm)
        pair = PrescanPair(body=body, surface=surface)
        normalize = NORMALIZE_BY_BODY if self.kind == "g" else NORMALIZE_BY_SURFACE
        pad = None if self.pad_to is None else tuple(int(n) for n in self.pad_to)
        prescan_cfg = PrescanConfig(tukey_alpha=self.tukey_alpha, pad_to=pad,
                                    normalize=normalize)
        self.x_bc_, self.x_sc_ = condition_prescan(pair, prescan_cfg)
        fit_cfg = SccConfig(
            lam=self.lam,
            cg=CgConfig(max_iters=self.cg_max_iters, rel_tol=self.cg_rel_tol),
            fit_mask_threshold=self.fit_mask_threshold,
        )
        estimate = estimate_g_map if self.kind == "g" else estimate_h_map
        self.correction_map_ = estimate(self.x_bc_, self.x_sc_, fit_cfg)
        return self

    def transform(self, X):
        """Multiply ``X`` voxelwise by the fitted map (broadcast over coils).

        Plain arrays follow the same convention as ``fit``: 3D input is a
        coil stack ``(ncoils, ny, nx)``; pass a ComplexVolume for true 3D
        single-coil data.  Returns the same type that was passed in.
        """
        check_is_fitted(self, "correction_map_")
        if isinstance(X, ComplexVolume):
            return elementwise_scale(X, self.correction_map_)
        arr = np.asarray(X)
        vol = ComplexVolume(data=coil_stack(arr))
        out = elementwise_scale(vol, self.correction_map_).data
        if np.isrealobj(arr):
            out = out.real
        return out.reshape(arr.shape)

    def map_on_plane(self, plane: PlaneSpec) -> CorrectionMap:
        """Resample the fitted 3D map onto an oblique imaging plane."""
        check_is_fitted(self, "correction_map_")
        return interpolate_to_plane(self.correction_map_, plane)
