import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from scc import (
    CgConfig,
    ComplexVolume,
    PlaneSpec,
    PrescanConfig,
    PrescanPair,
    SccConfig,
    SurfaceCoilCorrection,
    condition_prescan,
    estimate_h_map,
)
from scc.prescan import NORMALIZE_BY_SURFACE


def prescan_stacks(rng, ncoils_surface=4, ncoils_body=2, n=16):
    body = rng.standard_normal((ncoils_body, n, n)) + 1j * rng.standard_normal(
        (ncoils_body, n, n))
    surface = rng.standard_normal((ncoils_surface, n, n)) + 1j * rng.standard_normal(
        (ncoils_surface, n, n))
    return surface, body


class TestSklearnProtocol:
    def test_get_set_params_round_trip(self):
        est = SurfaceCoilCorrection(kind="g", lam=0.1, tukey_alpha=0.3)
        params = est.get_params()
        assert params["kind"] == "g"
        assert params["lam"] == 0.1
        est.set_params(lam=0.2)
        assert est.lam == 0.2

    def test_clone_preserves_params(self):
        est = SurfaceCoilCorrection(kind="g", lam=0.07, pad_to=(1, 32, 32))
        twin = clone(est)
        assert twin.get_params() == est.get_params()

    def test_fit_returns_self(self, rng):
        surface, body = prescan_stacks(rng)
        est = SurfaceCoilCorrection()
        assert est.fit(surface, body) is est

    def test_transform_before_fit_raises(self, rng):
        est = SurfaceCoilCorrection()
        with pytest.raises(NotFittedError):
            est.transform(np.ones((4, 4)))

    def test_invalid_kind_rejected_at_fit(self, rng):
        surface, body = prescan_stacks(rng)
        with pytest.raises(ValueError):
            SurfaceCoilCorrection(kind="x").fit(surface, body)


class TestFitMatchesFunctionalPath:
    def test_h_kind_equals_pipeline_functions(self, rng):
        surface, body = prescan_stacks(rng)
        est = SurfaceCoilCorrection(kind="h", lam=5e-2, tukey_alpha=0.5,
                                    cg_rel_tol=1e-10, cg_max_iters=4000)
        est.fit(surface, body)

        pair = PrescanPair(body=ComplexVolume(data=body[:, None]),
                           surface=ComplexVolume(data=surface[:, None]))
        x_bc, x_sc = condition_prescan(
            pair, PrescanConfig(tukey_alpha=0.5, normalize=NORMALIZE_BY_SURFACE))
        expected = estimate_h_map(
            x_bc, x_sc,
            SccConfig(lam=5e-2, cg=CgConfig(max_iters=4000, rel_tol=1e-10)))
        assert np.array_equal(est.correction_map_.values, expected.values)
        assert est.correction_map_.kind == "h"

    def test_g_kind_normalizes_by_body(self, rng):
        surface, body = prescan_stacks(rng)
        est = SurfaceCoilCorrection(kind="g").fit(surface, body)
        assert est.x_bc_.data.real.max() == pytest.approx(1.0, abs=1e-12)
        est_h = SurfaceCoilCorrection(kind="h").fit(surface, body)
        assert est_h.x_sc_.data.real.max() == pytest.approx(1.0, abs=1e-12)

    def test_pad_to_upsamples_fit_grid(self, rng):
        surface, body = prescan_stacks(rng, n=8)
        est = SurfaceCoilCorrection(kind="h", pad_to=(1, 16, 16)).fit(surface, body)
        assert est.correction_map_.values.shape == (1, 16, 16)


class TestTransform:
    def test_transform_multiplies_by_map(self, rng):
        surface, body = prescan_stacks(rng)
        est = SurfaceCoilCorrection(kind="h").fit(surface, body)
        x = rng.standard_normal((16, 16))
        out = est.transform(x)
        assert out.shape == (16, 16)
        assert np.allclose(out, x * est.correction_map_.values[0], rtol=1e-12)

    def test_transform_volume_preserves_type(self, rng):
        surface, body = prescan_stacks(rng)
        est = SurfaceCoilCorrection(kind="h").fit(surface, body)
        vol = ComplexVolume(data=rng.standard_normal((16, 16)) + 0j)
        out = est.transform(vol)
        assert isinstance(out, ComplexVolume)

    def test_fit_transform_available(self, rng):
        surface, body = prescan_stacks(rng)
        out = SurfaceCoilCorrection(kind="h").fit_transform(
            surface, body)
        # TransformerMixin applies transform to X (the surface stack)
        assert out.shape == surface.shape

    def test_map_on_plane(self, rng):
        body = rng.standard_normal((2, 4, 8, 8)) + 0j
        surface = rng.standard_normal((4, 4, 8, 8)) + 0j
        est = SurfaceCoilCorrection(kind="h").fit(
            ComplexVolume(data=surface), ComplexVolume(data=body))
        plane = PlaneSpec(origin_mm=(0, 0, 0), row_dir=(0, 1, 0), col_dir=(1, 0, 0),
                          row_spacing_mm=1.0, col_spacing_mm=1.0, rows=5, cols=5)
        out = est.map_on_plane(plane)
        assert out.values.shape == (5, 5)
