import numpy as np
import pytest

from scc import ComplexVolume, estimate_ssos_maps, ssos_combine


class TestSsosCombine:
    def test_single_coil_gives_magnitude(self, rng):
        x = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
        out = ssos_combine(ComplexVolume(data=x))
        assert np.allclose(out.data[0, 0], np.abs(x), rtol=1e-12)

    def test_three_four_five(self):
        coils = np.zeros((2, 1, 1, 1), dtype=complex)
        coils[0] = 3.0
        coils[1] = 4.0
        out = ssos_combine(ComplexVolume(data=coils))
        assert out.data[0, 0, 0, 0] == pytest.approx(5.0)

    def test_output_real_nonnegative(self, rng):
        coils = rng.standard_normal((3, 5, 5)) + 1j * rng.standard_normal((3, 5, 5))
        out = ssos_combine(coils[:, None])
        assert np.all(out.data.imag == 0.0)
        assert np.all(out.data.real >= 0.0)

    def test_invariant_to_per_coil_phase(self, rng):
        coils = rng.standard_normal((3, 4, 4)) + 1j * rng.standard_normal((3, 4, 4))
        phases = np.exp(1j * rng.uniform(0, 2 * np.pi, 3))
        a = ssos_combine(coils[:, None]).data
        b = ssos_combine((coils * phases[:, None, None])[:, None]).data
        assert np.allclose(a, b, rtol=1e-12)

    def test_equals_map_adjoint_combination(self, rng):
        # SSoS equals applying the conjugated SSoS maps to the stack
        coils = rng.standard_normal((4, 6, 6)) + 1j * rng.standard_normal((4, 6, 6))
        vol = ComplexVolume(data=coils[:, None])
        sens = estimate_ssos_maps(vol)
        combined = np.sum(np.conj(sens.maps.data) * vol.data, axis=0)
        ssos = ssos_combine(vol).data[0]
        assert np.allclose(combined[sens.support], ssos[sens.support], rtol=1e-12)


class TestEstimateSsosMaps:
    def test_three_four_five_maps(self):
        coils = np.zeros((2, 1, 1, 1), dtype=complex)
        coils[0] = 3.0
        coils[1] = 4.0
        sens = estimate_ssos_maps(ComplexVolume(data=coils))
        assert sens.maps.data[0, 0, 0, 0] == pytest.approx(0.6)
        assert sens.maps.data[1, 0, 0, 0] == pytest.approx(0.8)
        assert sens.kind == "ssos_estimate"

    def test_single_coil_keeps_phase(self, rng):
        x = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        sens = estimate_ssos_maps(ComplexVolume(data=x[None, None]))
        m = sens.maps.data[0, 0]
        assert np.allclose(np.abs(m[sens.support[0]]), 1.0, rtol=1e-12)
        assert np.allclose(np.angle(m[sens.support[0]]),
                           np.angle(x[sens.support[0]]), rtol=1e-12)

    def test_unit_ssos_on_support(self, rng):
        coils = rng.standard_normal((5, 8, 8)) + 1j * rng.standard_normal((5, 8, 8))
        sens = estimate_ssos_maps(coils[:, None])
        total = np.sum(np.abs(sens.maps.data) ** 2, axis=0)
        assert np.allclose(total[sens.support], 1.0, atol=1e-6)

    def test_reassembly_identity(self, rng):
        coils = rng.standard_normal((2, 8, 8)) + 1j * rng.standard_normal((2, 8, 8))
        vol = ComplexVolume(data=coils[:, None])
        sens = estimate_ssos_maps(vol)
        ssos = np.sqrt(np.sum(np.abs(coils) ** 2, axis=0))[None]
        rebuilt = sens.maps.data * ssos[None]
        assert np.allclose(rebuilt[:, sens.support], vol.data[:, sens.support],
                           rtol=1e-12, atol=1e-12)

    def test_all_zero_input_gives_empty_support(self):
        sens = estimate_ssos_maps(np.zeros((2, 1, 4, 4), dtype=complex))
        assert not sens.support.any()
        assert not sens.maps.data.any()

    def test_unsupported_voxels_are_exactly_zero(self, rng):
        coils = rng.standard_normal((2, 6, 6)) + 1j * rng.standard_normal((2, 6, 6))
        coils[:, :3] = 0.0
        sens = estimate_ssos_maps(coils[:, None])
        assert not sens.support[0, :3].any()
        assert not sens.maps.data[:, 0, :3].any()

    def test_magnitude_recovery_from_unit_ssos_truth(self, rng):
        # if the true maps already satisfy unit SSoS, estimation on noiseless
        # coil images recovers their magnitudes
        maps = rng.standard_normal((3, 6, 6)) + 1j * rng.standard_normal((3, 6, 6))
        maps /= np.sqrt(np.sum(np.abs(maps) ** 2, axis=0))[None]
        x = rng.uniform(0.5, 1.5, (6, 6))  # strictly positive object
        coil_images = maps * x[None]
        sens = estimate_ssos_maps(coil_images[:, None])
        assert np.allclose(np.abs(sens.maps.data[:, 0]), np.abs(maps),
                           rtol=1e-10, atol=1e-12)
