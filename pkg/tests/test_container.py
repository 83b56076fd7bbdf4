import json

import numpy as np
import pytest
from PIL import Image

from scc import ComplexVolume, CorrectionMap, PlaneSpec, SamplingMask, default_scenario
from scc.container import (
    ContainerFormatError,
    load_plane,
    load_scenario,
    read_map,
    read_mask,
    read_volume,
    render_png,
    save_plane,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
    write_map,
    write_mask,
    write_volume,
)


def random_volume(rng, shape=(2, 1, 4, 4), domain="image"):
    data = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    # quantize so the float32 payload represents the volume exactly
    data = data.astype(np.complex64).astype(np.complex128)
    return ComplexVolume(data=data, domain=domain,
                         voxel_size_mm=(1.5, 2.0, 3.0), origin_mm=(0.5, -1.0, 0.0))


class TestVolumeRoundTrip:
    def test_round_trip_bit_identical(self, rng, tmp_path):
        vol = random_volume(rng, (2, 1, 4, 4))
        write_volume(vol, tmp_path / "vol")
        back = read_volume(tmp_path / "vol")
        assert np.array_equal(back.data, vol.data)
        assert back.domain == vol.domain
        assert back.voxel_size_mm == vol.voxel_size_mm
        assert back.origin_mm == vol.origin_mm

    def test_many_randomized_round_trips(self, rng, tmp_path):
        for i in range(20):
            shape = (int(rng.integers(1, 4)), 1, int(rng.integers(2, 9)),
                     int(rng.integers(2, 9)))
            domain = "image" if i % 2 else "kspace"
            vol = random_volume(rng, shape, domain)
            write_volume(vol, tmp_path / f"v{i}")
            back = read_volume(tmp_path / f"v{i}")
            assert np.array_equal(back.data, vol.data)
            assert back.domain == domain

    def test_rewrite_is_bit_identical(self, rng, tmp_path):
        vol = random_volume(rng)
        write_volume(vol, tmp_path / "a")
        write_volume(read_volume(tmp_path / "a"), tmp_path / "b")
        assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()
        assert (tmp_path / "a.json").read_text() == (tmp_path / "b.json").read_text()

    def test_header_fields(self, rng, tmp_path):
        vol = random_volume(rng, (3, 1, 4, 6))
        write_volume(vol, tmp_path / "vol", meta={"stage": "test"})
        header = json.loads((tmp_path / "vol.json").read_text())
        assert header["magic"] == "SCCVOL1"
        assert header["shape"] == [3, 1, 4, 6]
        assert header["dtype"] == "c64"
        assert header["byte_order"] == "little-endian"
        assert header["layout"] == "x-fastest"
        assert header["meta"] == {"stage": "test"}
        payload = (tmp_path / "vol.bin").read_bytes()
        assert len(payload) == 3 * 1 * 4 * 6 * 8

    def test_accepts_json_suffix_path(self, rng, tmp_path):
        vol = random_volume(rng)
        write_volume(vol, tmp_path / "vol.json")
        assert read_volume(tmp_path / "vol").data.shape == vol.data.shape

    def test_truncated_payload_rejected(self, rng, tmp_path):
        vol = random_volume(rng)
        write_volume(vol, tmp_path / "vol")
        payload = (tmp_path / "vol.bin").read_bytes()
        (tmp_path / "vol.bin").write_bytes(payload[:-1])
        with pytest.raises(ContainerFormatError, match="truncated"):
            read_volume(tmp_path / "vol")

    def test_bad_magic_rejected(self, rng, tmp_path):
        vol = random_volume(rng)
        write_volume(vol, tmp_path / "vol")
        header = json.loads((tmp_path / "vol.json").read_text())
        header["magic"] = "NOPE"
        (tmp_path / "vol.json").write_text(json.dumps(header))
        with pytest.raises(ContainerFormatError, match="magic"):
            read_volume(tmp_path / "vol")

    def test_nan_rejected_unless_allowed(self, tmp_path):
        data = np.ones((1, 1, 2, 2), dtype=complex)
        data[0, 0, 0, 0] = np.nan
        vol = ComplexVolume(data=data)
        with pytest.raises(ValueError, match="non-finite"):
            write_volume(vol, tmp_path / "bad")
        write_volume(vol, tmp_path / "ok", allow_nan=True)
        assert np.isnan(read_volume(tmp_path / "ok").data[0, 0, 0, 0])

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_volume(tmp_path / "missing")


class TestMapAndMask:
    def test_map_round_trip(self, rng, tmp_path):
        vals = rng.uniform(0, 2, (1, 6, 6)).astype(np.float32).astype(np.float64)
        cmap = CorrectionMap(values=vals, kind="h", voxel_size_mm=(2.0, 2.0, 2.0))
        write_map(cmap, tmp_path / "map")
        back = read_map(tmp_path / "map")
        assert np.array_equal(back.values, vals)
        assert back.kind == "h"
        header = json.loads((tmp_path / "map.json").read_text())
        assert header["dtype"] == "f32"

    def test_mask_round_trip(self, rng, tmp_path):
        keep = rng.random((1, 8, 8)) < 0.4
        keep[0, 4, 4] = True
        write_mask(SamplingMask(keep), tmp_path / "mask")
        back = read_mask(tmp_path / "mask")
        assert np.array_equal(back.keep, keep)

    def test_read_map_rejects_complex_container(self, rng, tmp_path):
        write_volume(random_volume(rng), tmp_path / "vol")
        with pytest.raises(ContainerFormatError):
            read_map(tmp_path / "vol")


class TestRenderPng:
    def _pixels(self, path):
        return np.asarray(Image.open(path))

    def test_constant_half_rounds_half_up(self, tmp_path):
        cmap = CorrectionMap(values=np.full((4, 4), 0.5), kind="g")
        render_png(cmap, tmp_path / "half.png")
        assert np.all(self._pixels(tmp_path / "half.png") == 128)

    def test_all_zero_is_black(self, tmp_path):
        render_png(np.zeros((4, 4)), tmp_path / "zero.png")
        assert np.all(self._pixels(tmp_path / "zero.png") == 0)

    def test_values_above_one_clip_to_white(self, tmp_path):
        render_png(np.full((4, 4), 2.0), tmp_path / "two.png")
        assert np.all(self._pixels(tmp_path / "two.png") == 255)

    def test_max_scaling(self, tmp_path):
        arr = np.array([[0.0, 2.0], [4.0, 1.0]])
        render_png(arr, tmp_path / "max.png", scale="max")
        px = self._pixels(tmp_path / "max.png")
        assert px[1, 0] == 255
        assert px[0, 1] == 128

    def test_volume_magnitude_rendering(self, rng, tmp_path):
        vol = ComplexVolume(data=np.full((4, 4), 1j))
        render_png(vol, tmp_path / "mag.png")
        assert np.all(self._pixels(tmp_path / "mag.png") == 255)

    def test_3d_requires_slice_index(self, rng):
        arr = rng.random((3, 4, 4))
        with pytest.raises(ValueError, match="slice"):
            render_png(arr, "/tmp/unused.png")


class TestScenarioAndPlaneFiles:
    def test_scenario_round_trip(self, tmp_path):
        s = default_scenario(matrix=32, fov_mm=32.0, sigma=0.01, seed=9)
        save_scenario(s, tmp_path / "scenario.json")
        back = load_scenario(tmp_path / "scenario.json")
        assert back == s

    def test_scenario_dict_round_trip(self):
        s = default_scenario(matrix=64, fov_mm=128.0)
        assert scenario_from_dict(scenario_to_dict(s)) == s

    def test_scenario_missing_field(self, tmp_path):
        (tmp_path / "bad.json").write_text(json.dumps({"phantom": {}}))
        with pytest.raises(ContainerFormatError):
            load_scenario(tmp_path / "bad.json")

    def test_plane_round_trip(self, tmp_path):
        plane = PlaneSpec(origin_mm=(1, 2, 3), row_dir=(0, 1, 0), col_dir=(0, 0, 1),
                          row_spacing_mm=1.5, col_spacing_mm=2.0, rows=8, cols=4)
        save_plane(plane, tmp_path / "plane.json")
        assert load_plane(tmp_path / "plane.json") == plane

    def test_plane_validation_applied_on_load(self, tmp_path):
        d = {"origin_mm": [0, 0, 0], "row_dir": [2, 0, 0], "col_dir": [0, 1, 0],
             "row_spacing_mm": 1.0, "col_spacing_mm": 1.0, "rows": 4, "cols": 4}
        (tmp_path / "plane.json").write_text(json.dumps(d))
        with pytest.raises(ValueError):
            load_plane(tmp_path / "plane.json")
