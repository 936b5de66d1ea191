from __future__ import annotations

import json
import math
import tempfile
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mcfobs.grid import Contour, Grid2, GridMismatchError, RegionMask, ScalarField, circle_contour
from mcfobs.io import (
    PGM_THRESHOLD,
    FormatError,
    json_safe,
    read_contour_csv,
    read_field,
    read_pgm,
    read_pgm_mask,
    sha256_file,
    step_basename,
    write_contour_csv,
    write_field,
    write_pgm,
)
from mcfobs.scenarios import PRESETS, Scenario, ScenarioError, preset


class TestContourCsv:
    def test_round_trip_is_exact(self, tmp_path):
        c = Contour([circle_contour((0.5, 0.5), 0.2, 37).polylines[0], np.array([[0.1, 0.2], [0.3, 1 / 3]])])
        write_contour_csv(c, tmp_path / "c.csv")
        back = read_contour_csv(tmp_path / "c.csv")
        assert len(back.polylines) == 2
        assert all(np.array_equal(a, b) for a, b in zip(c.polylines, back.polylines))
        assert back.closed() == [True, False]

    def test_empty(self, tmp_path):
        write_contour_csv(Contour(), tmp_path / "e.csv")
        assert (tmp_path / "e.csv").read_text() == "polyline_id,vertex_index,x,y\n"
        assert read_contour_csv(tmp_path / "e.csv").is_empty

    def test_bad_header(self, tmp_path):
        (tmp_path / "b.csv").write_text("a,b\n")
        with pytest.raises(FormatError):
            read_contour_csv(tmp_path / "b.csv")


class TestPgm:
    @given(st.integers(0, 2 ** 32 - 1))
    def test_mask_round_trip(self, seed):
        g = Grid2(9, 6, 0.1)
        m = RegionMask(g, np.random.default_rng(seed).random(g.shape) < 0.5)
        with tempfile.TemporaryDirectory() as tmp:
            p = Path(tmp) / "m.pgm"
            write_pgm(m, p)
            assert read_pgm_mask(p, g) == m

    def test_top_row_is_largest_y(self, tmp_path):
        g = Grid2(4, 5, 0.25)
        ins = np.zeros(g.shape, bool)
        ins[-1, :] = True
        write_pgm(RegionMask(g, ins), tmp_path / "t.pgm")
        img = read_pgm(tmp_path / "t.pgm")
        assert img.shape == (5, 4)
        assert np.all(img[0] == 255) and np.all(img[1:] == 0)

    def test_threshold_at_128(self, tmp_path):
        g = Grid2(4, 4, 0.25)
        vals = np.array([[0, 127, 128, 255]] * 4, dtype=np.uint8)
        (tmp_path / "t.pgm").write_bytes(b"P5\n# comment\n4 4\n255\n" + vals.tobytes())
        m = read_pgm_mask(tmp_path / "t.pgm", g)
        assert PGM_THRESHOLD == 128
        assert m.inside[0].tolist() == [False, False, True, True]

    def test_size_mismatch(self, tmp_path):
        write_pgm(RegionMask(Grid2(4, 4, 0.25), np.ones((4, 4), bool)), tmp_path / "m.pgm")
        with pytest.raises(GridMismatchError):
            read_pgm_mask(tmp_path / "m.pgm", Grid2(5, 4, 0.25))

    @pytest.mark.parametrize("data", [b"P2\n4 4\n255\n", b"P5\n4 4\n65535\n" + bytes(32), b"P5\n4 4\n255\n" + bytes(3)])
    def test_rejects_unsupported(self, tmp_path, data):
        (tmp_path / "x.pgm").write_bytes(data)
        with pytest.raises(FormatError):
            read_pgm(tmp_path / "x.pgm")


class TestField:
    def test_round_trip(self, tmp_path):
        g = Grid2(7, 5, 0.125, (0.3, -1.0))
        f = ScalarField(g, np.random.default_rng(0).normal(size=g.shape))
        write_field(f, tmp_path / "f.f32")
        back = read_field(tmp_path / "f.f32")
        assert back.grid == g
        assert np.array_equal(back.values, f.values.astype(np.float32).astype(float))

    def test_truncated(self, tmp_path):
        g = Grid2(4, 4, 0.25)
        write_field(ScalarField.constant(g, 1.0), tmp_path / "f.f32")
        data = (tmp_path / "f.f32").read_bytes()
        (tmp_path / "f.f32").write_bytes(data[:-4])
        with pytest.raises(FormatError):
            read_field(tmp_path / "f.f32")


class TestHelpers:
    def test_sha256(self, tmp_path):
        (tmp_path / "a").write_bytes(b"abc")
        assert sha256_file(tmp_path / "a") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"

    def test_step_basename(self):
        assert step_basename(3, 0.0003) == "step_3_t_0.00030000"

    def test_json_safe(self):
        out = json_safe({"a": math.inf, "b": [np.float64(1.5), np.int64(2), float("nan")], 3: (np.bool_(True),)})
        assert out == {"a": None, "b": [1.5, 2, None], "3": [True]}
        json.dumps(out, allow_nan=False)


class TestScenario:
    @pytest.mark.parametrize("name", sorted(PRESETS))
    def test_presets_build(self, name):
        sc = preset(name)
        g, d0, d_omega = sc.fields()
        assert d0.grid == g
        if d_omega is not None:
            assert d0.sublevel().issubset(d_omega.sublevel())

    def test_overrides_and_defaults(self):
        sc = Scenario.from_dict({"preset": "disk", "h": 2e-4, "grid": {"n": 64}})
        assert sc.h == 2e-4 and sc.T == 0.02 and sc.grid == {"n": 64} and sc.name == "disk"
        assert Scenario.from_dict(sc.to_dict()) == sc

    @pytest.mark.parametrize("bad, field", [
        ({"preset": "disk", "colour": 1}, "colour"),
        ({"name": "x", "grid": {"n": 32}}, "initial"),
        ({"preset": "nope"}, "nope"),
    ])
    def test_errors_name_field(self, bad, field):
        with pytest.raises(ScenarioError, match=field):
            Scenario.from_dict(bad)

    def test_shape_errors(self):
        sc = Scenario.from_dict({"name": "x", "grid": {"n": 32}, "initial": {"shape": "disk", "center": [0.5, 0.5]}})
        with pytest.raises(ScenarioError, match="initial.radius"):
            sc.fields()
        sc = Scenario.from_dict({"name": "x", "grid": {"n": 32}, "initial": {"shape": "blob"}})
        with pytest.raises(ScenarioError, match="initial.shape"):
            sc.fields()

    def test_grid_from_spacing(self):
        sc = Scenario.from_dict({"name": "x", "grid": {"nx": 40, "ny": 20, "spacing": 0.05},
                                 "initial": {"shape": "strip", "center_y": 0.5, "half_width": 0.2}})
        assert sc.build_grid() == Grid2(40, 20, 0.05)

    def test_pgm_shapes(self, tmp_path):
        g = Grid2.unit_square(32)
        X, Y = g.mesh()
        write_pgm(RegionMask(g, np.hypot(X - 0.5, Y - 0.5) < 0.2), tmp_path / "e.pgm")
        write_pgm(RegionMask(g, np.hypot(X - 0.5, Y - 0.5) < 0.3), tmp_path / "o.pgm")
        sc = Scenario.from_dict({"name": "x", "grid": {"n": 32},
                                 "initial": {"shape": "from_pgm", "path": str(tmp_path / "e.pgm")},
                                 "obstacle": {"kind": "from_pgm", "path": str(tmp_path / "o.pgm")}})
        _, d0, d_omega = sc.fields()
        assert d0.sublevel().count == np.count_nonzero(np.hypot(X - 0.5, Y - 0.5) < 0.2)
        assert d0.sublevel().issubset(d_omega.sublevel())

    def test_two_disks_and_dilation(self):
        sc = Scenario.from_dict({"name": "x", "grid": {"n": 64},
                                 "initial": {"shape": "two_disks", "radius": 0.1, "centers": [[0.3, 0.5], [0.7, 0.5]]},
                                 "obstacle": {"kind": "dilate_initial", "rho": 0.05}})
        g, d0, d_omega = sc.fields()
        assert np.max(np.abs(d_omega.values - (d0.values - 0.05))[np.abs(d0.values) < 0.1]) <= 2 * g.spacing
