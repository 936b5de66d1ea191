from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mcfobs.grid import (
    Contour,
    EmptyContourError,
    Grid2,
    GridMismatchError,
    RegionMask,
    ScalarField,
    area_sublevel,
    circle_contour,
    curvature_on_contour,
    extract_contour,
    hausdorff,
    perimeter_sublevel,
    symmetric_difference_area,
    tv_perimeter,
)


def disk(g: Grid2, r: float, c=(0.5, 0.5)) -> ScalarField:
    return ScalarField.from_function(g, lambda x, y: np.hypot(x - c[0], y - c[1]) - r)


class TestGrid:
    def test_unit_square_geometry(self):
        g = Grid2.unit_square(32)
        assert g.spacing == 1 / 32
        assert g.bounds == pytest.approx((0.0, 1.0, 0.0, 1.0))
        assert g.x()[0] == pytest.approx(1 / 64)

    @pytest.mark.parametrize("kw", [dict(nx=3, ny=8, spacing=0.1), dict(nx=8, ny=8, spacing=0.0),
                                    dict(nx=8, ny=8, spacing=float("nan"))])
    def test_rejects_bad_grids(self, kw):
        with pytest.raises(ValueError):
            Grid2(**kw)

    def test_dict_round_trip(self):
        g = Grid2(10, 12, 0.05, (0.1, -0.2))
        assert Grid2.from_dict(g.to_dict()) == g

    def test_field_rejects_nonfinite(self, g64):
        v = np.zeros(g64.shape)
        v[3, 3] = np.nan
        with pytest.raises(ValueError):
            ScalarField(g64, v)

    def test_field_values_are_read_only(self, g64):
        f = ScalarField.constant(g64, 1.0)
        with pytest.raises(ValueError):
            f.values[0, 0] = 2.0

    def test_mismatched_grids_rejected(self, g64):
        a = RegionMask(g64, np.zeros(g64.shape, bool))
        b = RegionMask(Grid2.unit_square(32), np.zeros((32, 32), bool))
        with pytest.raises(GridMismatchError):
            symmetric_difference_area(a, b)


class TestExtractContour:
    def test_planar_interface(self, g64):
        c = extract_contour(ScalarField.from_function(g64, lambda x, y: x - 0.5))
        assert len(c.polylines) == 1
        assert np.allclose(c.polylines[0][:, 0], 0.5, atol=1e-12)

    def test_circle(self, g64):
        c = extract_contour(disk(g64, 0.25))
        assert len(c.polylines) == 1 and c.closed() == [True]
        rad = np.hypot(*(c.vertices() - 0.5).T)
        assert np.max(np.abs(rad - 0.25)) < g64.spacing

    def test_constant_field_is_empty(self, g64):
        assert extract_contour(ScalarField.constant(g64, 1.0)).is_empty

    def test_inside_on_left(self, g64):
        p = extract_contour(disk(g64, 0.25)).polylines[0]
        x, y = p[:-1].T
        xn, yn = p[1:].T
        assert 0.5 * np.sum(x * yn - xn * y) > 0


class TestArea:
    def test_half_plane(self, g64):
        f = ScalarField.from_function(g64, lambda x, y: x - 0.5)
        assert area_sublevel(f) == pytest.approx(0.5, abs=g64.spacing ** 2)

    def test_disk(self, g64):
        r = 0.25
        tol = 2 * g64.spacing * 2 * math.pi * r
        assert area_sublevel(disk(g64, r)) == pytest.approx(math.pi * r * r, abs=tol)

    def test_full_grid(self, g64):
        assert area_sublevel(ScalarField.constant(g64, -1.0)) == g64.area


class TestPerimeter:
    def test_disk(self):
        g = Grid2.unit_square(128)
        assert perimeter_sublevel(disk(g, 0.25)) == pytest.approx(2 * math.pi * 0.25, rel=0.03)

    def test_empty(self, g64):
        assert perimeter_sublevel(ScalarField.constant(g64, 1.0)) == 0.0

    def test_square(self, g64):
        s = 0.4
        f = ScalarField.from_function(g64, lambda x, y: np.maximum(abs(x - 0.5), abs(y - 0.5)) - s / 2)
        assert perimeter_sublevel(f) == pytest.approx(4 * s, rel=0.03)

    def test_tv_perimeter_axis_aligned_square(self, g64):
        inside = np.zeros(g64.shape, bool)
        inside[16:48, 16:48] = True
        assert tv_perimeter(RegionMask(g64, inside)) == pytest.approx(4 * 0.5, rel=0.05)


class TestCurvature:
    def test_disk(self, g64):
        f = disk(g64, 0.25)
        s = curvature_on_contour(f, extract_contour(f))
        assert len(s) > 0
        assert np.all(np.abs(s.kappa - 4.0) <= 0.4)

    def test_planar(self, g64):
        f = ScalarField.from_function(g64, lambda x, y: y - 0.5)
        s = curvature_on_contour(f, extract_contour(f))
        assert len(s) > 0
        assert np.all(np.abs(s.kappa) <= 0.05 / g64.spacing * np.finfo(float).eps)

    def test_tilted_planar_is_roundoff(self, g64):
        f = ScalarField.from_function(g64, lambda x, y: y - 0.5 + 0.3 * (x - 0.5))
        s = curvature_on_contour(f, extract_contour(f))
        assert np.all(np.abs(s.kappa) < 1e-10)

    def test_complement_sign(self, g64):
        f = -disk(g64, 0.25)
        s = curvature_on_contour(f, extract_contour(f))
        assert np.all(np.abs(s.kappa + 4.0) <= 0.4)


class TestHausdorff:
    sp = 1 / 64

    def test_concentric(self):
        assert hausdorff(circle_contour((0.5, 0.5), 0.2), circle_contour((0.5, 0.5), 0.3)) == pytest.approx(0.1, abs=self.sp)

    def test_identical(self):
        c = circle_contour((0.5, 0.5), 0.2)
        assert hausdorff(c, c) == 0.0

    def test_translated(self):
        a = circle_contour((0.5, 0.5), 0.2)
        b = circle_contour((0.55, 0.5), 0.2)
        assert hausdorff(a, b) == pytest.approx(0.05, abs=self.sp)

    def test_empty_raises(self):
        with pytest.raises(EmptyContourError):
            hausdorff(Contour(), circle_contour((0.5, 0.5), 0.2))

    @given(st.floats(0.05, 0.3), st.floats(0.05, 0.3))
    def test_symmetric(self, r1, r2):
        a, b = circle_contour((0.4, 0.5), r1, 90), circle_contour((0.5, 0.45), r2, 70)
        assert hausdorff(a, b) == pytest.approx(hausdorff(b, a), abs=1e-15)


class TestSymmetricDifference:
    def test_identical(self, g64):
        m = disk(g64, 0.2).sublevel()
        assert symmetric_difference_area(m, m) == 0.0

    def test_disjoint(self, g64):
        a, b = np.zeros(g64.shape, bool), np.zeros(g64.shape, bool)
        a[:10, :10] = True
        b[30:40, 30:35] = True
        ma, mb = RegionMask(g64, a), RegionMask(g64, b)
        assert symmetric_difference_area(ma, mb) == pytest.approx(ma.area + mb.area)

    def test_annulus(self, g64):
        a, b = disk(g64, 0.2).sublevel(), disk(g64, 0.3).sublevel()
        tol = 4 * g64.spacing * 2 * math.pi * 0.5
        assert symmetric_difference_area(a, b) == pytest.approx(math.pi * (0.09 - 0.04), abs=tol)

    @given(st.integers(0, 2 ** 32 - 1))
    def test_metric_axioms(self, seed):
        g = Grid2.unit_square(16)
        rng = np.random.default_rng(seed)
        a, b, c = (RegionMask(g, rng.random(g.shape) < 0.5) for _ in range(3))
        d = symmetric_difference_area
        assert d(a, b) == d(b, a)
        assert d(a, c) <= d(a, b) + d(b, c) + 1e-15
