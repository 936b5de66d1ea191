from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mcfobs.distance import (
    DistanceCap,
    VanishedSetError,
    open_with_balls,
    redistance,
    signed_distance,
)
from mcfobs.grid import Grid2, RegionMask, ScalarField, extract_contour


def radial(g, r, c=(0.5, 0.5)):
    return ScalarField.from_function(g, lambda x, y: np.hypot(x - c[0], y - c[1]) - r)


def brute_opening(inside: np.ndarray, rho_cells: float) -> np.ndarray:
    """Union of every discrete ball of radius ``rho_cells`` that fits inside."""
    ny, nx = inside.shape
    k = int(np.ceil(rho_cells))
    offs = [(dj, di) for dj in range(-k, k + 1) for di in range(-k, k + 1) if dj * dj + di * di <= rho_cells ** 2 + 1e-9]
    out = np.zeros_like(inside)
    for j in range(ny):
        for i in range(nx):
            cells = [(j + dj, i + di) for dj, di in offs]
            if all(0 <= a < ny and 0 <= b < nx and inside[a, b] for a, b in cells):
                for a, b in cells:
                    out[a, b] = True
    return out


def within_one_cell(a: np.ndarray, b: np.ndarray) -> bool:
    """Every cell where the masks differ has a 4-neighbour where they agree on the boundary."""
    from scipy import ndimage
    edge_a = a ^ ndimage.binary_erosion(a, border_value=1)
    edge_b = b ^ ndimage.binary_erosion(b, border_value=1)
    near = ndimage.binary_dilation(edge_a | edge_b)
    return not ((a ^ b) & ~near).any()


class TestSignedDistance:
    def test_half_plane(self, g64):
        X, _ = g64.mesh()
        d = signed_distance(RegionMask(g64, X <= 0.5))
        assert np.max(np.abs(d.values - (X - 0.5))) <= g64.spacing

    def test_disk(self, g64):
        ref = radial(g64, 0.25)
        d = signed_distance(ref.sublevel())
        band = np.abs(ref.values) <= 0.2
        assert np.max(np.abs(d.values - ref.values)[band]) <= 2 * g64.spacing

    def test_empty_and_full(self, g64):
        empty = RegionMask(g64, np.zeros(g64.shape, bool))
        assert np.all(signed_distance(empty, DistanceCap(0.7)).values == 0.7)
        assert np.all(signed_distance(RegionMask(g64, ~empty.inside), 0.7).values == -0.7)

    def test_cap_clamps(self, g64):
        d = signed_distance(radial(g64, 0.1).sublevel(), DistanceCap(0.2))
        assert d.values.max() == pytest.approx(0.2)

    def test_bad_cap(self):
        with pytest.raises(ValueError):
            DistanceCap(0.0)

    @given(st.integers(0, 2 ** 32 - 1))
    def test_sign_and_eikonal_bound(self, seed):
        g = Grid2.unit_square(24)
        rng = np.random.default_rng(seed)
        m = RegionMask(g, rng.random(g.shape) < 0.5)
        if m.is_empty or m.is_full:
            return
        d = signed_distance(m).values
        assert np.all((d < 0) == m.inside)
        # distance functions are 1-Lipschitz
        assert np.max(np.abs(np.diff(d, axis=0))) <= g.spacing * (1 + 1e-9)
        assert np.max(np.abs(np.diff(d, axis=1))) <= g.spacing * (1 + 1e-9)


class TestRedistance:
    def test_idempotent_on_straight_front(self, g64):
        d = ScalarField.from_function(g64, lambda x, y: (x - 0.5) * 0.6 + (y - 0.47) * 0.8)
        r = redistance(d)
        near = np.abs(d.values) <= 2 * g64.spacing
        # border cells whose foot point on the line lies outside the domain are excluded
        near[:3], near[-3:], near[:, :3], near[:, -3:] = False, False, False, False
        assert np.max(np.abs(r.values - d.values)[near]) <= 1e-6 * g64.spacing

    def test_idempotent_on_circle_up_to_chord_error(self):
        # the front is the polygonal zero contour, so curved fronts carry a
        # second-order chord error
        errs = []
        for n in (64, 128, 256):
            g = Grid2.unit_square(n)
            d = radial(g, 0.25)
            near = np.abs(d.values) <= 2 * g.spacing
            errs.append(np.max(np.abs(redistance(d).values - d.values)[near]))
            assert errs[-1] <= g.spacing ** 2 / 0.25
        assert errs[0] / errs[2] > 8

    def test_removes_scaling(self, g64):
        d = radial(g64, 0.25)
        r = redistance(ScalarField(g64, 3 * d.values))
        band = np.abs(d.values) <= 0.2
        assert np.max(np.abs(r.values - d.values)[band]) <= 2 * g64.spacing

    def test_two_circles_against_brute_force(self, g64):
        c1, c2 = (0.3, 0.5), (0.72, 0.5)
        r1, r2 = 0.15, 0.1
        X, Y = g64.mesh()
        exact = np.minimum(np.hypot(X - c1[0], Y - c1[1]) - r1, np.hypot(X - c2[0], Y - c2[1]) - r2)
        f = ScalarField(g64, exact * (1.5 + X))  # same zero set, distorted slope
        out = redistance(f)
        verts = extract_contour(f).vertices()
        pts = np.stack([X.ravel(), Y.ravel()], -1)
        brute = np.min(np.hypot(pts[:, None, 0] - verts[None, :, 0], pts[:, None, 1] - verts[None, :, 1]), axis=1)
        brute = np.where(exact.ravel() < 0, -brute, brute).reshape(g64.shape)
        band = np.abs(exact) <= 0.2
        assert np.all(np.sign(out.values) == np.sign(brute))
        assert np.max(np.abs(out.values - brute)[band]) <= 2 * g64.spacing

    def test_no_front_raises(self, g64):
        with pytest.raises(VanishedSetError):
            redistance(ScalarField.constant(g64, 1.0))

    def test_preserves_zero_crossing_of_straight_front(self, g64):
        f = ScalarField.from_function(g64, lambda x, y: 4.0 * (x - 0.503))
        X, _ = g64.mesh()
        assert np.allclose(redistance(f).values, X - 0.503, atol=1e-12)


class TestOpening:
    def test_disk_is_open(self, g64):
        m = radial(g64, 0.3).sublevel()
        assert within_one_cell(open_with_balls(m, 0.1).inside, m.inside)

    def test_spike_removed(self):
        g = Grid2.unit_square(24)
        ins = np.zeros(g.shape, bool)
        ins[6:18, 6:18] = True
        ins[11, 18:23] = True
        rho = 3 * g.spacing
        out = open_with_balls(RegionMask(g, ins), rho).inside
        assert np.array_equal(out, brute_opening(ins, 3.0))
        assert not out[11, 19:23].any()
        # only the square's corners are rounded
        assert np.count_nonzero(~out[6:18, 6:18]) <= 4 * 5
        assert out[7:17, 7:17].all()

    def test_one_cell_radius(self, g64):
        m = radial(g64, 0.2).sublevel()
        assert within_one_cell(open_with_balls(m, g64.spacing).inside, m.inside)

    def test_rejects_subcell_radius(self, g64):
        with pytest.raises(ValueError):
            open_with_balls(radial(g64, 0.2).sublevel(), 0.5 * g64.spacing)

    @given(st.integers(0, 2 ** 32 - 1), st.sampled_from([1.0, 1.5, 2.0, 2.5]))
    def test_matches_brute_force(self, seed, rho_cells):
        g = Grid2.unit_square(14)
        rng = np.random.default_rng(seed)
        ins = rng.random(g.shape) < 0.75
        out = open_with_balls(RegionMask(g, ins), rho_cells * g.spacing).inside
        assert np.array_equal(out, brute_opening(ins, rho_cells))
        # anti-extensive and idempotent
        assert not (out & ~ins).any()
        again = open_with_balls(RegionMask(g, out), rho_cells * g.spacing).inside
        assert np.array_equal(again, out)
