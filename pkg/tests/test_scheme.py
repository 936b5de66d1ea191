from __future__ import annotations

import math
import warnings

import numpy as np
import pytest

from mcfobs.grid import Grid2, RegionMask, ScalarField, extract_contour
from mcfobs.obstacle_tv import ObstacleSpec, ProxParams
from mcfobs.scenarios import box_sdf, disk_sdf, dumbbell_sdf, strip_sdf
from mcfobs.scheme import (
    FlowConfig,
    FlowStepError,
    PinningWarning,
    ProxNotConverged,
    TruncationWarning,
    ValidationError,
    Variant,
    ambiguous_cells,
    border_distance,
    default_forcing_constant,
    pcf_run,
    run,
    step,
    step_forcing,
    truncation_check,
)
from mcfobs.suites import mean_radius

FREE = ObstacleSpec.unconstrained()
pytestmark = pytest.mark.usefixtures("quiet")


def one_cell_apart(a: RegionMask, b: RegionMask) -> bool:
    from scipy import ndimage
    return not ((a.inside ^ b.inside) & ~ndimage.binary_dilation(a.inside ^ ndimage.binary_erosion(a.inside))).any()


class TestConfig:
    def test_step_count_is_floor(self):
        assert FlowConfig(h=3e-3, T=0.01).steps == 3
        assert FlowConfig(h=1e-3, T=0.02).steps == 20

    def test_h_larger_than_T(self):
        with pytest.raises(ValidationError):
            FlowConfig(h=0.1, T=0.01)

    def test_forcing_needs_constant(self):
        with pytest.raises(ValidationError):
            FlowConfig(h=1e-3, T=0.01, variant=Variant.FORCING)

    def test_to_dict_materializes_solver_settings(self):
        d = FlowConfig(h=1e-3, T=0.01).to_dict()
        assert d["prox"]["h"] == 1e-3 and d["prox"]["tol"] == ProxParams(h=1).tol


class TestStep:
    def test_one_step_radius(self, g128):
        r0, h = 0.3, 1e-3
        mask, d, res = step(disk_sdf(g128, (0.5, 0.5), r0), FREE, FlowConfig(h=h, T=h))
        expected = (r0 + math.sqrt(r0 * r0 - 4 * h)) / 2
        assert res.converged
        assert mean_radius(extract_contour(d)) == pytest.approx(expected, abs=2 * g128.spacing)

    def test_flat_strip_is_stationary(self, g64):
        d = strip_sdf(g64, 0.5, 0.2)
        mask, _, _ = step(d, FREE, FlowConfig(h=1e-3, T=1e-3))
        assert one_cell_apart(d.sublevel(), mask)

    @pytest.mark.parametrize("seed", range(3))
    def test_nested_sets_stay_nested(self, g64, seed):
        rng = np.random.default_rng(seed)
        c = rng.uniform(0.4, 0.6, size=2)
        big = disk_sdf(g64, c, 0.28).values + 0.03 * np.sin(rng.integers(2, 5) * np.arctan2(*(np.array(g64.mesh()) - c[:, None, None])[::-1]))
        small = big + rng.uniform(0.02, 0.06)
        cfg = FlowConfig(h=1e-3, T=1e-3)
        r_small = step(ScalarField(g64, small), FREE, cfg)
        r_big = step(ScalarField(g64, big), FREE, cfg)
        amb = np.abs(r_small.prox.u.values) < 1e-9
        assert r_small.mask.issubset(r_big.mask, ignore=amb)

    def test_forcing_on_full_region_is_unconstrained(self, g64):
        d = disk_sdf(g64, (0.5, 0.5), 0.3)
        cfg = FlowConfig(h=1e-3, T=1e-3, variant=Variant.FORCING, forcing_C=10.0)
        full = RegionMask(g64, np.ones(g64.shape, bool))
        a = step_forcing(d, full, cfg)
        b = step(d, FREE, cfg)
        assert a.mask == b.mask
        assert np.array_equal(a.prox.u.values, b.prox.u.values)

    def test_forcing_matches_constrained_in_generous_box(self, g128):
        d = disk_sdf(g128, (0.5, 0.5), 0.25)
        omega = box_sdf(g128, (0.2, 0.2), (0.8, 0.8))
        C = default_forcing_constant(omega.sublevel())
        cfg = FlowConfig(h=1e-3, T=1e-3, variant=Variant.FORCING, forcing_C=C)
        a = step_forcing(d, omega.sublevel(), cfg)
        b = step(d, ObstacleSpec.constrained(omega), cfg)
        amb = ambiguous_cells(a.prox.u, 1.0) | ambiguous_cells(b.prox.u, 1.0)
        assert not ((a.mask.inside ^ b.mask.inside) & ~amb).any()

    def test_vanishing_forcing_is_not_equivalent(self):
        # negative control: without forcing the set leaves a region it touches
        g = Grid2.unit_square(64)
        d = dumbbell_sdf(g)
        omega = d.sublevel()
        cfg = FlowConfig(h=1e-3, T=1e-3, variant=Variant.FORCING, forcing_C=1e-12)
        a = step_forcing(d, omega, cfg)
        b = step(d, ObstacleSpec.constrained(d), cfg)
        assert a.mask != b.mask

    def test_nonconvergence_raises(self, g64):
        cfg = FlowConfig(h=1e-3, T=1e-3, prox=ProxParams(h=1e-3, tol=1e-14, max_iter=3))
        with pytest.raises(ProxNotConverged):
            step(disk_sdf(g64, (0.5, 0.5), 0.3), FREE, cfg)


class TestRun:
    def test_disk_area_law(self, g128):
        T, h, r0 = 0.01, 4e-4, 0.3
        traj = run(disk_sdf(g128, (0.5, 0.5), r0), None, FlowConfig(h=h, T=T, variant=Variant.UNCONSTRAINED))
        assert len(traj) == 26
        assert traj.final.time == pytest.approx(T)
        assert traj.final.mask.area == pytest.approx(math.pi * (r0 * r0 - 2 * T), rel=0.03)
        areas = [m.area for m in traj.masks]
        assert all(b <= a for a, b in zip(areas, areas[1:]))

    def test_obstacle_equal_to_disk_changes_nothing(self, g64):
        d = disk_sdf(g64, (0.5, 0.5), 0.3)
        cfg = FlowConfig(h=1e-3, T=8e-3)
        a = run(d, d, cfg)
        b = run(d, None, cfg.with_(variant=Variant.UNCONSTRAINED))
        assert [m.inside.tolist() for m in a.masks] == [m.inside.tolist() for m in b.masks]

    def test_constrained_stays_in_region(self, g64):
        d = dumbbell_sdf(g64)
        omega = d.sublevel()
        traj = run(d, omega, FlowConfig(h=1e-3, T=1e-2))
        assert all(m.issubset(omega) for m in traj.masks)

    def test_accepts_masks(self, g64):
        d = disk_sdf(g64, (0.5, 0.5), 0.3)
        traj = run(d.sublevel(), None, FlowConfig(h=1e-3, T=2e-3, variant=Variant.UNCONSTRAINED))
        assert len(traj) == 3

    def test_initial_set_outside_region(self, g64):
        d = disk_sdf(g64, (0.5, 0.5), 0.3)
        omega = box_sdf(g64, (0.3, 0.3), (0.7, 0.7))
        with pytest.raises(ValidationError, match="initial set not contained in obstacle"):
            run(d, omega, FlowConfig(h=1e-3, T=1e-2))

    def test_region_required(self, g64):
        with pytest.raises(ValidationError):
            run(disk_sdf(g64, (0.5, 0.5), 0.3), None, FlowConfig(h=1e-3, T=1e-2))

    def test_grid_mismatch(self, g64):
        with pytest.raises(ValidationError):
            run(disk_sdf(g64, (0.5, 0.5), 0.3), box_sdf(Grid2.unit_square(32), (0, 0), (1, 1)),
                FlowConfig(h=1e-3, T=1e-2))

    def test_extinction_recorded(self, g64):
        traj = run(disk_sdf(g64, (0.5, 0.5), 0.1), None, FlowConfig(h=1e-3, T=0.02, variant=Variant.UNCONSTRAINED))
        assert traj.extinction_step is not None
        assert traj.extinction_step == len(traj) - 1 < 20

    def test_failing_step_is_named(self, g64):
        cfg = FlowConfig(h=1e-3, T=1e-2, variant=Variant.UNCONSTRAINED,
                         prox=ProxParams(h=1e-3, tol=1e-14, max_iter=3))
        with pytest.raises(ProxNotConverged) as info:
            run(disk_sdf(g64, (0.5, 0.5), 0.3), None, cfg)
        assert info.value.step == 1
        assert isinstance(info.value, FlowStepError)

    def test_pinning_warning(self, g64):
        with warnings.catch_warnings(record=True) as rec:
            warnings.simplefilter("always")
            run(disk_sdf(g64, (0.5, 0.5), 0.3), None, FlowConfig(h=1e-5, T=1e-5, variant=Variant.UNCONSTRAINED))
        msgs = [str(w.message) for w in rec if issubclass(w.category, PinningWarning)]
        assert msgs and "pinning regime" in msgs[0]

    def test_truncation_warning(self, g64):
        with pytest.warns(TruncationWarning):
            run(disk_sdf(g64, (0.5, 0.5), 0.4), None, FlowConfig(h=1e-3, T=1e-3, variant=Variant.UNCONSTRAINED))

    def test_deterministic(self, g64):
        cfg = FlowConfig(h=1e-3, T=5e-3)
        d = dumbbell_sdf(g64)
        a, b = run(d, d, cfg), run(d, d, cfg)
        assert all(np.array_equal(x.distance.values, y.distance.values) for x, y in zip(a.states, b.states))


class TestPcf:
    def test_requires_pcf_variant(self, g64):
        with pytest.raises(ValidationError):
            pcf_run(disk_sdf(g64, (0.5, 0.5), 0.3), FlowConfig(h=1e-3, T=1e-2))

    def test_first_step_equals_obstacle_step(self, g64):
        d = dumbbell_sdf(g64)
        cfg = FlowConfig(h=1e-3, T=1e-3)
        ref = step(d, ObstacleSpec.constrained(d), cfg).mask
        for v in (Variant.PCF_FROZEN, Variant.PCF_REFRESH):
            assert pcf_run(d, cfg.with_(variant=v)).masks[1] == ref

    def test_disk_follows_shrinking_law(self, g128):
        T, h, r0 = 0.01, 4e-4, 0.3
        d = disk_sdf(g128, (0.5, 0.5), r0)
        for v in (Variant.PCF_FROZEN, Variant.PCF_REFRESH):
            traj = pcf_run(d, FlowConfig(h=h, T=T, variant=v))
            r = mean_radius(extract_contour(traj.final.distance))
            assert r == pytest.approx(math.sqrt(r0 * r0 - 2 * T), rel=0.02)

    def test_nested_in_time(self, g64):
        traj = pcf_run(dumbbell_sdf(g64), FlowConfig(h=1e-3, T=1e-2, variant=Variant.PCF_REFRESH))
        assert all(b.issubset(a) for a, b in zip(traj.masks, traj.masks[1:]))


class TestHelpers:
    def test_border_distance(self, g64):
        ins = np.zeros(g64.shape, bool)
        ins[10:20, 5:30] = True
        assert border_distance(RegionMask(g64, ins)) == pytest.approx(5.5 * g64.spacing)
        assert border_distance(RegionMask(g64, np.zeros(g64.shape, bool))) == math.inf

    def test_default_forcing_constant_uses_exterior_radius(self, g128):
        omega = box_sdf(g128, (0.2, 0.2), (0.8, 0.8))
        # a convex box has no exterior-ball limit, so the grid diameter is used
        assert default_forcing_constant(omega) == pytest.approx(4 / g128.diameter)
        notch = disk_sdf(g128, (0.5, 0.5), 0.1)
        region = ScalarField(g128, np.maximum(omega.values, -notch.values))
        assert default_forcing_constant(region) == pytest.approx(4 / 0.1, rel=0.15)

    def test_truncation_check_away_from_border(self, g64):
        h, tol = 1e-3, 1e-6
        d = disk_sdf(g64, (0.5, 0.5), 0.2)
        cfg = FlowConfig(h=h, T=h, prox=ProxParams(h=h, criterion="sup", tol=tol))
        # both solves are certified to tol in sup norm
        assert truncation_check(d, FREE, cfg, margin=10 * math.sqrt(h)) <= 2 * tol
        # the zero-flux border flattens the distance ramp next to it
        assert truncation_check(d, FREE, cfg) > 1e-2
