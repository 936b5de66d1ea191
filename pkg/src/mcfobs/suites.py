"""
Verification suites run by ``mcfobs verify``.

Each suite returns a list of :class:`Check` records with the measured values
and the pass/fail outcome against fixed thresholds. ``quick`` shrinks sample
counts and grids for smoke runs; the full settings are the reference ones.
"""

from __future__ import annotations

import math
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree

from .analysis import convergence_study, delta_ball_estimate, pinning_regime
from .grid import Contour, Grid2, RegionMask, ScalarField, circle_contour, extract_contour, hausdorff, sample_bilinear
from .obstacle_tv import ObstacleSpec, ProxParams, tv_prox
from .reference import admm_obstacle_tv, energy
from .scenarios import disk_sdf, preset
from .scheme import FlowConfig, FlowTrajectory, PinningWarning, Variant, default_forcing_constant, run, step

THREADS_ENV = "MCFOBS_THREADS"

# solver settings for the property checks: certified sup-norm accuracy
PROPERTY_H = 1e-4
PROPERTY_TOL = 1e-6


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str
    values: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def thread_count() -> int:
    """Worker count from ``MCFOBS_THREADS`` (default 1)."""
    raw = os.environ.get(THREADS_ENV, "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def parallel_map(fn: Callable, items) -> list:
    """``map`` over independent jobs, on up to ``MCFOBS_THREADS`` threads; order is kept."""
    items = list(items)
    n = min(thread_count(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def random_smooth(rng: np.random.Generator, grid: Grid2, amp: float = 1.0, modes: int = 4) -> np.ndarray:
    """Sum of a few random low-frequency cosine products."""
    X, Y = grid.mesh()
    out = np.zeros(grid.shape)
    for _ in range(modes):
        k = rng.integers(1, 5, 2)
        ph = rng.uniform(0, 2 * np.pi, 2)
        out += rng.normal() * np.cos(np.pi * k[0] * X + ph[0]) * np.cos(np.pi * k[1] * Y + ph[1])
    return amp * out / modes


def adjacent_bound(a: np.ndarray) -> float:
    """Largest difference between grid-adjacent values."""
    return float(max(np.max(np.abs(np.diff(a, axis=0))), np.max(np.abs(np.diff(a, axis=1)))))


def front_cells(mask: RegionMask) -> np.ndarray:
    """Cells with a 4-neighbour on the other side of the front."""
    m = mask.inside
    out = np.zeros_like(m)
    dx = m[:, 1:] != m[:, :-1]
    dy = m[1:, :] != m[:-1, :]
    out[:, 1:] |= dx
    out[:, :-1] |= dx
    out[1:, :] |= dy
    out[:-1, :] |= dy
    return out


def mean_radius(contour: Contour, center=(0.5, 0.5)) -> float:
    v = contour.vertices()
    return float(np.mean(np.hypot(v[:, 0] - center[0], v[:, 1] - center[1])))


def star_sdf(grid: Grid2, center, r0: float, amp: float, k: int, samples: int = 200_000) -> ScalarField:
    """Signed distance to the curve ``r = r0 (1 + amp cos(k theta))`` around ``center``.

    The sign comes from the polar inequality; the distance is taken to a
    dense sampling of the curve.
    """
    th = np.linspace(0.0, 2 * np.pi, samples, endpoint=False)
    r = r0 * (1 + amp * np.cos(k * th))
    curve = np.stack([center[0] + r * np.cos(th), center[1] + r * np.sin(th)], -1)
    X, Y = grid.mesh()
    dist = cKDTree(curve).query(np.stack([X.ravel(), Y.ravel()], -1))[0].reshape(grid.shape)
    rho = np.hypot(X - center[0], Y - center[1])
    phi = np.arctan2(Y - center[1], X - center[0])
    inside = rho < r0 * (1 + amp * np.cos(k * phi))
    return ScalarField(grid, np.where(inside, -dist, dist))


def _quiet_run(E0, omega, cfg: FlowConfig) -> FlowTrajectory:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PinningWarning)
        return run(E0, omega, cfg)


# ---------------------------------------------------------------------------
# prox_properties

def _ordered_pair(rng, grid):
    f2 = random_smooth(rng, grid)
    v2 = random_smooth(rng, grid) - 0.3
    f1 = f2 + np.abs(random_smooth(rng, grid, 0.3))
    v1 = v2 + np.abs(random_smooth(rng, grid, 0.3))
    return f1, v1, f2, v2


def check_monotone_and_bound(pairs: int = 100, n: int = 64, seed: int = 0) -> list[Check]:
    """Ordered random inputs give ordered outputs; outputs obey the sup bound."""
    grid = Grid2.unit_square(n)
    rng = np.random.default_rng(seed)
    params = ProxParams(h=PROPERTY_H, tol=PROPERTY_TOL, criterion="sup", max_iter=200_000)
    inputs = [_ordered_pair(rng, grid) for _ in range(pairs)]

    def solve(fv):
        f, v = fv
        return tv_prox(ScalarField(grid, f), ObstacleSpec.constrained(ScalarField(grid, v)), params)

    jobs = [(f1, v1) for f1, v1, _, _ in inputs] + [(f2, v2) for _, _, f2, v2 in inputs]
    res = parallel_map(solve, jobs)
    upper, lower = res[:pairs], res[pairs:]
    violations = []
    bound_excess = []
    converged = all(r.converged for r in res)
    for (f1, v1, f2, v2), r1, r2 in zip(inputs, upper, lower):
        scale = max(np.max(np.abs(f1)), np.max(np.abs(f2)), 1.0)
        violations.append(float(np.max(r2.u.values - r1.u.values)) / (PROPERTY_TOL * scale))
        for f, v, r in ((f1, v1, r1), (f2, v2, r2)):
            s = max(np.max(np.abs(f)), 1.0)
            limit = max(np.max(np.abs(f)), max(np.max(v), 0.0))
            bound_excess.append((float(np.max(np.abs(r.u.values))) - limit) / (PROPERTY_TOL * s))
    bad = sum(x > 2.0 for x in violations)
    worst = max(violations)
    mono = Check("prox monotonicity", converged and bad == 0,
                 f"{bad}/{pairs} ordered pairs violate the order by more than 2 tol scale "
                 f"(worst {worst:.3g} tol scale, h={PROPERTY_H:g}, {n}x{n})",
                 {"violations": bad, "pairs": pairs, "worst": worst, "converged": converged})
    over = sum(x > 1.0 for x in bound_excess)
    linf = Check("prox sup bound", converged and over == 0,
                 f"{over}/{2 * pairs} solves exceed max(|f|, v+) + tol scale "
                 f"(largest excess {max(bound_excess):.3g} tol scale)",
                 {"exceed": over, "solves": 2 * pairs, "worst": max(bound_excess), "converged": converged})
    return [mono, linf]


def check_lipschitz(samples: int = 20, n: int = 64, seed: int = 1) -> Check:
    """Adjacent differences of the output stay below those of the inputs."""
    grid = Grid2.unit_square(n)
    rng = np.random.default_rng(seed)
    params = ProxParams(h=PROPERTY_H, tol=PROPERTY_TOL, criterion="sup", max_iter=200_000)
    inputs = [(random_smooth(rng, grid), random_smooth(rng, grid) - 0.3) for _ in range(samples)]

    def solve(fv):
        f, v = fv
        return tv_prox(ScalarField(grid, f), ObstacleSpec.constrained(ScalarField(grid, v)), params)

    res = parallel_map(solve, inputs)
    excess = []
    for (f, v), r in zip(inputs, res):
        scale = max(np.max(np.abs(f)), 1.0)
        bound = max(adjacent_bound(f), adjacent_bound(v))
        excess.append((adjacent_bound(r.u.values) - bound) / (PROPERTY_TOL * scale))
    converged = all(r.converged for r in res)
    bad = sum(x > 3.0 for x in excess)
    return Check("prox adjacent-difference bound", converged and bad == 0,
                 f"{bad}/{samples} inputs exceed the input bound by more than 3 tol scale "
                 f"(largest excess {max(excess):.3g} tol scale)",
                 {"exceed": bad, "samples": samples, "worst": max(excess), "converged": converged})


def _bump_field(rng, grid, radius=0.1):
    """Random smooth data, constant outside a disc of ``radius`` at the centre.

    Twice the remaining margin exceeds the disc perimeter, so no level set
    of the solution gains by reaching the border.
    """
    X, Y = grid.mesh()
    w = np.clip(1 - ((X - 0.5) ** 2 + (Y - 0.5) ** 2) / radius**2, 0, None) ** 2
    return 0.2 + w * random_smooth(rng, grid)


def check_translation(samples: int = 4, n: int = 64, seed: int = 2, tol: float = 1e-5) -> Check:
    """Integer shifts of data kept away from the border shift the output.

    Data with flat margins converge slowly, so the certified tolerance here
    is ``tol`` rather than the property default.
    """
    grid = Grid2.unit_square(n)
    rng = np.random.default_rng(seed)
    params = ProxParams(h=PROPERTY_H, tol=tol, criterion="sup", max_iter=200_000)
    worst = 0.0
    converged = True
    for _ in range(samples):
        f = _bump_field(rng, grid)
        v = _bump_field(rng, grid) - 0.3
        sy, sx = (int(s) for s in rng.integers(-4, 5, 2))
        fs, vs = np.roll(f, (sy, sx), (0, 1)), np.roll(v, (sy, sx), (0, 1))
        a, b = parallel_map(
            lambda fv: tv_prox(ScalarField(grid, fv[0]), ObstacleSpec.constrained(ScalarField(grid, fv[1])), params),
            [(f, v), (fs, vs)])
        converged &= a.converged and b.converged
        scale = max(np.max(np.abs(f)), 1.0)
        worst = max(worst, float(np.max(np.abs(np.roll(a.u.values, (sy, sx), (0, 1)) - b.u.values))) / (tol * scale))
    return Check("prox translation equivariance", converged and worst <= 2.0,
                 f"largest mismatch after shifting {worst:.3g} tol scale (tol {tol:g})",
                 {"worst": worst, "converged": converged})


def check_deep_obstacle(samples: int = 4, n: int = 64, seed: int = 3) -> Check:
    """An obstacle below ``-sup|f| - 1`` leaves the solution unchanged."""
    grid = Grid2.unit_square(n)
    rng = np.random.default_rng(seed)
    params = ProxParams(h=PROPERTY_H, tol=PROPERTY_TOL, criterion="sup", max_iter=200_000)
    worst = 0.0
    for _ in range(samples):
        f = ScalarField(grid, random_smooth(rng, grid))
        deep = ScalarField.constant(grid, -f.sup_norm() - 1.0)
        a = tv_prox(f, ObstacleSpec.unconstrained(), params)
        b = tv_prox(f, ObstacleSpec.constrained(deep), params)
        scale = max(f.sup_norm(), 1.0)
        worst = max(worst, float(np.max(np.abs(a.u.values - b.u.values))) / (PROPERTY_TOL * scale))
    return Check("deep obstacle equals unconstrained", worst <= 2.0,
                 f"largest difference {worst:.3g} tol scale", {"worst": worst})


def check_tiny_oracle(instances: int = 10, seed: int = 4, oracle_iters: int = 20_000) -> Check:
    """Energies on 8x8 grids against the multiplier-method reference."""
    grid = Grid2.unit_square(8)
    sp = grid.spacing
    rng = np.random.default_rng(seed)
    worst = 0.0
    converged = True
    for _ in range(instances):
        f = rng.uniform(-1, 1, grid.shape)
        v = f - rng.uniform(-0.3, 1.0, grid.shape)
        h = float(rng.uniform(0.005, 0.05))
        res = tv_prox(ScalarField(grid, f), ObstacleSpec.constrained(ScalarField(grid, v)),
                      ProxParams(h=h, tol=1e-6, criterion="energy"))
        converged &= res.converged
        ref = admm_obstacle_tv(f, v, h, sp, iters=oracle_iters)
        scale = max(np.max(np.abs(f)), 1.0)
        worst = max(worst, abs(energy(res.u.values, f, h, sp) - energy(ref, f, h, sp)) / scale)
    return Check("tiny-grid energy oracle", converged and worst <= 1e-6,
                 f"largest energy difference {worst:.3g} scale over {instances} instances",
                 {"worst": worst, "converged": converged})


def prox_properties(quick: bool = False) -> list[Check]:
    checks = check_monotone_and_bound(pairs=10 if quick else 100)
    checks.append(check_lipschitz(samples=5 if quick else 20))
    checks.append(check_translation(samples=1 if quick else 4))
    checks.append(check_deep_obstacle(samples=2 if quick else 4))
    checks.append(check_tiny_oracle(instances=3 if quick else 10))
    return checks


# ---------------------------------------------------------------------------
# scheme_properties

def check_one_step_radius(n: int = 256, r0: float = 0.3, h: float = 1e-3) -> Check:
    grid = Grid2.unit_square(n)
    res = step(disk_sdf(grid, (0.5, 0.5), r0), ObstacleSpec.unconstrained(),
               FlowConfig(h=h, T=h, variant=Variant.UNCONSTRAINED))
    expected = (r0 + math.sqrt(r0 * r0 - 4 * h)) / 2
    r = mean_radius(res.contour)
    tol = max(0.01 * expected, 2 * grid.spacing)
    return Check("one-step disk radius", abs(r - expected) <= tol,
                 f"radius {r:.6f}, expected {expected:.6f}, tolerance {tol:.4g}",
                 {"radius": r, "expected": expected, "tolerance": tol})


def check_obstacle_inclusion(n: int = 256, steps: int = 20) -> Check:
    sc = preset("dumbbell_obstacle")
    sc.grid = {"n": n}
    grid, d0, d_omega = sc.fields()
    cfg = FlowConfig(h=sc.h, T=steps * sc.h, variant=Variant.OBSTACLE, diagnostics=False)
    con, unc = parallel_map(lambda c: _quiet_run(d0, d_omega, c), [cfg, cfg.with_(variant=Variant.UNCONSTRAINED)])
    omega = d_omega.sublevel(0.0)
    not_sub = [int(np.count_nonzero(a.mask.inside & ~b.mask.inside)) for a, b in zip(con.states, unc.states)]
    outside = [int(np.count_nonzero(a.mask.inside & ~omega.inside)) for a in con.states]
    active = sum(int(np.count_nonzero(a.mask.inside != b.mask.inside)) for a, b in zip(con.states, unc.states))
    ok = not any(not_sub) and not any(outside)
    return Check("obstacle run inside unconstrained run and obstacle", ok,
                 f"cells outside the unconstrained set {sum(not_sub)}, outside the obstacle {sum(outside)} "
                 f"over {len(con.states) - 1} steps (constraint changed {active} cell states)",
                 {"not_subset": not_sub, "outside_obstacle": outside, "active_cells": active})


def check_distance_prox_bound(n: int = 128) -> Check:
    """Prox of a smooth set's distance stays within ``h / (delta - delta')`` of it near the front."""
    grid = Grid2.unit_square(n)
    d = star_sdf(grid, (0.5, 0.5), 0.25, 0.1, 3)
    delta = delta_ball_estimate(d)
    inner = delta / 2
    h = (delta - inner) ** 2 / 6
    res = tv_prox(d, ObstacleSpec.unconstrained(), ProxParams(h=h, max_iter=100_000))
    band = np.abs(d.values) <= inner
    err = float(np.max(np.abs(res.u.values - d.values)[band]))
    bound = h / (delta - inner) + 2 * grid.spacing
    return Check("prox of distance near the front", res.converged and err <= bound,
                 f"max |u - d| = {err:.4g} on |d| <= {inner:.4g}, bound {bound:.4g} (delta {delta:.4g}, h {h:.4g})",
                 {"error": err, "bound": bound, "delta": delta, "h": h, "converged": res.converged})


def pcf_pair(n: int = 256, steps: int = 20) -> tuple[FlowTrajectory, FlowTrajectory, ScalarField]:
    sc = preset("dumbbell_pcf")
    sc.grid = {"n": n}
    if n != 256:
        sc.h = sc.h * (256 / n) ** 2
    grid, d0, _ = sc.fields()
    cfg = FlowConfig(h=sc.h, T=steps * sc.h, variant=Variant.PCF_FROZEN, diagnostics=False)
    frozen, refresh = parallel_map(lambda c: _quiet_run(d0, None, c), [cfg, cfg.with_(variant=Variant.PCF_REFRESH)])
    return frozen, refresh, d0


def neck_and_caps(traj: FlowTrajectory, d0: ScalarField) -> tuple[float, float]:
    """Largest outward displacement over all steps and the smaller cap recession, in cells."""
    sp = d0.grid.spacing
    c0 = extract_contour(d0, 0.0).vertices()
    outward = 0.0
    for s in traj.states[1:]:
        if s.mask.is_empty:
            break
        pts = extract_contour(s.distance, 0.0).vertices()
        outward = max(outward, float(np.max(sample_bilinear(d0, pts))) / sp)
    last = extract_contour(traj.final.distance, 0.0).vertices()
    recession = min(last[:, 0].min() - c0[:, 0].min(), c0[:, 0].max() - last[:, 0].max()) / sp
    return outward, float(recession)


def check_pinned_neck(n: int = 256, steps: int = 50) -> Check:
    frozen, refresh, d0 = pcf_pair(n, steps)
    need = 5.0 * steps / 50
    vals = {}
    ok = True
    parts = []
    for name, tr in (("frozen", frozen), ("refresh", refresh)):
        out, rec = neck_and_caps(tr, d0)
        vals[name] = {"outward": out, "recession": rec}
        ok &= out <= 1.0 and rec >= need
        parts.append(f"{name}: outward {out:.3g} cells, caps recede {rec:.3g} cells")
    return Check("positive-curvature neck stays, caps recede", ok,
                 "; ".join(parts) + f" (need <= 1 and >= {need:g})", vals)


def check_convex_pcf_equals_unconstrained(n: int = 128, steps: int = 10) -> Check:
    """A disc with itself as obstacle shrinks exactly like the free disc."""
    grid = Grid2.unit_square(n)
    d0 = disk_sdf(grid, (0.5, 0.5), 0.3)
    h = 4e-4
    cfg = FlowConfig(h=h, T=steps * h, variant=Variant.PCF_FROZEN, diagnostics=False)
    a, b = parallel_map(lambda c: _quiet_run(d0, None, c), [cfg, cfg.with_(variant=Variant.UNCONSTRAINED)])
    diff = [int(np.count_nonzero(x.mask.inside != y.mask.inside)) for x, y in zip(a.states, b.states)]
    return Check("disc with itself as obstacle equals the free disc", not any(diff),
                 f"differing cells per step {diff}", {"diff": diff})


def scheme_properties(quick: bool = False) -> list[Check]:
    n = 128 if quick else 256
    return [
        check_one_step_radius(n=n),
        check_obstacle_inclusion(n=n, steps=10 if quick else 20),
        check_distance_prox_bound(n=64 if quick else 128),
        check_pinned_neck(n=n, steps=20 if quick else 50),
        check_convex_pcf_equals_unconstrained(steps=5 if quick else 10),
    ]


# ---------------------------------------------------------------------------
# disk_law

def disk_law(quick: bool = False) -> list[Check]:
    n, h = (128, 4e-4) if quick else (256, 1e-4)
    r0, T = 0.3, 0.02
    grid = Grid2.unit_square(n)
    t0 = time.perf_counter()
    tr = _quiet_run(disk_sdf(grid, (0.5, 0.5), r0), None, FlowConfig(h=h, T=T, variant=Variant.UNCONSTRAINED))
    secs = time.perf_counter() - t0
    expected = math.sqrt(r0 * r0 - 2 * T)
    contour = extract_contour(tr.final.distance, 0.0)
    r = mean_radius(contour)
    area = tr.final.diagnostics.area
    area_ref = math.pi * (r0 * r0 - 2 * T)
    rel = r / expected - 1
    rel_area = area / area_ref - 1
    conv = all(d.prox_converged for d in tr.diagnostics)
    return [
        Check("shrinking disc radius", conv and abs(rel) <= 0.02,
              f"mean radius {r:.6f} at t={tr.final.time:g}, law {expected:.6f}, relative error {rel:+.3%} "
              f"({n}x{n}, h={h:g}, {secs:.1f} s)",
              {"radius": r, "expected": expected, "relative_error": rel, "seconds": secs, "converged": conv}),
        Check("shrinking disc area", abs(rel_area) <= 0.03,
              f"area {area:.6f}, law {area_ref:.6f}, relative error {rel_area:+.3%}",
              {"area": area, "expected": area_ref, "relative_error": rel_area}),
    ]


# ---------------------------------------------------------------------------
# pcf_equality

def pcf_equality(quick: bool = False) -> list[Check]:
    n = 128 if quick else 256
    steps = 10 if quick else 20
    frozen, refresh, _ = pcf_pair(n, steps)
    diff = []
    ambiguous = 0
    fronts = 0
    for a, b in zip(frozen.states, refresh.states):
        amb = a.ambiguous | b.ambiguous
        diff.append(int(np.count_nonzero((a.mask.inside != b.mask.inside) & ~amb)))
        ambiguous += int(np.count_nonzero(amb))
        fronts += int(np.count_nonzero(front_cells(a.mask)))
    nested = {}
    for name, tr in (("frozen", frozen), ("refresh", refresh)):
        ms = [s.mask.inside for s in tr.states]
        nested[name] = all(not np.any(ms[i + 1] & ~ms[i]) for i in range(len(ms) - 1))
    return [
        Check("frozen and refreshed obstacles give the same sets", not any(diff),
              f"differing cells per step {diff}", {"diff": diff}),
        Check("ambiguous cells are rare", ambiguous < 1e-3 * fronts,
              f"{ambiguous} ambiguous cells over {fronts} front cells", {"ambiguous": ambiguous, "front": fronts}),
        Check("positive-curvature sets are nested", all(nested.values()),
              ", ".join(f"{k}: {'nested' if v else 'NOT nested'}" for k, v in nested.items()), nested),
    ]


# ---------------------------------------------------------------------------
# forcing_equivalence

def forcing_equivalence(quick: bool = False) -> list[Check]:
    steps = 5 if quick else 10
    sc = preset("disk_in_box")
    grid, d0, d_omega = sc.fields()
    omega = d_omega.sublevel(0.0)
    C = default_forcing_constant(omega)
    cfg = FlowConfig(h=sc.h, T=steps * sc.h, variant=Variant.OBSTACLE, diagnostics=False)
    con, forc = parallel_map(lambda c: _quiet_run(d0, d_omega, c),
                             [cfg, cfg.with_(variant=Variant.FORCING, forcing_C=C)])
    diff = [int(np.count_nonzero((a.mask.inside != b.mask.inside) & ~(a.ambiguous | b.ambiguous)))
            for a, b in zip(con.states, forc.states)]

    # negative control: an active obstacle and no forcing
    dc = preset("dumbbell_obstacle")
    dc.grid = {"n": 128}
    dc.h = 3e-4
    _, e0, e_omega = dc.fields()
    ccfg = FlowConfig(h=dc.h, T=steps * dc.h, variant=Variant.OBSTACLE, diagnostics=False)
    a, b = parallel_map(lambda c: _quiet_run(e0, e_omega, c),
                        [ccfg, ccfg.with_(variant=Variant.FORCING, forcing_C=1e-12)])
    control = sum(int(np.count_nonzero(x.mask.inside != y.mask.inside)) for x, y in zip(a.states, b.states))
    return [
        Check("forcing steps match obstacle steps", not any(diff),
              f"C = {C:.4g}; differing cells per step {diff}", {"C": C, "diff": diff}),
        Check("forcing-free control differs where the obstacle is active", control > 0,
              f"{control} differing cell states without forcing", {"control": control}),
    ]


# ---------------------------------------------------------------------------
# convergence

CONVERGENCE_LEVELS = ((1.6e-3, 1 / 64), (8e-4, 1 / 128), (4e-4, 1 / 256))
PINNING_CONTROL = (2e-5, 1 / 64)


def disk_errors(h: float, sp: float, T: float = 0.02, r0: float = 0.3) -> tuple[float, float]:
    """Radius and Hausdorff errors of the discrete disc at ``T`` against the exact circle."""
    grid = Grid2.unit_square(int(round(1 / sp)))
    tr = _quiet_run(disk_sdf(grid, (0.5, 0.5), r0), None,
                    FlowConfig(h=h, T=T, variant=Variant.UNCONSTRAINED, diagnostics=False))
    exact = math.sqrt(r0 * r0 - 2 * tr.final.time)
    c = extract_contour(tr.final.distance, 0.0)
    return abs(mean_radius(c) - exact), hausdorff(c, circle_contour((0.5, 0.5), exact, 2000))


def convergence(quick: bool = False) -> list[Check]:
    T = 0.01 if quick else 0.02
    levels = CONVERGENCE_LEVELS[:2] if quick else CONVERGENCE_LEVELS
    rep = convergence_study(lambda h, sp: disk_errors(h, sp, T), [lv[0] for lv in levels], [lv[1] for lv in levels])
    ctrl_h, ctrl_sp = PINNING_CONTROL
    ctrl = convergence_study(lambda h, sp: disk_errors(h, sp, 0.1 * T), [ctrl_h], [ctrl_sp])
    errs = ", ".join(f"{lv.error:.3g}" for lv in rep.levels)
    hds = ", ".join(f"{lv.hausdorff:.3g}" for lv in rep.levels)
    return [
        Check("disc errors decrease under refinement", rep.strictly_decreasing("error")
              and rep.strictly_decreasing("hausdorff") and not rep.any_pinning,
              f"radius errors [{errs}], Hausdorff [{hds}], pinning flagged: {rep.any_pinning}",
              rep.to_dict()),
        Check("pinning control is flagged", ctrl.any_pinning and pinning_regime(ctrl_h, ctrl_sp),
              f"h={ctrl_h:g} on {round(1 / ctrl_sp)}^2 flagged {ctrl.any_pinning}, "
              f"radius error {ctrl.levels[0].error:.3g}", ctrl.to_dict()),
    ]


SUITES: dict[str, Callable[[bool], list[Check]]] = {
    "prox_properties": prox_properties,
    "scheme_properties": scheme_properties,
    "disk_law": disk_law,
    "pcf_equality": pcf_equality,
    "forcing_equivalence": forcing_equivalence,
    "convergence": convergence,
}
