"""
Diagnostics for flow trajectories.

Per-step measurements (area, perimeter, front motion, curvature residual of
the step's optimality condition, ball-condition radius), PDE residuals of the
evolving distance function, Hölder-in-time quotients and refinement studies.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from typing import TYPE_CHECKING, Callable

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .grid import (
    Contour,
    EmptyContourError,
    RegionMask,
    ScalarField,
    area_sublevel,
    curvature_field,
    extract_contour,
    hausdorff,
    sample_bilinear,
    symmetric_difference_area,
    tv_perimeter,
)
from .io import json_safe

if TYPE_CHECKING:
    from os import PathLike

    from numpy.typing import NDArray

    from .scheme import FlowTrajectory

# |grad d| below this (central differences) marks a kink of the distance function
RIDGE_GRADIENT = 0.7
# smooth distances have central-difference |grad d| = 1 - O((spacing kappa)^2);
# below this a PDE residual stencil is taken to straddle a kink
KINK_GRADIENT = 0.98
# arclength (cells) between the three points of a curvature circle
CURVATURE_ARC_CELLS = 3.0


@dataclass(frozen=True)
class StepDiagnostics:
    """Scalar measurements of one state of a trajectory.

    ``curvature_residual_*`` are ``|h kappa + d_prev|`` on the new front in
    cell units; ``hausdorff_motion`` is the Hausdorff distance between the
    previous and the new front. Both are zero at ``step == 0``.
    """

    step: int
    time: float
    area: float
    perimeter: float
    perimeter_tv: float
    hausdorff_motion: float = 0.0
    curvature_residual_median: float = 0.0
    curvature_residual_p95: float = 0.0
    curvature_samples: int = 0
    delta_ball: float = math.inf
    prox_gap: float = 0.0
    prox_iterations: int = 0
    prox_converged: bool = True
    ambiguous_cells: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# ball condition

def contour_curvature(contour: Contour, arc: float, bounds=None, margin: float = 0.0) -> NDArray:
    """Signed curvature of each polyline from circles through points ``arc`` apart.

    For every vertex the circle through the polyline points at arclength
    ``s - arc``, ``s`` and ``s + arc`` is used; positive values mean the
    inside (left side) is convex. Open polylines skip vertices closer than
    ``arc`` to an end, and with ``bounds`` vertices within ``margin`` of the
    box are skipped.
    """
    out = []
    for p, closed in zip(contour.polylines, contour.closed()):
        seg = np.hypot(*np.diff(p, axis=0).T)
        s = np.concatenate([[0.0], np.cumsum(seg)])
        length = s[-1]
        if length < 4 * arc:
            continue
        q = p[:-1] if closed else p
        sq = s[:len(q)]
        if closed:
            sm = np.mod(sq - arc, length)
            sp_ = np.mod(sq + arc, length)
            keep = np.ones(len(q), dtype=bool)
        else:
            sm, sp_ = sq - arc, sq + arc
            keep = (sm >= 0) & (sp_ <= length)
        if bounds is not None:
            xmin, xmax, ymin, ymax = bounds
            keep &= ((q[:, 0] >= xmin + margin) & (q[:, 0] <= xmax - margin)
                     & (q[:, 1] >= ymin + margin) & (q[:, 1] <= ymax - margin))
        if not keep.any():
            continue
        a = np.stack([np.interp(sm[keep], s, p[:, 0]), np.interp(sm[keep], s, p[:, 1])], -1)
        b = q[keep]
        c = np.stack([np.interp(sp_[keep], s, p[:, 0]), np.interp(sp_[keep], s, p[:, 1])], -1)
        u, v = b - a, c - b
        cross = u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
        den = np.hypot(*u.T) * np.hypot(*v.T) * np.hypot(*(c - a).T)
        out.append(np.where(den > 0, 2 * cross / np.where(den > 0, den, 1.0), 0.0))
    return np.concatenate(out) if out else np.zeros(0)


def _ridge_radius(d: ScalarField, side: str) -> float:
    g = d.grid
    v = d.values
    gy, gx = np.gradient(v, g.spacing)
    gn = np.hypot(gx, gy)
    inner = np.zeros(v.shape, dtype=bool)
    inner[2:-2, 2:-2] = True
    cap = np.max(np.abs(v))
    ridge = inner & (gn < RIDGE_GRADIENT) & (np.abs(v) < cap * (1 - 1e-9))
    if side == "interior":
        ridge &= v < 0
    elif side == "exterior":
        ridge &= v > 0
    return float(np.min(np.abs(v[ridge]))) if ridge.any() else math.inf


def _component_gap(contour: Contour) -> float:
    polys = contour.polylines
    best = math.inf
    for i in range(len(polys)):
        tree = cKDTree(polys[i])
        for j in range(i + 1, len(polys)):
            best = min(best, float(np.min(tree.query(polys[j])[0])))
    return best / 2


def _opening_preserves(inside: NDArray[np.bool_], r: float, slack: NDArray[np.bool_]) -> bool:
    """Whether the opening by a disc of ``r`` cells changes ``inside`` only on ``slack``."""
    pad = int(math.ceil(r)) + 2
    m = np.pad(inside, pad, mode="edge")
    r2 = r * r + 1e-9
    eroded = ndimage.distance_transform_edt(m) ** 2 > r2
    opened = ndimage.distance_transform_edt(~eroded) ** 2 <= r2
    lost = m & ~opened
    return not np.any(lost[pad:-pad, pad:-pad] & ~slack)


def _mask_ball_radius(inside: NDArray[np.bool_], spacing: float) -> float:
    """Largest disc radius (length units) whose opening leaves ``inside`` intact."""
    if not inside.any():
        raise EmptyContourError("empty set has no ball radius")
    if inside.all():
        return math.inf
    # cells touching the other phase may flip under any digital opening
    slack = ndimage.distance_transform_edt(inside) <= 1.5
    hi = float(max(inside.shape))
    if _opening_preserves(inside, hi, slack):
        return math.inf
    lo = 0.0
    while hi - lo > 0.25:
        mid = 0.5 * (lo + hi)
        if _opening_preserves(inside, mid, slack):
            lo = mid
        else:
            hi = mid
    return lo * spacing


def delta_ball_estimate(d: ScalarField | RegionMask, side: str = "both", contour: Contour | None = None) -> float:
    """Radius of the balls that touch the front from inside and outside.

    For a distance field this is the smallest of the inverse maximal
    curvature of the zero contour (see :func:`contour_curvature`), the distance from
    the front to detected kinks of ``d`` and half the smallest distance
    between distinct contour pieces. For a mask it is the largest disc
    radius whose opening leaves the set (``side="interior"``) or its
    complement (``"exterior"``) unchanged up to the cells next to the front.
    ``contour`` may pass in the zero contour of a field.

    Raises
    ------
    EmptyContourError
        If there is no front.
    """
    if side not in ("both", "interior", "exterior"):
        raise ValueError(f"side must be both, interior or exterior, got {side!r}")
    if isinstance(d, RegionMask):
        sp = d.grid.spacing
        if d.is_empty or d.is_full:
            raise EmptyContourError("mask has no front")
        r_in = _mask_ball_radius(d.inside, sp) if side != "exterior" else math.inf
        r_out = _mask_ball_radius(~d.inside, sp) if side != "interior" else math.inf
        return min(r_in, r_out)

    if contour is None:
        contour = extract_contour(d, 0.0)
    if contour.is_empty:
        raise EmptyContourError("field has no zero level set")
    g = d.grid
    kap = contour_curvature(contour, CURVATURE_ARC_CELLS * g.spacing, g.bounds, 2 * g.spacing)
    if side == "interior":
        kap = np.maximum(kap, 0.0)
    elif side == "exterior":
        kap = np.maximum(-kap, 0.0)
    kmax = float(np.max(np.abs(kap))) if len(kap) else 0.0
    est = 1.0 / kmax if kmax > 0 else math.inf
    est = min(est, _ridge_radius(d, side))
    if side != "interior":
        est = min(est, _component_gap(contour))
    return est


# ---------------------------------------------------------------------------
# per-step diagnostics

def curvature_residual(d_prev: ScalarField, d_new: ScalarField, h: float, contour: Contour | None = None,
                       d_omega: ScalarField | None = None, contact_cells: float = 3.0) -> NDArray:
    """``|h kappa + d_prev| / spacing`` on the new front away from the obstacle.

    ``kappa`` is the curvature of the level sets of ``d_new`` at the front
    vertices; samples closer than ``contact_cells`` to the obstacle boundary
    are dropped.
    """
    g = d_new.grid
    if contour is None:
        contour = extract_contour(d_new, 0.0)
    if contour.is_empty:
        return np.zeros(0)
    pts = np.concatenate([p[:-1] if c else p for p, c in zip(contour.polylines, contour.closed())])
    k, _ = curvature_field(d_new)
    with np.errstate(invalid="ignore"):
        # infinite samples make any stencil touching the border non-finite
        kap = sample_bilinear(np.nan_to_num(k, nan=np.inf), pts, g)
    keep = np.isfinite(kap)
    xmin, xmax, ymin, ymax = g.bounds
    m = 2 * g.spacing
    keep &= (pts[:, 0] >= xmin + m) & (pts[:, 0] <= xmax - m) & (pts[:, 1] >= ymin + m) & (pts[:, 1] <= ymax - m)
    if d_omega is not None:
        keep &= sample_bilinear(d_omega, pts) < -contact_cells * g.spacing
    dp = sample_bilinear(d_prev, pts[keep])
    return np.abs(h * kap[keep] + dp) / g.spacing


def step_diagnostics(step: int, time: float, d_new: ScalarField, mask: RegionMask, *,
                     d_prev: ScalarField | None = None, h: float | None = None,
                     prev_contour: Contour | None = None, contour: Contour | None = None,
                     d_omega: ScalarField | None = None, prox=None, ambiguous: int = 0,
                     with_delta: bool = True) -> StepDiagnostics:
    """Measure one state; motion and residual terms need ``d_prev`` and ``h``."""
    if contour is None:
        contour = extract_contour(d_new, 0.0) if not mask.is_empty else Contour()
    area = area_sublevel(d_new, 0.0) if not mask.is_empty else 0.0
    kw: dict = {}
    if d_prev is not None and h is not None and not contour.is_empty:
        if prev_contour is None:
            prev_contour = extract_contour(d_prev, 0.0)
        if not prev_contour.is_empty:
            kw["hausdorff_motion"] = hausdorff(prev_contour, contour)
        res = curvature_residual(d_prev, d_new, h, contour, d_omega)
        if len(res):
            kw["curvature_residual_median"] = float(np.median(res))
            kw["curvature_residual_p95"] = float(np.percentile(res, 95))
            kw["curvature_samples"] = int(len(res))
    if with_delta and not contour.is_empty:
        kw["delta_ball"] = delta_ball_estimate(d_new, contour=contour)
    if prox is not None:
        kw.update(prox_gap=float(prox.gap), prox_iterations=int(prox.iterations),
                  prox_converged=bool(prox.converged))
    return StepDiagnostics(step=step, time=time, area=area, perimeter=contour.length(),
                           perimeter_tv=tv_perimeter(mask), ambiguous_cells=int(ambiguous), **kw)


# ---------------------------------------------------------------------------
# PDE residuals

class BandTouchesBoundaryError(ValueError):
    """The residual band reaches the grid border, where differences are one-sided."""


def laplacian(v: NDArray, sp: float) -> NDArray:
    """Five-point Laplacian; NaN on the border cells."""
    out = np.full(v.shape, np.nan)
    out[1:-1, 1:-1] = (v[1:-1, 2:] + v[1:-1, :-2] + v[2:, 1:-1] + v[:-2, 1:-1] - 4 * v[1:-1, 1:-1]) / sp**2
    return out


@dataclass(frozen=True)
class ResidualRow:
    """Residual summary for the pair of states ``(step, step + 1)``.

    ``raw`` is ``(d_next - d)/h - lap d``; ``compensated`` replaces ``lap d``
    by ``lap d / (1 - d lap d)``, which removes the first-order-in-``d`` term
    for fronts that are locally circular. ``contact_median_rate`` is the
    median of ``|d_next - d| / h`` on the contact set. ``tolerance`` is
    ``max|d| * p95(|lap d|)^2`` on the band.
    """

    step: int
    time: float
    off_count: int
    off_median_raw: float
    off_median: float
    off_p95: float
    contact_count: int
    contact_min: float
    contact_max_laplacian: float
    contact_median_rate: float
    tolerance: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ResidualReport:
    rows: list[ResidualRow]

    @property
    def max_off_median(self) -> float:
        vals = [r.off_median for r in self.rows if r.off_count]
        return max(vals) if vals else 0.0

    def supersolution_holds(self) -> bool:
        """On every contact set: ``min r >= -tol`` and ``lap d <= tol``."""
        return all(r.contact_min >= -r.tolerance and r.contact_max_laplacian <= r.tolerance
                   for r in self.rows if r.contact_count)


def pde_residual(traj: FlowTrajectory, d_omega: ScalarField | None = None, band_cells: float = 5.0,
                 contact_cells: float = 2.0, allow_boundary: bool = False,
                 region: RegionMask | None = None) -> ResidualReport:
    """Time-discrete residual of ``d_t = lap d`` near the evolving front.

    Evaluated on ``|d_n| <= band_cells * spacing``; cells with
    ``|d_n - d_omega| < contact_cells * spacing`` form the contact set, where
    only the one-sided inequalities are expected. Cells whose stencil
    touches a kink of ``d_n`` (central-difference gradient below
    ``KINK_GRADIENT``) are left out, since the equation only holds where the
    distance is differentiable. ``region`` restricts the evaluation to a
    part of the grid. With ``allow_boundary``
    a band reaching the border is accepted and the border cells, which have
    no five-point stencil, are left out.

    Raises
    ------
    ValueError
        If the trajectory has fewer than three states.
    BandTouchesBoundaryError
        If the band reaches the outermost cells.
    """
    states = traj.states
    if len(states) < 3:
        raise ValueError("residuals need at least three states")
    g = states[0].distance.grid
    sp = g.spacing
    h = traj.h
    rows = []
    for n in range(len(states) - 1):
        a, b = states[n], states[n + 1]
        if a.mask.is_empty or b.mask.is_empty:
            break
        d = a.distance.values
        band = np.abs(d) <= band_cells * sp
        if region is not None:
            band &= region.inside
        edge = np.zeros(d.shape, dtype=bool)
        edge[0, :] = edge[-1, :] = edge[:, 0] = edge[:, -1] = True
        if np.any(band & edge):
            if not allow_boundary:
                raise BandTouchesBoundaryError(f"residual band reaches the grid border at step {n}")
            band &= ~edge
        gy, gx = np.gradient(d, sp)
        kink = ndimage.binary_dilation(np.hypot(gx, gy) < KINK_GRADIENT)
        band &= ~kink
        lap = laplacian(d, sp)
        dt = (b.distance.values - d) / h
        raw = dt - lap
        with np.errstate(divide="ignore", invalid="ignore"):
            comp = dt - lap / (1 - d * lap)
        contact = np.zeros(d.shape, dtype=bool)
        if d_omega is not None:
            contact = band & (np.abs(d - d_omega.values) < contact_cells * sp)
        off = band & ~contact & np.isfinite(comp)
        lap_band = np.abs(lap[band])
        tol = float(np.max(np.abs(d[band]))) * float(np.percentile(lap_band, 95)) ** 2 if band.any() else 0.0
        rows.append(ResidualRow(
            step=n,
            time=a.time,
            off_count=int(np.count_nonzero(off)),
            off_median_raw=float(np.median(np.abs(raw[off]))) if off.any() else 0.0,
            off_median=float(np.median(np.abs(comp[off]))) if off.any() else 0.0,
            off_p95=float(np.percentile(np.abs(comp[off]), 95)) if off.any() else 0.0,
            contact_count=int(np.count_nonzero(contact)),
            contact_min=float(np.min(raw[contact])) if contact.any() else 0.0,
            contact_max_laplacian=float(np.max(lap[contact])) if contact.any() else 0.0,
            contact_median_rate=float(np.median(np.abs(dt[contact]))) if contact.any() else 0.0,
            tolerance=tol,
        ))
    return ResidualReport(rows)


# ---------------------------------------------------------------------------
# time regularity and refinement

def holder_quotient(traj: FlowTrajectory, exponent: float = 1.0 / 3.0, window: float = 1.0) -> float:
    """Largest ``|E(t) xor E(s)| / |t - s|**exponent`` over state pairs with ``|t - s| <= window``."""
    states = traj.states
    if len(states) < 2:
        raise ValueError("need at least two states")
    best = 0.0
    for i in range(len(states)):
        for j in range(i + 1, len(states)):
            dt = abs(states[j].time - states[i].time)
            if dt > window:
                break
            best = max(best, symmetric_difference_area(states[i].mask, states[j].mask) / dt**exponent)
    return best


@dataclass(frozen=True)
class ConvergenceLevel:
    h: float
    spacing: float
    error: float
    hausdorff: float
    pinning: bool


@dataclass(frozen=True)
class ConvergenceReport:
    levels: list[ConvergenceLevel] = field(default_factory=list)

    def strictly_decreasing(self, key: str = "error") -> bool:
        vals = [getattr(lv, key) for lv in self.levels]
        return all(b < a for a, b in zip(vals, vals[1:]))

    @property
    def any_pinning(self) -> bool:
        return any(lv.pinning for lv in self.levels)

    def to_dict(self) -> dict:
        return {
            "levels": [asdict(lv) for lv in self.levels],
            "strictly_decreasing": self.strictly_decreasing(),
            "any_pinning": self.any_pinning,
        }


class StudyAborted(RuntimeError):
    def __init__(self, level: int, cause: Exception):
        super().__init__(f"refinement level {level} failed: {cause}")
        self.level = level
        self.cause = cause


def pinning_regime(h: float, spacing: float) -> bool:
    """Per-step motion ``sqrt(2h)`` below three cells."""
    return math.sqrt(2 * h) < 3 * spacing


def convergence_study(scenario: Callable[[float, float], tuple[float, float]], h_list, spacing_list) -> ConvergenceReport:
    """Run ``scenario(h, spacing) -> (error, hausdorff)`` on each level.

    Raises
    ------
    StudyAborted
        Carrying the index of the level that failed.
    """
    if len(h_list) != len(spacing_list):
        raise ValueError("h_list and spacing_list differ in length")
    levels = []
    for i, (h, sp) in enumerate(zip(h_list, spacing_list)):
        try:
            err, hd = scenario(h, sp)
        except Exception as exc:  # noqa: BLE001 - re-raised with the level attached
            raise StudyAborted(i, exc) from exc
        levels.append(ConvergenceLevel(h=h, spacing=sp, error=float(err), hausdorff=float(hd),
                                       pinning=pinning_regime(h, sp)))
    return ConvergenceReport(levels)


# ---------------------------------------------------------------------------
# reports

def write_diagnostics_csv(diags: list[StepDiagnostics], path: str | PathLike) -> None:
    names = list(StepDiagnostics.__dataclass_fields__)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for dg in diags:
            w.writerow([_fmt(getattr(dg, n)) for n in names])


def summary(diags: list[StepDiagnostics], extinction_step: int | None = None) -> dict:
    if not diags:
        return {"steps": 0}
    last = diags[-1]
    return {
        "steps": len(diags) - 1,
        "final_time": last.time,
        "final_area": last.area,
        "final_perimeter": last.perimeter,
        "max_prox_gap": max(d.prox_gap for d in diags),
        "all_converged": all(d.prox_converged for d in diags),
        "total_ambiguous_cells": sum(d.ambiguous_cells for d in diags),
        "max_curvature_residual_median": max(d.curvature_residual_median for d in diags),
        "extinction_step": extinction_step,
    }


def write_summary_json(diags: list[StepDiagnostics], path: str | PathLike, extinction_step: int | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(json_safe(summary(diags, extinction_step)), fh, indent=2, sort_keys=True)


def _fmt(x):
    if isinstance(x, float):
        return repr(x) if math.isfinite(x) else str(x)
    return x
