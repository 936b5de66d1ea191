"""
Implicit curvature-flow steps built on the obstacle TV-L2 solver.

One step maps a set ``E`` (through its signed distance ``d_E``) to the strict
sublevel ``{u < 0}`` of ``u = S_{h,v}(d_E)``, where ``v`` is the signed
distance of the obstacle region (or absent). Iterating with redistancing in
between gives the discrete evolution; the positive-curvature variants take
``v`` from the initial set (frozen) or from the previous set (refresh).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from enum import Enum
import numpy as np

from .analysis import StepDiagnostics, delta_ball_estimate, pinning_regime, step_diagnostics
from .distance import DistanceCap, redistance, signed_distance
from .grid import Contour, Grid2, RegionMask, ScalarField, extract_contour
from .obstacle_tv import DualField, ObstacleSpec, ProxParams, ProxResult, forcing_input, tv_prox

# cells with |u| below this fraction of the data scale are reported as ambiguous
AMBIGUOUS_REL = 1e-9
# minimal distance between the initial front and the grid border, in units of sqrt(h)
PADDING_SQRT_H = 10.0


class Variant(str, Enum):
    OBSTACLE = "obstacle"
    UNCONSTRAINED = "unconstrained"
    FORCING = "forcing"
    PCF_FROZEN = "pcf_frozen"
    PCF_REFRESH = "pcf_refresh"

    @property
    def is_pcf(self) -> bool:
        return self in (Variant.PCF_FROZEN, Variant.PCF_REFRESH)

    @property
    def needs_region(self) -> bool:
        return self in (Variant.OBSTACLE, Variant.FORCING)


class ValidationError(ValueError):
    """Inconsistent flow input (configuration, sets, grids)."""


class FlowStepError(RuntimeError):
    """A step failed; ``step`` is its index in the trajectory (first step is 1)."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message if step is None else f"step {step}: {message}")
        self.step = step


class ProxNotConverged(FlowStepError):
    def __init__(self, result: ProxResult, step: int | None = None):
        super().__init__(f"prox solve stopped after {result.iterations} iterations with gap {result.gap:.3e}", step)
        self.result = result


class PinningWarning(UserWarning):
    """Per-step motion is below grid resolution; fronts may not move."""


class TruncationWarning(UserWarning):
    """A front is closer to the grid border than the recommended padding."""


@dataclass(frozen=True)
class FlowConfig:
    """Time stepping settings.

    ``prox`` holds the solver settings; its ``h`` is overridden by ``h``.
    ``cap`` clamps distance fields (default: grid diameter).
    """

    h: float
    T: float
    variant: Variant = Variant.OBSTACLE
    prox: ProxParams | None = None
    cap: DistanceCap | None = None
    forcing_C: float | None = None
    diagnostics: bool = True
    warm_start: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "variant", Variant(self.variant))
        if not (self.h > 0 and self.h <= self.T * (1 + 1e-12)):
            raise ValidationError(f"need 0 < h <= T, got h={self.h}, T={self.T}")
        if self.variant is Variant.FORCING and not (self.forcing_C is not None and self.forcing_C > 0):
            raise ValidationError("forcing variant needs a positive forcing_C")

    @property
    def steps(self) -> int:
        """Number of steps up to ``T`` (integer part of ``T/h``)."""
        return int(math.floor(self.T / self.h + 1e-9))

    def prox_params(self) -> ProxParams:
        return (self.prox or ProxParams(h=self.h)).with_(h=self.h)

    def with_(self, **kw) -> FlowConfig:
        return replace(self, **kw)

    def to_dict(self) -> dict:
        p = self.prox_params()
        return {
            "h": self.h,
            "T": self.T,
            "variant": self.variant.value,
            "prox": dict(p.__dict__),
            "cap": None if self.cap is None else self.cap.cap,
            "forcing_C": self.forcing_C,
            "diagnostics": self.diagnostics,
            "warm_start": self.warm_start,
        }


@dataclass(frozen=True)
class StepResult:
    """New set, its signed distance and the solver certificate.

    Unpacks as ``mask, distance, prox``; ``contour`` is the new front.
    """

    mask: RegionMask
    distance: ScalarField
    prox: ProxResult
    contour: Contour = field(default_factory=Contour, repr=False)

    def __iter__(self):
        return iter((self.mask, self.distance, self.prox))


@dataclass(frozen=True)
class FlowState:
    step: int
    time: float
    mask: RegionMask
    distance: ScalarField
    diagnostics: StepDiagnostics
    ambiguous: np.ndarray = field(repr=False, default=None)  # type: ignore[assignment]


@dataclass(frozen=True)
class FlowTrajectory:
    h: float
    variant: Variant
    states: list[FlowState]
    extinction_step: int | None = None

    @property
    def times(self) -> list[float]:
        return [s.time for s in self.states]

    @property
    def masks(self) -> list[RegionMask]:
        return [s.mask for s in self.states]

    @property
    def diagnostics(self) -> list[StepDiagnostics]:
        return [s.diagnostics for s in self.states]

    @property
    def final(self) -> FlowState:
        return self.states[-1]

    def __len__(self) -> int:
        return len(self.states)


def ambiguous_cells(u: ScalarField, scale: float) -> np.ndarray:
    """Cells where the sign of ``u`` is below solver resolution."""
    return np.abs(u.values) < AMBIGUOUS_REL * scale


def _scale(f: ScalarField) -> float:
    return max(f.sup_norm(), 1.0)


def _cap(cfg: FlowConfig, grid: Grid2) -> float:
    return cfg.cap.cap if cfg.cap is not None else grid.diameter


def threshold(u: ScalarField, cap: float) -> tuple[RegionMask, ScalarField, Contour]:
    """Strict sublevel ``{u < 0}``, its signed distance and its front."""
    mask = u.sublevel(0.0)
    if mask.is_empty:
        return mask, ScalarField.constant(u.grid, cap), Contour()
    if mask.is_full:
        return mask, ScalarField.constant(u.grid, -cap), Contour()
    contour = extract_contour(u, 0.0)
    return mask, redistance(u, cap, contour=contour), contour


def step(d_E: ScalarField, obstacle: ObstacleSpec, cfg: FlowConfig, *, z0: DualField | None = None) -> StepResult:
    """One implicit step: threshold the obstacle prox of ``d_E`` at zero and redistance.

    An empty result mask is returned as is (extinction); the caller decides.

    Raises
    ------
    ProxNotConverged
        Carrying the partial solver result.
    """
    res = tv_prox(d_E, obstacle, cfg.prox_params(), z0=z0)
    if not res.converged:
        raise ProxNotConverged(res)
    mask, d, contour = threshold(res.u, _cap(cfg, d_E.grid))
    return StepResult(mask, d, res, contour)


def step_forcing(d_E: ScalarField, omega: RegionMask, cfg: FlowConfig, *, z0: DualField | None = None) -> StepResult:
    """Unconstrained step on ``d_E`` raised by ``forcing_C * h`` outside ``omega``."""
    if cfg.forcing_C is None:
        raise ValidationError("forcing step needs forcing_C")
    f = forcing_input(d_E, omega, cfg.forcing_C, cfg.h)
    res = tv_prox(f, ObstacleSpec.unconstrained(), cfg.prox_params(), z0=z0)
    if not res.converged:
        raise ProxNotConverged(res)
    mask, d, contour = threshold(res.u, _cap(cfg, d_E.grid))
    return StepResult(mask, d, res, contour)


def default_forcing_constant(omega: RegionMask | ScalarField, dim: int = 2) -> float:
    """``2 * dim / R`` with ``R`` the estimated exterior ball radius of the region.

    A region with no concave part (``R`` infinite) uses the grid diameter.
    """
    r = delta_ball_estimate(omega, side="exterior")
    if not math.isfinite(r):
        r = omega.grid.diameter
    return 2.0 * dim / r


def border_distance(mask: RegionMask) -> float:
    """Distance from the set to the outer edge of the grid."""
    if mask.is_empty:
        return math.inf
    g = mask.grid
    jj, ii = np.nonzero(mask.inside)
    cells = min(ii.min(), jj.min(), g.nx - 1 - ii.max(), g.ny - 1 - jj.max())
    return (cells + 0.5) * g.spacing


def _as_distance(x: RegionMask | ScalarField, cap: float) -> tuple[RegionMask, ScalarField]:
    if isinstance(x, ScalarField):
        return x.sublevel(0.0), x
    return x, signed_distance(x, cap)


def _check_grids(*fields) -> None:
    grids = {f.grid for f in fields if f is not None}
    if len(grids) > 1:
        raise ValidationError("inputs live on different grids")


def run(E0: RegionMask | ScalarField, omega: RegionMask | ScalarField | None, cfg: FlowConfig) -> FlowTrajectory:
    """Iterate the step ``floor(T/h)`` times, redistancing after each one.

    ``E0`` and ``omega`` may be given as masks or as signed distance fields
    (negative inside). ``omega`` is required for the obstacle and forcing
    variants and ignored by the others; the positive-curvature variants use
    ``E0`` as obstacle. Stops early once the set is empty or thinner than a
    cell, recording the step in ``extinction_step``.

    Raises
    ------
    ValidationError
        Missing obstacle, grid mismatch or ``E0`` not inside ``omega``.
    FlowStepError
        With the index of the failing step.
    """
    variant = cfg.variant
    grid = E0.grid
    cap = _cap(cfg, grid)
    mask0, d0 = _as_distance(E0, cap)
    d_omega = None
    omega_mask = None
    if variant.needs_region:
        if omega is None:
            raise ValidationError(f"variant {variant.value} needs an obstacle region")
        omega_mask, d_omega = _as_distance(omega, cap)
    elif variant.is_pcf:
        omega_mask, d_omega = mask0, d0
    _check_grids(d0, d_omega)
    if omega_mask is not None and not mask0.issubset(omega_mask):
        raise ValidationError("initial set not contained in obstacle")
    if mask0.is_empty:
        raise ValidationError("initial set is empty")

    sp = grid.spacing
    if pinning_regime(cfg.h, sp):
        warnings.warn(f"pinning regime: sqrt(2h) = {math.sqrt(2 * cfg.h):.4g} is below three cells "
                      f"({3 * sp:.4g})", PinningWarning, stacklevel=2)
    pad = border_distance(mask0)
    if pad < PADDING_SQRT_H * math.sqrt(cfg.h):
        warnings.warn(f"front is {pad:.4g} from the grid border, less than {PADDING_SQRT_H:g} sqrt(h) = "
                      f"{PADDING_SQRT_H * math.sqrt(cfg.h):.4g}", TruncationWarning, stacklevel=2)

    obstacle = ObstacleSpec.unconstrained()
    if variant in (Variant.OBSTACLE, Variant.PCF_FROZEN):
        obstacle = ObstacleSpec.constrained(d_omega)

    contour = extract_contour(d0, 0.0)
    diag_omega = d_omega if variant is not Variant.UNCONSTRAINED else None
    diag0 = step_diagnostics(0, 0.0, d0, mask0, contour=contour, with_delta=cfg.diagnostics)
    states = [FlowState(0, 0.0, mask0, d0, diag0, np.zeros(grid.shape, dtype=bool))]
    d, z = d0, None
    extinction = None
    for n in range(1, cfg.steps + 1):
        t = n * cfg.h
        if variant is Variant.PCF_REFRESH:
            obstacle = ObstacleSpec.constrained(d)
        try:
            if variant is Variant.FORCING:
                res = step_forcing(d, omega_mask, cfg, z0=z)
            else:
                res = step(d, obstacle, cfg, z0=z)
        except ProxNotConverged as exc:
            raise ProxNotConverged(exc.result, n) from exc
        except Exception as exc:
            raise FlowStepError(str(exc), n) from exc
        amb = ambiguous_cells(res.prox.u, _scale(d))
        new_contour = res.contour
        if cfg.diagnostics:
            diag = step_diagnostics(n, t, res.distance, res.mask, d_prev=d, h=cfg.h, prev_contour=contour,
                                    contour=new_contour, d_omega=diag_omega, prox=res.prox,
                                    ambiguous=int(amb.sum()))
        else:
            diag = step_diagnostics(n, t, res.distance, res.mask, contour=new_contour, prox=res.prox,
                                    ambiguous=int(amb.sum()), with_delta=False)
        states.append(FlowState(n, t, res.mask, res.distance, diag, amb))
        if res.mask.is_empty or float(np.max(-res.distance.values[res.mask.inside])) < sp:
            extinction = n
            break
        d, contour = res.distance, new_contour
        z = res.prox.z if cfg.warm_start else None
    return FlowTrajectory(cfg.h, variant, states, extinction)


def pcf_run(E0: RegionMask | ScalarField, cfg: FlowConfig) -> FlowTrajectory:
    """Positive-curvature flow: obstacle from ``E0`` (frozen) or from the previous set (refresh)."""
    if not cfg.variant.is_pcf:
        raise ValidationError(f"pcf_run needs a pcf variant, got {cfg.variant.value}")
    return run(E0, None, cfg)


def _extend(f: ScalarField, pad: int, cap: float) -> ScalarField:
    g = f.grid.enlarged(pad)
    v = np.pad(f.values, pad, mode="edge")
    ext = ScalarField(g, v)
    if (v < 0).any() and (v >= 0).any():
        v = redistance(ext, cap).values.copy()
        v[pad:-pad, pad:-pad] = f.values
        ext = ScalarField(g, v)
    return ext


def truncation_check(d_E: ScalarField, obstacle: ObstacleSpec, cfg: FlowConfig, growth: float = 0.25,
                     margin: float = 0.0) -> float:
    """Sup-difference of the prox on the original cells after enlarging the grid by ``growth``.

    Fields keep their values on the original cells; the new border cells are
    filled by edge replication followed by redistancing. Cells closer than
    ``margin`` to the original border are left out. With ``margin = 0`` the
    result is dominated by the flattening of the distance ramp at the zero-flux
    border, which is far from any front.
    """
    g = d_E.grid
    pad = max(1, int(math.ceil(growth * max(g.nx, g.ny) / 2)))
    cap = _cap(cfg, g) + pad * g.spacing
    base = tv_prox(d_E, obstacle, cfg.prox_params())
    big_obs = obstacle
    if obstacle.v is not None:
        big_obs = ObstacleSpec.constrained(_extend(obstacle.v, pad, cap))
    big = tv_prox(_extend(d_E, pad, cap), big_obs, cfg.prox_params())
    diff = np.abs(big.u.values[pad:-pad, pad:-pad] - base.u.values)
    k = int(math.ceil(margin / g.spacing - 1e-9))
    if k > 0:
        diff = diff[k:-k, k:-k]
    return float(np.max(diff)) if diff.size else 0.0
