"""
Geometric presets: initial sets and obstacle regions as signed distance fields.

Shapes are described by small JSON-compatible dicts, e.g.
``{"shape": "disk", "center": [0.5, 0.5], "radius": 0.3}`` and
``{"kind": "box", "lower": [0.1, 0.1], "upper": [0.9, 0.9]}``.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .distance import redistance, signed_distance
from .grid import Grid2, RegionMask, ScalarField
from .io import read_pgm_mask

INITIAL_SHAPES = ("disk", "strip", "two_disks", "dumbbell", "from_pgm")
OBSTACLE_KINDS = ("none", "box", "disk", "dilate_initial", "equals_initial", "from_pgm")


class ScenarioError(ValueError):
    """Invalid scenario description; the message names the offending field."""


def disk_sdf(grid: Grid2, center, radius: float) -> ScalarField:
    X, Y = grid.mesh()
    return ScalarField(grid, np.hypot(X - center[0], Y - center[1]) - radius)


def box_sdf(grid: Grid2, lower, upper) -> ScalarField:
    X, Y = grid.mesh()
    cx, cy = (lower[0] + upper[0]) / 2, (lower[1] + upper[1]) / 2
    hx, hy = (upper[0] - lower[0]) / 2, (upper[1] - lower[1]) / 2
    qx = np.abs(X - cx) - hx
    qy = np.abs(Y - cy) - hy
    outside = np.hypot(np.maximum(qx, 0), np.maximum(qy, 0))
    return ScalarField(grid, outside + np.minimum(np.maximum(qx, qy), 0))


def strip_sdf(grid: Grid2, center_y: float, half_width: float) -> ScalarField:
    _, Y = grid.mesh()
    return ScalarField(grid, np.abs(Y - center_y) - half_width)


def dumbbell_sdf(grid: Grid2, center=(0.5, 0.5), radius: float = 0.12, separation: float = 0.3,
                 neck: float = 0.04) -> ScalarField:
    """Two discs joined by a straight neck of width ``neck``."""
    cx, cy = center
    a = disk_sdf(grid, (cx - separation / 2, cy), radius).values
    b = disk_sdf(grid, (cx + separation / 2, cy), radius).values
    c = box_sdf(grid, (cx - separation / 2, cy - neck / 2), (cx + separation / 2, cy + neck / 2)).values
    return redistance(ScalarField(grid, np.minimum(np.minimum(a, b), c)))


def _get(spec: dict, key: str, where: str):
    if key not in spec:
        raise ScenarioError(f"{where}.{key} is required")
    return spec[key]


def initial_field(spec: dict, grid: Grid2) -> ScalarField:
    shape = spec.get("shape")
    if shape == "disk":
        return disk_sdf(grid, _get(spec, "center", "initial"), float(_get(spec, "radius", "initial")))
    if shape == "strip":
        return strip_sdf(grid, float(spec.get("center_y", 0.5)), float(_get(spec, "half_width", "initial")))
    if shape == "two_disks":
        r = float(_get(spec, "radius", "initial"))
        c1, c2 = _get(spec, "centers", "initial")
        a = disk_sdf(grid, c1, r).values
        b = disk_sdf(grid, c2, r).values
        return redistance(ScalarField(grid, np.minimum(a, b)))
    if shape == "dumbbell":
        return dumbbell_sdf(grid, tuple(spec.get("center", (0.5, 0.5))), float(spec.get("radius", 0.12)),
                            float(spec.get("separation", 0.3)), float(spec.get("neck", 0.04)))
    if shape == "from_pgm":
        return signed_distance(read_pgm_mask(_get(spec, "path", "initial"), grid))
    raise ScenarioError(f"initial.shape must be one of {INITIAL_SHAPES}, got {shape!r}")


def obstacle_field(spec: dict | None, grid: Grid2, d0: ScalarField) -> ScalarField | None:
    kind = "none" if spec is None else spec.get("kind", "none")
    if kind == "none":
        return None
    if kind == "box":
        return box_sdf(grid, _get(spec, "lower", "obstacle"), _get(spec, "upper", "obstacle"))
    if kind == "disk":
        return disk_sdf(grid, _get(spec, "center", "obstacle"), float(_get(spec, "radius", "obstacle")))
    if kind == "dilate_initial":
        rho = float(_get(spec, "rho", "obstacle"))
        if rho < 0:
            raise ScenarioError("obstacle.rho must be nonnegative")
        return redistance(ScalarField(grid, d0.values - rho))
    if kind == "equals_initial":
        return d0
    if kind == "from_pgm":
        return signed_distance(read_pgm_mask(_get(spec, "path", "obstacle"), grid))
    raise ScenarioError(f"obstacle.kind must be one of {OBSTACLE_KINDS}, got {kind!r}")


@dataclass
class Scenario:
    """A fully specified run: grid, initial set, obstacle, flow parameters."""

    name: str
    grid: dict
    initial: dict
    obstacle: dict = field(default_factory=lambda: {"kind": "none"})
    variant: str = "unconstrained"
    h: float = 1e-4
    T: float = 0.02
    tol: float = 1e-6
    max_iter: int = 20000
    forcing_C: float | None = None
    diagnostics: bool = True
    write_fields: bool = False

    def build_grid(self) -> Grid2:
        g = self.grid
        if "n" in g:
            return Grid2.unit_square(int(g["n"]))
        try:
            return Grid2(int(g["nx"]), int(g["ny"]), float(g["spacing"]), tuple(g.get("origin", (0.0, 0.0))))
        except KeyError as exc:
            raise ScenarioError(f"grid.{exc.args[0]} is required") from exc

    def fields(self) -> tuple[Grid2, ScalarField, ScalarField | None]:
        g = self.build_grid()
        d0 = initial_field(self.initial, g)
        return g, d0, obstacle_field(self.obstacle, g, d0)

    def to_dict(self) -> dict:
        return copy.deepcopy(self.__dict__)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Scenario:
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known - {"preset"}
        if unknown:
            raise ScenarioError(f"unknown config field(s): {', '.join(sorted(unknown))}")
        base = preset(d["preset"]).to_dict() if "preset" in d else {}
        base.update({k: v for k, v in d.items() if k != "preset"})
        for key in ("name", "grid", "initial"):
            if key not in base:
                raise ScenarioError(f"{key} is required")
        return cls(**base)


_DUMBBELL = {"shape": "dumbbell", "center": [0.5, 0.5], "radius": 0.12, "separation": 0.3, "neck": 0.04}

PRESETS: dict[str, dict] = {
    "disk": dict(name="disk", grid={"n": 256}, initial={"shape": "disk", "center": [0.5, 0.5], "radius": 0.3},
                 variant="unconstrained", h=1e-4, T=0.02),
    "disk_in_box": dict(name="disk_in_box", grid={"n": 128},
                        initial={"shape": "disk", "center": [0.5, 0.5], "radius": 0.25},
                        obstacle={"kind": "box", "lower": [0.2, 0.2], "upper": [0.8, 0.8]},
                        variant="obstacle", h=4e-4, T=0.004),
    "dumbbell_pcf": dict(name="dumbbell_pcf", grid={"n": 256}, initial=dict(_DUMBBELL),
                         obstacle={"kind": "equals_initial"}, variant="pcf_frozen", h=7.5e-5, T=0.0015),
    "dumbbell_obstacle": dict(name="dumbbell_obstacle", grid={"n": 256}, initial=dict(_DUMBBELL),
                              obstacle={"kind": "dilate_initial", "rho": 0.01}, variant="obstacle",
                              h=7.5e-5, T=0.0015),
    "strip": dict(name="strip", grid={"n": 128}, initial={"shape": "strip", "center_y": 0.5, "half_width": 0.2},
                  variant="unconstrained", h=4e-4, T=0.004),
}


def preset(name: str) -> Scenario:
    if name not in PRESETS:
        raise ScenarioError(f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}")
    return Scenario(**copy.deepcopy(PRESETS[name]))


def region(d: ScalarField | None) -> RegionMask | None:
    return None if d is None else d.sublevel(0.0)
