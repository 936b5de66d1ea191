"""
Curvature flow of sets constrained to an obstacle region.

Each time step solves an obstacle-constrained total-variation denoising
problem for the signed distance of the current set and keeps the strict
negative sublevel of the solution. Modules:

``grid``        grids, fields, masks, contours and sub-cell geometry
``distance``    signed distance construction and redistancing
``obstacle_tv`` the constrained TV-L2 solver with duality-gap certificates
``scheme``      time stepping and flow variants
``analysis``    per-step diagnostics, residuals and refinement studies
``scenarios``   preset geometries and run descriptions
``io``          file formats
``suites``      verification suites behind ``mcfobs verify``
"""

from __future__ import annotations

__version__ = "0.1.0"

from .grid import Contour, Grid2, RegionMask, ScalarField, extract_contour
from .distance import DistanceCap, redistance, signed_distance
from .obstacle_tv import DualField, ObstacleSpec, ProxParams, ProxResult, dual_gap, tv_prox
from .scheme import FlowConfig, FlowTrajectory, Variant, pcf_run, run, step, step_forcing

__all__ = [
    "Contour",
    "DistanceCap",
    "DualField",
    "FlowConfig",
    "FlowTrajectory",
    "Grid2",
    "ObstacleSpec",
    "ProxParams",
    "ProxResult",
    "RegionMask",
    "ScalarField",
    "Variant",
    "dual_gap",
    "extract_contour",
    "pcf_run",
    "redistance",
    "run",
    "signed_distance",
    "step",
    "step_forcing",
    "tv_prox",
]
