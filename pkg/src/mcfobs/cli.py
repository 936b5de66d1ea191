"""
Command-line front end.

``mcfobs run CONFIG [--out DIR]`` runs one scenario and writes per-step
contours and masks, diagnostics and a manifest with content hashes.
``mcfobs verify SUITE [--quick]`` runs a verification suite.
``mcfobs compare A B [--assert-inclusion a-in-b]`` compares two runs.

Exit codes: 0 success, 1 failed assertion, 2 solver non-convergence,
3 invalid input.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import summary, write_diagnostics_csv
from .grid import (
    Contour,
    EmptyContourError,
    Grid2,
    GridMismatchError,
    RegionMask,
    extract_contour,
    hausdorff,
    symmetric_difference_area,
)
from .io import (
    json_safe,
    read_contour_csv,
    read_pgm_mask,
    sha256_file,
    step_basename,
    write_contour_csv,
    write_field,
    write_pgm,
)
from .obstacle_tv import ProxParams
from .scenarios import Scenario, ScenarioError
from .scheme import (
    FlowConfig,
    FlowStepError,
    PinningWarning,
    ProxNotConverged,
    TruncationWarning,
    ValidationError,
    Variant,
    default_forcing_constant,
    run,
)
from .suites import SUITES, thread_count

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_NOT_CONVERGED = 2
EXIT_INVALID = 3

MANIFEST_FORMAT = "mcfobs-run/1"


class InputError(ValueError):
    """Bad command-line input; mapped to the validation exit code."""


def _error(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _warn(msg: str) -> None:
    print(f"warning: {msg}", file=sys.stderr)


def load_scenario(path: Path) -> Scenario:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise InputError(f"config file {path} not found") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise InputError("config must be a JSON object")
    return Scenario.from_dict(raw)


def _resolve_paths(sc: Scenario, base: Path) -> Scenario:
    """Copy of ``sc`` with image paths taken relative to the config file."""
    out = Scenario.from_dict(sc.to_dict())
    for spec in (out.initial, out.obstacle):
        if isinstance(spec, dict) and "path" in spec:
            p = Path(spec["path"])
            spec["path"] = str(p if p.is_absolute() else base / p)
    return out


def flow_config(sc: Scenario, omega) -> FlowConfig:
    try:
        variant = Variant(sc.variant)
    except ValueError:
        raise ScenarioError(f"variant must be one of {', '.join(v.value for v in Variant)}, "
                            f"got {sc.variant!r}") from None
    C = sc.forcing_C
    if variant is Variant.FORCING and C is None:
        if omega is None:
            raise ValidationError("variant forcing needs an obstacle region")
        C = default_forcing_constant(omega.sublevel(0.0))
    try:
        prox = ProxParams(h=sc.h, tol=sc.tol, max_iter=sc.max_iter)
    except ValueError as exc:
        raise ScenarioError(str(exc)) from None
    return FlowConfig(h=sc.h, T=sc.T, variant=variant, prox=prox, forcing_C=C, diagnostics=sc.diagnostics)


def cmd_run(config: Path, out: Path | None) -> int:
    sc = load_scenario(config)
    grid, d0, d_omega = _resolve_paths(sc, config.parent).fields()
    cfg = flow_config(sc, d_omega)
    out = out if out is not None else Path("runs") / sc.name
    out.mkdir(parents=True, exist_ok=True)

    notes = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        traj = run(d0, d_omega, cfg)
    for w in caught:
        if issubclass(w.category, (PinningWarning, TruncationWarning)):
            notes.append(str(w.message))
            _warn(str(w.message))

    files: list[str] = []
    steps = []
    for s in traj.states:
        base = step_basename(s.step, s.time)
        contour = Contour() if s.mask.is_empty or s.mask.is_full else extract_contour(s.distance, 0.0)
        write_contour_csv(contour, out / f"{base}.csv")
        write_pgm(s.mask, out / f"{base}.pgm")
        entry = {"step": s.step, "time": s.time, "contour": f"{base}.csv", "mask": f"{base}.pgm",
                 "ambiguous_cells": int(np.count_nonzero(s.ambiguous))}
        files += [f"{base}.csv", f"{base}.pgm"]
        if sc.write_fields:
            write_field(s.distance, out / f"{base}.f32")
            entry["field"] = f"{base}.f32"
            files.append(f"{base}.f32")
        steps.append(entry)
    write_diagnostics_csv(traj.diagnostics, out / "diagnostics.csv")
    summ = summary(traj.diagnostics, traj.extinction_step)
    with open(out / "summary.json", "w") as fh:
        json.dump(json_safe(summ), fh, indent=2, sort_keys=True)
        fh.write("\n")
    files += ["diagnostics.csv", "summary.json"]

    manifest = {
        "format": MANIFEST_FORMAT,
        "version": __version__,
        "config": sc.to_dict(),
        "flow": cfg.to_dict(),
        "grid": grid.to_dict(),
        "steps": steps,
        "extinction_step": traj.extinction_step,
        "warnings": notes,
        "summary": summ,
        "files": {name: sha256_file(out / name) for name in sorted(files)},
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(json_safe(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"{sc.name}: {len(traj.states) - 1} steps to t={traj.final.time:g}, final area {traj.final.mask.area:.6g}"
          + (f", extinct at step {traj.extinction_step}" if traj.extinction_step is not None else "")
          + f"; manifest {out / 'manifest.json'}")
    return EXIT_OK


def cmd_verify(suite: str, quick: bool) -> int:
    if suite not in SUITES:
        raise InputError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    checks = SUITES[suite](quick)
    for c in checks:
        print(c.line())
    passed = sum(c.passed for c in checks)
    print(f"{suite}: {passed}/{len(checks)} checks passed")
    return EXIT_OK if passed == len(checks) else EXIT_FAILED


def _load_manifest(path: Path) -> dict:
    try:
        with open(path) as fh:
            m = json.load(fh)
    except FileNotFoundError:
        raise InputError(f"manifest {path} not found") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"manifest {path} is not valid JSON: {exc}") from None
    if m.get("format") != MANIFEST_FORMAT:
        raise InputError(f"{path} is not a run manifest")
    return m


def _step_hausdorff(a: Contour, b: Contour) -> float:
    if a.is_empty and b.is_empty:
        return 0.0
    try:
        return hausdorff(a, b)
    except EmptyContourError:
        return math.inf


def _schedule(m: dict) -> tuple[float, int]:
    h = float(m["flow"]["h"])
    return h, int(math.floor(float(m["flow"]["T"]) / h + 1e-9))


def _state(m: dict, base: Path, grid: Grid2, n: int) -> tuple[RegionMask, Contour]:
    """Mask and front at step ``n``; steps after extinction are empty."""
    if n < len(m["steps"]):
        s = m["steps"][n]
        return read_pgm_mask(base / s["mask"], grid), read_contour_csv(base / s["contour"])
    return RegionMask(grid, np.zeros(grid.shape, dtype=bool)), Contour()


def cmd_compare(path_a: Path, path_b: Path, inclusion: str | None) -> int:
    ma, mb = _load_manifest(path_a), _load_manifest(path_b)
    ga, gb = Grid2.from_dict(ma["grid"]), Grid2.from_dict(mb["grid"])
    if ga != gb:
        raise GridMismatchError(f"runs use different grids: {ma['grid']} vs {mb['grid']}")
    (ha, na), (hb, nb) = _schedule(ma), _schedule(mb)
    if na != nb or not math.isclose(ha, hb, rel_tol=1e-12):
        raise InputError(f"runs use different time grids: h={ha:g} x {na} steps vs h={hb:g} x {nb} steps")
    print("step,time,symmetric_difference_area,hausdorff" + (",included" if inclusion else ""))
    violations = 0
    for n in range(max(len(ma["steps"]), len(mb["steps"]))):
        mask_a, front_a = _state(ma, path_a.parent, ga, n)
        mask_b, front_b = _state(mb, path_b.parent, gb, n)
        area = symmetric_difference_area(mask_a, mask_b)
        hd = _step_hausdorff(front_a, front_b)
        row = f"{n},{n * ha!r},{area!r},{hd!r}"
        if inclusion:
            inner, outer = (mask_a, mask_b) if inclusion == "a-in-b" else (mask_b, mask_a)
            ok = inner.issubset(outer)
            violations += not ok
            row += f",{str(ok).lower()}"
        print(row)
    if inclusion:
        print(f"inclusion {inclusion}: {'holds' if not violations else f'fails at {violations} steps'}")
    return EXIT_FAILED if violations else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mcfobs", description="Curvature flow with obstacles by an implicit TV scheme.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario from a JSON config")
    r.add_argument("config", type=Path)
    r.add_argument("--out", type=Path, default=None, help="output directory (default runs/<name>)")
    v = sub.add_parser("verify", help="run a verification suite")
    v.add_argument("suite", help=", ".join(SUITES))
    v.add_argument("--quick", action="store_true", help="smaller samples and grids")
    c = sub.add_parser("compare", help="compare two runs step by step")
    c.add_argument("manifest_a", type=Path)
    c.add_argument("manifest_b", type=Path)
    c.add_argument("--assert-inclusion", choices=("a-in-b", "b-in-a"), default=None)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        thread_count()
        if args.command == "run":
            return cmd_run(args.config, args.out)
        if args.command == "verify":
            return cmd_verify(args.suite, args.quick)
        return cmd_compare(args.manifest_a, args.manifest_b, args.assert_inclusion)
    except ProxNotConverged as exc:
        _error(f"solver did not converge at step {exc.step}: gap {exc.result.gap:.3e} "
               f"after {exc.result.iterations} iterations")
        return EXIT_NOT_CONVERGED
    except FlowStepError as exc:
        _error(str(exc))
        return EXIT_INVALID
    except (InputError, ScenarioError, ValidationError, GridMismatchError, ValueError, OSError) as exc:
        _error(str(exc))
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
