"""
File formats: contour CSV, binary PGM masks, raw float32 fields, hashes.

Images are written with the top row at the largest ``y`` so they display
upright; readers undo the flip.
"""

from __future__ import annotations

import csv
import hashlib
import math
from os import PathLike
from typing import Any

import numpy as np

from .grid import Contour, Grid2, GridMismatchError, RegionMask, ScalarField

PGM_THRESHOLD = 128
FIELD_MAGIC = "MCFOBS-FIELD-F32LE"


class FormatError(ValueError):
    """A file does not follow the expected layout."""


def write_contour_csv(contour: Contour, path: str | PathLike) -> None:
    """One row per vertex: ``polyline_id, vertex_index, x, y``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["polyline_id", "vertex_index", "x", "y"])
        for pid, p in enumerate(contour.polylines):
            for k, (x, y) in enumerate(p):
                w.writerow([pid, k, repr(float(x)), repr(float(y))])


def read_contour_csv(path: str | PathLike) -> Contour:
    rows: dict[int, list[tuple[int, float, float]]] = {}
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if header != ["polyline_id", "vertex_index", "x", "y"]:
            raise FormatError(f"{path}: unexpected contour header {header}")
        for line in r:
            pid, k, x, y = int(line[0]), int(line[1]), float(line[2]), float(line[3])
            rows.setdefault(pid, []).append((k, x, y))
    polys = []
    for pid in sorted(rows):
        pts = sorted(rows[pid])
        polys.append(np.array([[x, y] for _, x, y in pts], dtype=float))
    return Contour(polys)


def write_pgm(mask: RegionMask, path: str | PathLike) -> None:
    """Binary P5 image, 255 inside and 0 outside."""
    g = mask.grid
    img = np.where(np.flipud(mask.inside), 255, 0).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{g.nx} {g.ny}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def _pgm_tokens(data: bytes, count: int) -> tuple[list[int], int]:
    """First ``count`` header integers after the magic and the offset of the pixel data."""
    out: list[int] = []
    pos = 2
    while len(out) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError("truncated PGM header")
        out.append(int(data[start:pos]))
    return out, pos + 1


def read_pgm(path: str | PathLike) -> np.ndarray:
    """Pixel array of an 8-bit P5 image, top row first."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] != b"P5":
        raise FormatError(f"{path}: not a binary PGM (P5) file")
    try:
        (w, hgt, maxval), off = _pgm_tokens(data, 3)
    except ValueError as exc:
        raise FormatError(f"{path}: bad PGM header") from exc
    if not 0 < maxval < 256:
        raise FormatError(f"{path}: only 8-bit PGM is supported, maxval {maxval}")
    pix = np.frombuffer(data, dtype=np.uint8, count=w * hgt, offset=off) if len(data) - off >= w * hgt else None
    if pix is None:
        raise FormatError(f"{path}: expected {w * hgt} pixels")
    return pix.reshape(hgt, w)


def read_pgm_mask(path: str | PathLike, grid: Grid2) -> RegionMask:
    """Mask from a PGM: pixels ``>= 128`` are inside."""
    img = read_pgm(path)
    if img.shape != grid.shape:
        raise GridMismatchError(f"{path}: image is {img.shape[1]}x{img.shape[0]}, grid is {grid.nx}x{grid.ny}")
    return RegionMask(grid, np.flipud(img >= PGM_THRESHOLD))


def write_field(field: ScalarField, path: str | PathLike) -> None:
    """Text header lines, then little-endian float32 values row by row from ``y`` minimal."""
    g = field.grid
    header = (f"{FIELD_MAGIC}\nnx {g.nx}\nny {g.ny}\nspacing {g.spacing!r}\n"
              f"origin {g.origin[0]!r} {g.origin[1]!r}\nend\n")
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(np.ascontiguousarray(field.values, dtype="<f4").tobytes())


def read_field(path: str | PathLike) -> ScalarField:
    with open(path, "rb") as fh:
        data = fh.read()
    lines = []
    pos = 0
    while True:
        nl = data.find(b"\n", pos)
        if nl < 0:
            raise FormatError(f"{path}: unterminated field header")
        line = data[pos:nl].decode("ascii")
        pos = nl + 1
        if line == "end":
            break
        lines.append(line)
    if not lines or lines[0] != FIELD_MAGIC:
        raise FormatError(f"{path}: not a field file")
    meta = {parts[0]: parts[1:] for parts in (ln.split() for ln in lines[1:])}
    try:
        grid = Grid2(int(meta["nx"][0]), int(meta["ny"][0]), float(meta["spacing"][0]),
                     (float(meta["origin"][0]), float(meta["origin"][1])))
    except (KeyError, IndexError) as exc:
        raise FormatError(f"{path}: incomplete field header") from exc
    vals = np.frombuffer(data, dtype="<f4", offset=pos)
    if vals.size != grid.size:
        raise FormatError(f"{path}: expected {grid.size} values, found {vals.size}")
    return ScalarField(grid, vals.reshape(grid.shape).astype(float))


def sha256_file(path: str | PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def step_basename(step: int, time: float) -> str:
    return f"step_{step}_t_{time:.8f}"


def json_safe(obj: Any) -> Any:
    """Replace non-finite floats by ``None`` and numpy scalars by Python ones."""
    if isinstance(obj, dict):
        return {str(k): json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_safe(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj
