"""
Uniform 2D grids, sampled fields and sub-cell geometry.

Samples sit at cell centers. Arrays are indexed ``[j, i]`` with ``j`` along
``y`` (upwards) and ``i`` along ``x``, so ``values.shape == (ny, nx)``.

Sign convention used throughout the package: a field is negative inside the
set it describes, and curvature ``div(grad u / |grad u|)`` is positive on the
boundary of a convex set.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
from scipy.spatial import cKDTree

if TYPE_CHECKING:
    from collections.abc import Iterable

    from numpy.typing import ArrayLike, NDArray


class GridMismatchError(ValueError):
    """Two objects that must share a grid do not."""


class AmbiguousContourError(ValueError):
    """The level set is the whole grid (every sample equals the level)."""


class EmptyContourError(ValueError):
    """A distance between contours was requested with an empty contour."""


@dataclass(frozen=True)
class Grid2:
    """Uniform cell-centered grid.

    Parameters
    ----------
    nx, ny : int
        Number of cells along x and y.
    spacing : float
        Cell edge length.
    origin : tuple of float
        Coordinates of the center of cell ``(0, 0)``.
    """

    nx: int
    ny: int
    spacing: float
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self) -> None:
        if int(self.nx) != self.nx or int(self.ny) != self.ny:
            raise ValueError("nx and ny must be integers")
        if self.nx < 4 or self.ny < 4:
            raise ValueError(f"grid needs at least 4x4 cells, got {self.nx}x{self.ny}")
        if not (self.spacing > 0 and np.isfinite(self.spacing)):
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))
        object.__setattr__(self, "spacing", float(self.spacing))
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @classmethod
    def unit_square(cls, n: int) -> Grid2:
        """``n x n`` cells covering ``[0, 1]^2``."""
        sp = 1.0 / n
        return cls(n, n, sp, (0.5 * sp, 0.5 * sp))

    @classmethod
    def covering(cls, xmin: float, ymin: float, spacing: float, nx: int, ny: int) -> Grid2:
        """Grid whose lower-left domain corner is ``(xmin, ymin)``."""
        return cls(nx, ny, spacing, (xmin + 0.5 * spacing, ymin + 0.5 * spacing))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def size(self) -> int:
        return self.nx * self.ny

    @property
    def cell_area(self) -> float:
        return self.spacing * self.spacing

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        """Domain box ``(xmin, xmax, ymin, ymax)`` covered by the cells."""
        half = 0.5 * self.spacing
        x0, y0 = self.origin
        return (
            x0 - half,
            x0 + (self.nx - 1) * self.spacing + half,
            y0 - half,
            y0 + (self.ny - 1) * self.spacing + half,
        )

    @property
    def area(self) -> float:
        return self.nx * self.ny * self.cell_area

    @property
    def diameter(self) -> float:
        return float(np.hypot(self.nx * self.spacing, self.ny * self.spacing))

    def x(self) -> NDArray[np.float64]:
        return self.origin[0] + self.spacing * np.arange(self.nx, dtype=float)

    def y(self) -> NDArray[np.float64]:
        return self.origin[1] + self.spacing * np.arange(self.ny, dtype=float)

    def mesh(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Coordinate arrays ``X, Y`` of shape ``(ny, nx)``."""
        return np.meshgrid(self.x(), self.y())

    def to_dict(self) -> dict:
        return {"nx": self.nx, "ny": self.ny, "spacing": self.spacing, "origin": list(self.origin)}

    @classmethod
    def from_dict(cls, d: dict) -> Grid2:
        return cls(int(d["nx"]), int(d["ny"]), float(d["spacing"]), tuple(d["origin"]))

    def enlarged(self, pad: int) -> Grid2:
        """Same spacing, ``pad`` extra cells on every side."""
        sp = self.spacing
        return Grid2(self.nx + 2 * pad, self.ny + 2 * pad, sp,
                     (self.origin[0] - pad * sp, self.origin[1] - pad * sp))


def _frozen(a: NDArray) -> NDArray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ScalarField:
    """Real values sampled at the cell centers of ``grid``."""

    grid: Grid2
    values: NDArray[np.float64]

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=float, copy=True)
        if v.shape != self.grid.shape:
            if v.size == self.grid.size:
                v = v.reshape(self.grid.shape)
            else:
                raise ValueError(f"field has {v.size} values, grid needs {self.grid.size}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", _frozen(v))

    @classmethod
    def from_function(cls, grid: Grid2, fn) -> ScalarField:
        X, Y = grid.mesh()
        return cls(grid, fn(X, Y))

    @classmethod
    def constant(cls, grid: Grid2, c: float) -> ScalarField:
        return cls(grid, np.full(grid.shape, float(c)))

    def sublevel(self, level: float = 0.0) -> RegionMask:
        """Strict sublevel set ``{values < level}``."""
        return RegionMask(self.grid, self.values < level)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def __neg__(self) -> ScalarField:
        return ScalarField(self.grid, -self.values)


@dataclass(frozen=True)
class RegionMask:
    """Per-cell set membership on ``grid``."""

    grid: Grid2
    inside: NDArray[np.bool_]

    def __post_init__(self) -> None:
        m = np.array(self.inside, dtype=bool, copy=True)
        if m.shape != self.grid.shape:
            if m.size == self.grid.size:
                m = m.reshape(self.grid.shape)
            else:
                raise ValueError(f"mask has {m.size} cells, grid needs {self.grid.size}")
        object.__setattr__(self, "inside", _frozen(m))

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.inside))

    @property
    def area(self) -> float:
        return self.count * self.grid.cell_area

    @property
    def is_empty(self) -> bool:
        return not self.inside.any()

    @property
    def is_full(self) -> bool:
        return bool(self.inside.all())

    def issubset(self, other: RegionMask, ignore: NDArray[np.bool_] | None = None) -> bool:
        _check_same_grid(self.grid, other.grid)
        bad = self.inside & ~other.inside
        if ignore is not None:
            bad &= ~ignore
        return not bad.any()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RegionMask):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.inside, other.inside)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class Contour:
    """Polylines (``(k, 2)`` arrays of ``x, y``), inside of the set on the left.

    A closed polyline repeats its first vertex at the end.
    """

    polylines: list[NDArray[np.float64]] = field(default_factory=list)

    @property
    def is_empty(self) -> bool:
        return len(self.polylines) == 0

    def closed(self) -> list[bool]:
        return [len(p) > 2 and np.array_equal(p[0], p[-1]) for p in self.polylines]

    def vertices(self) -> NDArray[np.float64]:
        if not self.polylines:
            return np.zeros((0, 2))
        return np.concatenate(self.polylines, axis=0)

    def segments(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        """Start and end points of all segments."""
        if not self.polylines:
            return np.zeros((0, 2)), np.zeros((0, 2))
        a = np.concatenate([p[:-1] for p in self.polylines], axis=0)
        b = np.concatenate([p[1:] for p in self.polylines], axis=0)
        return a, b

    def length(self) -> float:
        return float(sum(np.sum(np.hypot(*np.diff(p, axis=0).T)) for p in self.polylines))

    def densified(self, max_segment: float) -> Contour:
        """Split segments so none is longer than ``max_segment``."""
        out = []
        for p in self.polylines:
            seg = np.diff(p, axis=0)
            k = np.maximum(1, np.ceil(np.hypot(*seg.T) / max_segment).astype(int))
            pts = [p[:1]]
            for a, d, m in zip(p[:-1], seg, k):
                t = (np.arange(1, m + 1) / m)[:, None]
                pts.append(a + t * d)
            out.append(np.concatenate(pts, axis=0))
        return Contour(out)


def _check_same_grid(a: Grid2, b: Grid2) -> None:
    if a != b:
        raise GridMismatchError(f"grid mismatch: {a} vs {b}")


# ---------------------------------------------------------------------------
# marching squares

def _edge_crossings(v: NDArray, level: float, sp: float, origin: tuple[float, float]):
    """Crossing points on horizontal and vertical sample edges.

    Returns boolean crossing masks and the crossing coordinates for the
    horizontal edges ``(j, i)-(j, i+1)`` and vertical edges ``(j, i)-(j+1, i)``.
    """
    ins = v < level
    x0, y0 = origin
    ny, nx = v.shape

    hc = ins[:, :-1] != ins[:, 1:]
    a, b = v[:, :-1], v[:, 1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        th = np.where(hc, (level - a) / (b - a), 0.0)
    jj, ii = np.mgrid[0:ny, 0:nx - 1]
    hx = x0 + (ii + th) * sp
    hy = y0 + jj * sp

    vc = ins[:-1, :] != ins[1:, :]
    a, b = v[:-1, :], v[1:, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        tv = np.where(vc, (level - a) / (b - a), 0.0)
    jj, ii = np.mgrid[0:ny - 1, 0:nx]
    vx = x0 + ii * sp
    vy = y0 + (jj + tv) * sp
    return ins, hc, np.stack([hx, hy], -1), vc, np.stack([vx, vy], -1)


def extract_contour(f: ScalarField, level: float = 0.0) -> Contour:
    """Piecewise-linear boundary of ``{f < level}`` (marching squares).

    Crossing points are linearly interpolated along the edges joining
    neighbouring samples. Saddle squares are resolved with the sign of the
    bilinear value at the square center. Polylines are oriented with the
    inside on the left; those that reach the last row or column of samples
    are open.

    Raises
    ------
    AmbiguousContourError
        If every sample equals ``level``.
    """
    v = f.values
    if np.all(v == level):
        raise AmbiguousContourError("every sample equals the contour level")
    g = f.grid
    ins, hc, hp, vc, vp = _edge_crossings(v, level, g.spacing, g.origin)
    ny, nx = v.shape
    nh = ny * (nx - 1)

    c0 = ins[:-1, :-1]
    c1 = ins[:-1, 1:]
    c2 = ins[1:, 1:]
    c3 = ins[1:, :-1]
    mixed = ~((c0 == c1) & (c1 == c2) & (c2 == c3))
    if not mixed.any():
        return Contour([])

    center = 0.25 * (v[:-1, :-1] + v[:-1, 1:] + v[1:, 1:] + v[1:, :-1]) < level
    starts: dict[int, int] = {}
    seg_a: list[int] = []
    seg_b: list[int] = []
    for j, i in zip(*np.nonzero(mixed)):
        corners = (c0[j, i], c1[j, i], c2[j, i], c3[j, i])
        # CCW edges: bottom, right, top, left; edge k runs corner k -> k+1
        eids = (j * (nx - 1) + i, nh + j * nx + i + 1, (j + 1) * (nx - 1) + i, nh + j * nx + i)
        cross = []
        for k in range(4):
            a, b = corners[k], corners[(k + 1) % 4]
            if a != b:
                cross.append((eids[k], a))  # a inside -> exit
        if len(cross) == 2:
            ex = cross[0][0] if cross[0][1] else cross[1][0]
            en = cross[1][0] if cross[0][1] else cross[0][0]
            pairs = [(ex, en)]
        else:
            pairs = []
            for k in range(4):
                if cross[k][1]:
                    nxt = cross[(k + 1) % 4] if center[j, i] else cross[(k - 1) % 4]
                    pairs.append((cross[k][0], nxt[0]))
        for ex, en in pairs:
            starts[ex] = len(seg_a)
            seg_a.append(ex)
            seg_b.append(en)

    pts_h = hp.reshape(-1, 2)
    pts_v = vp.reshape(-1, 2)

    def point(eid: int) -> NDArray:
        return pts_h[eid] if eid < nh else pts_v[eid - nh]

    ends = set(seg_b)
    used = np.zeros(len(seg_a), dtype=bool)
    polylines: list[NDArray] = []

    def walk(s: int) -> tuple[list[int], bool]:
        chain = [seg_a[s]]
        cur = s
        while True:
            used[cur] = True
            e = seg_b[cur]
            chain.append(e)
            nxt = starts.get(e)
            if nxt is None:
                return chain, False
            if used[nxt]:
                return chain, nxt == s
            cur = nxt

    order = [s for s in range(len(seg_a)) if seg_a[s] not in ends] + list(range(len(seg_a)))
    for s in order:
        if used[s]:
            continue
        chain, closed = walk(s)
        pts = np.array([point(e) for e in chain])
        keep = np.ones(len(pts), dtype=bool)
        keep[1:] = np.any(pts[1:] != pts[:-1], axis=1)
        pts = pts[keep]
        if closed and not np.array_equal(pts[0], pts[-1]):
            pts = np.vstack([pts, pts[:1]])
        if len(pts) >= 2 and not (len(pts) == 2 and np.array_equal(pts[0], pts[1])):
            polylines.append(pts)
    return Contour(polylines)


def _inside_fraction(a, b, c, d, level):
    """Area fraction of ``{interp < level}`` in unit squares, vectorized.

    ``a, b, c, d`` are the corner values bottom-left, bottom-right, top-right,
    top-left. The region is the polygon cut out by the linear edge
    interpolant, consistent with :func:`extract_contour`.
    """
    vals = (a, b, c, d)
    ins = [x < level for x in vals]
    corners = ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0))
    cpts = []
    for k in range(4):
        p, q = vals[k], vals[(k + 1) % 4]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(ins[k] != ins[(k + 1) % 4], (level - p) / (q - p), 0.0)
        (x0, y0), (x1, y1) = corners[k], corners[(k + 1) % 4]
        cpts.append((x0 + t * (x1 - x0), y0 + t * (y1 - y0), ins[k] != ins[(k + 1) % 4]))

    def polygon_area(flags):
        shape = np.shape(a)
        total = np.zeros(shape)
        have = np.zeros(shape, dtype=bool)
        fx = np.zeros(shape)
        fy = np.zeros(shape)
        lx = np.zeros(shape)
        ly = np.zeros(shape)
        seq = []
        for k in range(4):
            seq.append((np.full(shape, corners[k][0]), np.full(shape, corners[k][1]), flags[k]))
            seq.append(cpts[k])
        for px, py, inc in seq:
            add = inc & have
            total = np.where(add, total + lx * py - px * ly, total)
            first = inc & ~have
            fx = np.where(first, px, fx)
            fy = np.where(first, py, fy)
            lx = np.where(inc, px, lx)
            ly = np.where(inc, py, ly)
            have = have | inc
        total = np.where(have, total + lx * fy - fx * ly, total)
        return 0.5 * total

    area_in = polygon_area(ins)
    saddle = (ins[0] == ins[2]) & (ins[1] == ins[3]) & (ins[0] != ins[1])
    center_out = (0.25 * (a + b + c + d)) >= level
    flip = saddle & center_out
    if np.any(flip):
        area_out = polygon_area([~x for x in ins])
        area_in = np.where(flip, 1.0 - area_out, area_in)
    return area_in


def area_sublevel(f: ScalarField, level: float = 0.0) -> float:
    """Area of ``{f < level}`` with sub-cell accuracy.

    The samples are extended by constant values to the domain boundary so
    that the half cells along the border are counted; a field that is below
    ``level`` everywhere returns the full grid area.
    """
    g = f.grid
    p = np.pad(f.values, 1, mode="edge")
    frac = _inside_fraction(p[:-1, :-1], p[:-1, 1:], p[1:, 1:], p[1:, :-1], level)
    sp = g.spacing
    wx = np.full(g.nx + 1, sp)
    wx[0] = wx[-1] = 0.5 * sp
    wy = np.full(g.ny + 1, sp)
    wy[0] = wy[-1] = 0.5 * sp
    return float(wy @ frac @ wx)


def perimeter_sublevel(f: ScalarField, level: float = 0.0) -> float:
    """Length of the contour of ``{f < level}``."""
    return extract_contour(f, level).length()


def tv_perimeter(mask: RegionMask) -> float:
    """Discrete total variation of the indicator of ``mask``.

    Forward differences with a zero-flux border, the same discretization the
    proximal solver minimizes. Differs from contour length by a direction
    dependent factor (up to sqrt(2) on diagonal staircases).
    """
    u = mask.inside.astype(float)
    gx = np.zeros_like(u)
    gy = np.zeros_like(u)
    gx[:, :-1] = u[:, 1:] - u[:, :-1]
    gy[:-1, :] = u[1:, :] - u[:-1, :]
    return float(np.sum(np.hypot(gx, gy)) * mask.grid.spacing)


# ---------------------------------------------------------------------------
# interpolation and curvature

def sample_bilinear(f: ScalarField | NDArray, points: ArrayLike, grid: Grid2 | None = None) -> NDArray:
    """Bilinear interpolation of cell-centered values at ``points`` (k, 2).

    Points outside the hull of the sample centers are clamped onto it.
    """
    if isinstance(f, ScalarField):
        grid, v = f.grid, f.values
    else:
        v = np.asarray(f)
        assert grid is not None
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    fx = (pts[:, 0] - grid.origin[0]) / grid.spacing
    fy = (pts[:, 1] - grid.origin[1]) / grid.spacing
    i0 = np.clip(np.floor(fx).astype(int), 0, grid.nx - 2)
    j0 = np.clip(np.floor(fy).astype(int), 0, grid.ny - 2)
    tx = np.clip(fx - i0, 0.0, 1.0)
    ty = np.clip(fy - j0, 0.0, 1.0)
    return ((1 - tx) * (1 - ty) * v[j0, i0] + tx * (1 - ty) * v[j0, i0 + 1]
            + tx * ty * v[j0 + 1, i0 + 1] + (1 - tx) * ty * v[j0 + 1, i0])


def curvature_field(f: ScalarField) -> tuple[NDArray, NDArray]:
    """``div(grad f/|grad f|)`` and ``|grad f|`` by central differences.

    Border samples have no centered stencil and are NaN.
    """
    u = f.values
    sp = f.grid.spacing
    k = np.full(u.shape, np.nan)
    gnorm = np.full(u.shape, np.nan)
    c = u[1:-1, 1:-1]
    ux = (u[1:-1, 2:] - u[1:-1, :-2]) / (2 * sp)
    uy = (u[2:, 1:-1] - u[:-2, 1:-1]) / (2 * sp)
    uxx = (u[1:-1, 2:] - 2 * c + u[1:-1, :-2]) / sp**2
    uyy = (u[2:, 1:-1] - 2 * c + u[:-2, 1:-1]) / sp**2
    uxy = (u[2:, 2:] - u[:-2, 2:] - u[2:, :-2] + u[:-2, :-2]) / (4 * sp**2)
    g2 = ux * ux + uy * uy
    num = uxx * uy * uy - 2 * ux * uy * uxy + uyy * ux * ux
    with np.errstate(divide="ignore", invalid="ignore"):
        k[1:-1, 1:-1] = np.where(g2 > 0, num / g2**1.5, np.nan)
    gnorm[1:-1, 1:-1] = np.sqrt(g2)
    return k, gnorm


@dataclass(frozen=True)
class CurvatureSamples:
    points: NDArray[np.float64]
    kappa: NDArray[np.float64]
    skipped: int = 0
    excluded: int = 0

    def __len__(self) -> int:
        return len(self.kappa)


def curvature_on_contour(f: ScalarField, contour: Contour, *, grad_floor: float = 1e-6,
                         boundary_margin: float = 2.0) -> CurvatureSamples:
    """Curvature of the level sets of ``f`` at the contour vertices.

    Vertices within ``boundary_margin`` cells of the domain border are
    excluded; vertices whose stencil has a vanishing gradient are skipped.
    Both are counted in the result.
    """
    pts = contour.vertices()
    if len(contour.polylines):
        # drop the repeated closing vertex
        pts = np.concatenate([p[:-1] if c else p for p, c in zip(contour.polylines, contour.closed())])
    g = f.grid
    if len(pts) == 0:
        return CurvatureSamples(np.zeros((0, 2)), np.zeros(0))
    xmin, xmax, ymin, ymax = g.bounds
    m = boundary_margin * g.spacing
    keep = ((pts[:, 0] >= xmin + m) & (pts[:, 0] <= xmax - m)
            & (pts[:, 1] >= ymin + m) & (pts[:, 1] <= ymax - m))
    excluded = int(np.count_nonzero(~keep))
    pts = pts[keep]
    k, gn = curvature_field(f)
    fx = (pts[:, 0] - g.origin[0]) / g.spacing
    fy = (pts[:, 1] - g.origin[1]) / g.spacing
    i0 = np.clip(np.floor(fx).astype(int), 0, g.nx - 2)
    j0 = np.clip(np.floor(fy).astype(int), 0, g.ny - 2)
    stencil_g = np.minimum.reduce([gn[j0, i0], gn[j0, i0 + 1], gn[j0 + 1, i0], gn[j0 + 1, i0 + 1]])
    ok = np.isfinite(stencil_g) & (stencil_g > grad_floor)
    kap = sample_bilinear(np.nan_to_num(k), pts, g)
    ok &= np.isfinite(kap)
    return CurvatureSamples(pts[ok], kap[ok], skipped=int(np.count_nonzero(~ok)), excluded=excluded)


# ---------------------------------------------------------------------------
# distances between sets

def _brute_segment_distance(p: NDArray, a: NDArray, b: NDArray, chunk: int = 1024) -> NDArray:
    out = np.empty(len(p))
    d = b - a
    dd = np.einsum("ij,ij->i", d, d)
    dd = np.where(dd > 0, dd, 1.0)
    for s in range(0, len(p), chunk):
        q = p[s:s + chunk, None, :]
        t = np.clip(np.einsum("pkj,kj->pk", q - a[None], d) / dd, 0.0, 1.0)
        proj = a[None] + t[..., None] * d[None]
        out[s:s + chunk] = np.sqrt(np.min(np.sum((q - proj) ** 2, axis=-1), axis=1))
    return out


def _candidate_distance(p, a, b, tree, k):
    mid_d, nn = tree.query(p, k=k)
    sa, sb = a[nn], b[nn]
    d = sb - sa
    dd = np.einsum("pkj,pkj->pk", d, d)
    dd = np.where(dd > 0, dd, 1.0)
    q = p[:, None, :]
    t = np.clip(np.einsum("pkj,pkj->pk", q - sa, d) / dd, 0.0, 1.0)
    proj = sa + t[..., None] * d
    return np.sqrt(np.min(np.sum((q - proj) ** 2, axis=-1), axis=1)), mid_d[:, -1]


def point_segment_distance(p: NDArray, a: NDArray, b: NDArray) -> NDArray:
    """Distance from each point in ``p`` to the nearest of the segments ``a -> b``.

    Candidates are the segments with the closest midpoints. A segment is
    never closer than its midpoint distance minus half the longest segment,
    so the candidate set is widened until that bound certifies the minimum
    (falling back to all segments); the result is exact either way.
    """
    p = np.atleast_2d(np.asarray(p, dtype=float))
    out = np.full(len(p), np.inf)
    if len(a) == 0 or len(p) == 0:
        return out
    half = 0.5 * float(np.max(np.hypot(*(b - a).T)))
    tree = cKDTree(0.5 * (a + b))
    todo = np.arange(len(p))
    for k in (8, 32, 128):
        if k >= len(a):
            break
        dist, kth = _candidate_distance(p[todo], a, b, tree, k)
        sure = kth - half >= dist
        out[todo[sure]] = dist[sure]
        todo = todo[~sure]
        if len(todo) == 0:
            return out
    out[todo] = _brute_segment_distance(p[todo], a, b)
    return out


def directed_hausdorff(a: Contour, b: Contour) -> float:
    """``max`` over vertices of ``a`` of the distance to the segments of ``b``."""
    if a.is_empty or b.is_empty:
        raise EmptyContourError("Hausdorff distance of an empty contour is undefined")
    sa, sb = b.segments()
    return float(np.max(point_segment_distance(a.vertices(), sa, sb)))


def hausdorff(a: Contour, b: Contour, max_segment: float | None = None) -> float:
    """Symmetric Hausdorff distance between two contours.

    Vertices of each contour are measured against the segments of the other.
    With ``max_segment`` the contours are first densified, which bounds the
    error with respect to the exact curve distance by ``max_segment / 2``.
    """
    if a.is_empty or b.is_empty:
        raise EmptyContourError("Hausdorff distance of an empty contour is undefined")
    if max_segment is not None:
        a, b = a.densified(max_segment), b.densified(max_segment)
    return max(directed_hausdorff(a, b), directed_hausdorff(b, a))


def symmetric_difference_area(a: RegionMask, b: RegionMask) -> float:
    """Area of the cells in exactly one of the two masks."""
    _check_same_grid(a.grid, b.grid)
    return int(np.count_nonzero(a.inside ^ b.inside)) * a.grid.cell_area


def circle_contour(center: Iterable[float], radius: float, n: int = 720) -> Contour:
    """Closed CCW polygon approximating a circle, for reference comparisons."""
    cx, cy = center
    t = np.linspace(0.0, 2 * np.pi, n + 1)
    t[-1] = 0.0
    pts = np.stack([cx + radius * np.cos(t), cy + radius * np.sin(t)], -1)
    return Contour([pts])
