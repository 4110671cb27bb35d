"""Planar primitives: polylines, grids, exact distance fields, marching squares
and the Hausdorff metric.

Sets are always unions of polylines.  A point is a one-vertex polyline and is
stored internally as a zero-length segment, so every distance computation is a
point-to-segment projection.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np
from numba import njit
from scipy.spatial import cKDTree

from .errors import GeometryError

MAX_GRID_CELLS = 1 << 24


@dataclass(frozen=True, slots=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (np.isfinite(self.x) and np.isfinite(self.y)):
            raise GeometryError("non-finite", f"point ({self.x}, {self.y})")

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)

    def __array__(self, dtype=None, copy=None):
        return np.array([self.x, self.y], dtype=dtype or float)


def _as_xy(pts) -> np.ndarray:
    a = np.asarray(pts)
    if np.iscomplexobj(a):
        a = np.stack([a.real, a.imag], axis=-1)
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a.reshape(1, 2)
    return a


@dataclass(frozen=True, eq=False)
class Polyline:
    """Ordered vertices; ``closed`` makes the last vertex join the first."""

    vertices: np.ndarray
    closed: bool = False

    def __post_init__(self):
        v = _as_xy(self.vertices)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) == 0:
            raise GeometryError("degenerate", "polyline needs an (n, 2) vertex array")
        if not np.all(np.isfinite(v)):
            raise GeometryError("non-finite", "polyline vertex is not finite")
        if self.closed and len(v) > 1 and np.array_equal(v[0], v[-1]):
            v = v[:-1]
        if len(v) > 1 and np.any(np.all(v[1:] == v[:-1], axis=1)):
            raise GeometryError("degenerate", "consecutive vertices coincide")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "closed", bool(self.closed and len(v) > 2))

    @classmethod
    def from_points(cls, pts, closed: bool = False) -> "Polyline":
        """Build from raw points, dropping consecutive duplicates."""
        v = _as_xy(pts)
        if len(v) > 1:
            keep = np.ones(len(v), bool)
            keep[1:] = np.any(v[1:] != v[:-1], axis=1)
            v = v[keep]
        if closed and len(v) > 1 and np.array_equal(v[0], v[-1]):
            v = v[:-1]
        return cls(v, closed)

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def path(self) -> np.ndarray:
        """Vertices with the first repeated at the end for closed loops."""
        if self.closed:
            return np.vstack([self.vertices, self.vertices[:1]])
        return self.vertices

    def segments(self) -> np.ndarray:
        p = self.path
        if len(p) == 1:
            return np.stack([p, p], axis=1)
        return np.stack([p[:-1], p[1:]], axis=1)

    @property
    def length(self) -> float:
        p = self.path
        return float(np.hypot(*np.diff(p, axis=0).T).sum()) if len(p) > 1 else 0.0

    def as_complex(self) -> np.ndarray:
        return self.vertices[:, 0] + 1j * self.vertices[:, 1]


SetLike = Union[Polyline, np.ndarray, Sequence]


def as_segments(obj) -> np.ndarray:
    """Segments ``(m, 2, 2)`` of a polyline union.

    Accepts a Polyline, an iterable of Polylines, a segment array, or an
    array of points (real ``(n, 2)`` or complex ``(n,)``), which become
    degenerate segments.
    """
    if isinstance(obj, Polyline):
        return obj.segments()
    if isinstance(obj, np.ndarray):
        if obj.ndim == 3 and obj.shape[1:] == (2, 2):
            return obj.astype(float)
        p = _as_xy(obj).reshape(-1, 2)
        return np.stack([p, p], axis=1)
    parts = [as_segments(o) for o in obj]
    parts = [p for p in parts if len(p)]
    if not parts:
        return np.zeros((0, 2, 2))
    return np.concatenate(parts)


def split_segments(segs: np.ndarray, max_len: float) -> np.ndarray:
    """Subdivide segments so that no piece is longer than ``max_len``."""
    d = segs[:, 1] - segs[:, 0]
    L = np.hypot(d[:, 0], d[:, 1])
    k = np.maximum(1, np.ceil(L / max_len).astype(np.int64))
    if np.all(k == 1):
        return segs
    idx = np.repeat(np.arange(len(segs)), k)
    start = np.repeat(np.cumsum(k) - k, k)
    j = np.arange(len(idx)) - start
    kk = k[idx].astype(float)
    a = segs[idx, 0] + d[idx] * (j / kk)[:, None]
    b = segs[idx, 0] + d[idx] * ((j + 1) / kk)[:, None]
    b[j == k[idx] - 1] = segs[idx[j == k[idx] - 1], 1]
    return np.stack([a, b], axis=1)


def densify(points, max_len: float, closed: bool = False) -> np.ndarray:
    """Insert vertices so consecutive points are at most ``max_len`` apart."""
    p = _as_xy(points)
    if closed:
        p = np.vstack([p, p[:1]])
    if len(p) < 2:
        return p
    segs = split_segments(np.stack([p[:-1], p[1:]], axis=1), max_len)
    out = np.vstack([segs[:, 0], segs[-1:, 1]])
    return out[:-1] if closed else out


def point_segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray,
                           return_foot: bool = False):
    """Exact distance from points to segments (broadcasting on leading axes)."""
    ab = b - a
    den = np.einsum("...i,...i->...", ab, ab)
    num = np.einsum("...i,...i->...", p - a, ab)
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    foot = a + t[..., None] * ab
    d = np.hypot(*np.moveaxis(p - foot, -1, 0))
    if return_foot:
        return d, foot
    return d


@njit(cache=True)
def _seg_d2(px, py, ax, ay, bx, by):
    ux, uy = bx - ax, by - ay
    den = ux * ux + uy * uy
    t = 0.0
    if den > 0.0:
        t = ((px - ax) * ux + (py - ay) * uy) / den
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
    dx = px - (ax + t * ux)
    dy = py - (ay + t * uy)
    return dx * dx + dy * dy


@njit(cache=True)
def _box_d2(px, py, box, k):
    dx = max(box[k, 0] - px, 0.0, px - box[k, 2])
    dy = max(box[k, 1] - py, 0.0, py - box[k, 3])
    return dx * dx + dy * dy


@njit(cache=True)
def _bvh_nearest(P, S, box, n_inner, leaf, out_d, out_i):
    m = S.shape[0]
    stack = np.empty(128, np.int64)
    prev = -1
    for q in range(P.shape[0]):
        px, py = P[q, 0], P[q, 1]
        best, bi = np.inf, -1
        if prev >= 0:
            best = _seg_d2(px, py, S[prev, 0], S[prev, 1], S[prev, 2], S[prev, 3])
            bi = prev
        stack[0] = 0
        sp = 1
        while sp > 0:
            sp -= 1
            k = stack[sp]
            if _box_d2(px, py, box, k) > best:
                continue
            if k >= n_inner:
                s0 = (k - n_inner) * leaf
                for s in range(s0, min(s0 + leaf, m)):
                    d = _seg_d2(px, py, S[s, 0], S[s, 1], S[s, 2], S[s, 3])
                    if d < best:
                        best, bi = d, s
            else:
                c1, c2 = 2 * k + 1, 2 * k + 2
                d1 = _box_d2(px, py, box, c1)
                d2 = _box_d2(px, py, box, c2)
                if d1 > d2:
                    c1, c2 = c2, c1
                    d1, d2 = d2, d1
                if d2 <= best:
                    stack[sp] = c2
                    sp += 1
                if d1 <= best:
                    stack[sp] = c1
                    sp += 1
        out_d[q] = np.sqrt(best)
        out_i[q] = bi
        prev = bi


@njit(cache=True)
def _bvh_within(P, R, S, box, n_inner, leaf, count_only, offsets, out):
    m = S.shape[0]
    stack = np.empty(128, np.int64)
    for q in range(P.shape[0]):
        px, py = P[q, 0], P[q, 1]
        r2 = R[q] * R[q]
        pos = offsets[q]
        stack[0] = 0
        sp = 1
        while sp > 0:
            sp -= 1
            k = stack[sp]
            if _box_d2(px, py, box, k) > r2:
                continue
            if k >= n_inner:
                s0 = (k - n_inner) * leaf
                for s in range(s0, min(s0 + leaf, m)):
                    if _seg_d2(px, py, S[s, 0], S[s, 1], S[s, 2], S[s, 3]) <= r2:
                        if not count_only:
                            out[pos] = s
                        pos += 1
            else:
                stack[sp] = 2 * k + 1
                stack[sp + 1] = 2 * k + 2
                sp += 2
        if count_only:
            offsets[q + 1] = pos - offsets[q]


def _morton(xy: np.ndarray) -> np.ndarray:
    lo = xy.min(axis=0)
    span = max(float(np.ptp(xy, axis=0).max()), 1e-300)
    g = np.clip(((xy - lo) / span * 65535).astype(np.uint64), 0, 65535)

    def spread(v):
        v = (v | (v << np.uint64(8))) & np.uint64(0x00FF00FF)
        v = (v | (v << np.uint64(4))) & np.uint64(0x0F0F0F0F)
        v = (v | (v << np.uint64(2))) & np.uint64(0x33333333)
        v = (v | (v << np.uint64(1))) & np.uint64(0x55555555)
        return v

    return spread(g[:, 0]) | (spread(g[:, 1]) << np.uint64(1))


class SegmentIndex:
    """Exact nearest-segment queries.

    Segments are sorted along a Morton curve and grouped into a complete binary
    tree of bounding boxes; each query is a branch-and-bound descent seeded
    with the previous query's answer, so coherent query orders are cheap.
    """

    LEAF = 4

    def __init__(self, segments):
        segs = as_segments(segments)
        if len(segs) == 0:
            raise GeometryError("empty-set", "no segments to index")
        if not np.all(np.isfinite(segs)):
            raise GeometryError("non-finite", "segment coordinate is not finite")
        order = np.argsort(_morton(0.5 * (segs[:, 0] + segs[:, 1])), kind="stable")
        self.source = segs
        self.order = order
        self.flat = np.ascontiguousarray(segs[order].reshape(-1, 4))
        m = len(segs)
        n_leaves = 1 << max(0, int(np.ceil(np.log2(max(1, -(-m // self.LEAF))))))
        pad = n_leaves * self.LEAF - m
        lo = np.minimum(self.flat[:, :2], self.flat[:, 2:])
        hi = np.maximum(self.flat[:, :2], self.flat[:, 2:])
        lo = np.vstack([lo, np.full((pad, 2), np.inf)]).reshape(n_leaves, self.LEAF, 2).min(axis=1)
        hi = np.vstack([hi, np.full((pad, 2), -np.inf)]).reshape(n_leaves, self.LEAF, 2).max(axis=1)
        levels = [np.hstack([lo, hi])]
        while len(levels[-1]) > 1:
            c = levels[-1]
            levels.append(np.hstack([np.minimum(c[0::2, :2], c[1::2, :2]),
                                     np.maximum(c[0::2, 2:], c[1::2, 2:])]))
        self.box = np.ascontiguousarray(np.vstack(levels[::-1]))
        self.n_inner = n_leaves - 1

    def query(self, points, return_foot: bool = False, return_index: bool = False):
        """Distances (and optionally feet / source segment indices) for points."""
        P = np.ascontiguousarray(_as_xy(points).reshape(-1, 2))
        d = np.empty(len(P))
        i = np.empty(len(P), np.int64)
        if len(P):
            _bvh_nearest(P, self.flat, self.box, self.n_inner, self.LEAF, d, i)
        src = self.order[i]
        out = [d]
        if return_foot:
            s = self.source[src]
            out.append(point_segment_distance(P, s[:, 0], s[:, 1], return_foot=True)[1])
        if return_index:
            out.append(src)
        return out[0] if len(out) == 1 else tuple(out)


    def within(self, points, radii) -> tuple[np.ndarray, np.ndarray]:
        """Source segments within ``radii`` of each point, as CSR (offsets, ids)."""
        P = np.ascontiguousarray(_as_xy(points).reshape(-1, 2))
        R = np.broadcast_to(np.asarray(radii, float), (len(P),)).copy()
        counts = np.zeros(len(P) + 1, np.int64)
        dummy = np.empty(0, np.int64)
        _bvh_within(P, R, self.flat, self.box, self.n_inner, self.LEAF, True, counts, dummy)
        offsets = np.zeros(len(P) + 1, np.int64)
        offsets[1:] = np.cumsum(counts[1:])
        ids = np.empty(offsets[-1], np.int64)
        _bvh_within(P, R, self.flat, self.box, self.n_inner, self.LEAF, False, offsets.copy(), ids)
        return offsets, self.order[ids]


@dataclass(frozen=True, slots=True)
class Grid:
    """Cell-centred rectangular grid; ``origin`` is the lower-left corner."""

    origin: tuple[float, float]
    cell_size: float
    nx: int
    ny: int
    max_cells: int = MAX_GRID_CELLS

    def __post_init__(self):
        if not self.cell_size > 0:
            raise GeometryError("degenerate", "cell_size must be positive")
        if self.nx < 1 or self.ny < 1:
            raise GeometryError("degenerate", "grid needs at least one cell")
        if self.nx * self.ny > self.max_cells:
            raise GeometryError("memory-cap",
                                f"{self.nx}x{self.ny} exceeds {self.max_cells} cells")
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @classmethod
    def covering(cls, xmin: float, xmax: float, ymin: float, ymax: float,
                 n: int, margin: float = 0.0, max_cells: int = MAX_GRID_CELLS) -> "Grid":
        """Grid with ``n`` cells along the longer side of the padded box."""
        xmin, xmax, ymin, ymax = xmin - margin, xmax + margin, ymin - margin, ymax + margin
        h = max(xmax - xmin, ymax - ymin) / n
        nx = max(1, int(np.ceil((xmax - xmin) / h - 1e-9)))
        ny = max(1, int(np.ceil((ymax - ymin) / h - 1e-9)))
        cx, cy = 0.5 * (xmin + xmax), 0.5 * (ymin + ymax)
        return cls((cx - 0.5 * nx * h, cy - 0.5 * ny * h), h, nx, ny, max_cells)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.ny, self.nx)

    @property
    def xs(self) -> np.ndarray:
        return self.origin[0] + (np.arange(self.nx) + 0.5) * self.cell_size

    @property
    def ys(self) -> np.ndarray:
        return self.origin[1] + (np.arange(self.ny) + 0.5) * self.cell_size

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        x0, y0 = self.origin
        return (x0, x0 + self.nx * self.cell_size, y0, y0 + self.ny * self.cell_size)

    def centers(self) -> np.ndarray:
        X, Y = np.meshgrid(self.xs, self.ys)
        return np.stack([X.ravel(), Y.ravel()], axis=1)

    def index_of(self, pts) -> tuple[np.ndarray, np.ndarray]:
        """(row, col) of the cells containing ``pts`` (clipped to the grid)."""
        p = _as_xy(pts).reshape(-1, 2)
        i = np.floor((p[:, 0] - self.origin[0]) / self.cell_size).astype(int)
        j = np.floor((p[:, 1] - self.origin[1]) / self.cell_size).astype(int)
        return np.clip(j, 0, self.ny - 1), np.clip(i, 0, self.nx - 1)

    def refined(self, factor: int = 2) -> "Grid":
        return Grid(self.origin, self.cell_size / factor, self.nx * factor,
                    self.ny * factor, self.max_cells)


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise GeometryError("degenerate", f"field shape {v.shape} != grid {self.grid.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        if other.grid != self.grid:
            raise GeometryError("degenerate", "fields live on different grids")
        return ScalarField(self.grid, self.values - other.values)


@dataclass(frozen=True, eq=False)
class DistanceField(ScalarField):
    """Distances from cell centres to a closed set; values are >= 0."""

    def __post_init__(self):
        ScalarField.__post_init__(self)
        if np.any(self.values < 0):
            raise GeometryError("degenerate", "negative distance")

    def lipschitz_excess(self) -> float:
        """Largest violation of the 1-Lipschitz bound across grid neighbours."""
        v, h = self.values, self.grid.cell_size
        ex = 0.0
        if v.shape[1] > 1:
            ex = max(ex, float(np.abs(np.diff(v, axis=1)).max() - h))
        if v.shape[0] > 1:
            ex = max(ex, float(np.abs(np.diff(v, axis=0)).max() - h))
        return ex


def nearest_segments(segs, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Exact distance and nearest segment index for every cell centre."""
    index = segs if isinstance(segs, SegmentIndex) else SegmentIndex(segs)
    P = grid.centers().reshape(grid.ny, grid.nx, 2)
    P[1::2] = P[1::2, ::-1]  # serpentine order keeps consecutive queries adjacent
    d, i = index.query(P.reshape(-1, 2), return_index=True)
    d, i = d.reshape(grid.shape), i.reshape(grid.shape)
    d[1::2] = d[1::2, ::-1]
    i[1::2] = i[1::2, ::-1]
    return d, i


def distance_field(set_, grid: Grid, disks: Iterable[tuple[complex, float]] = ()) -> DistanceField:
    """Exact distance from each cell centre to a polyline union.

    ``disks`` optionally adds closed round disks ``(center, radius)`` to the set.
    """
    segs = as_segments(set_)
    disks = [(complex(c), float(r)) for c, r in disks]
    if len(segs) == 0 and not disks:
        raise GeometryError("empty-set", "distance to the empty set")
    out = np.full(grid.shape, np.inf)
    if len(segs):
        out = nearest_segments(segs, grid)[0]
    if disks:
        X, Y = np.meshgrid(grid.xs, grid.ys)
        for c, r in disks:
            out = np.minimum(out, np.maximum(0.0, np.hypot(X - c.real, Y - c.imag) - r))
    return DistanceField(grid, out)


def hausdorff_distance(a, b) -> float:
    """Hausdorff distance between two finite point samples."""
    A = _as_xy(a).reshape(-1, 2)
    B = _as_xy(b).reshape(-1, 2)
    if len(A) == 0 or len(B) == 0:
        raise GeometryError("empty-set", "Hausdorff distance needs non-empty samples")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
        raise GeometryError("non-finite", "sample contains non-finite points")
    dab = cKDTree(B).query(A)[0].max()
    dba = cKDTree(A).query(B)[0].max()
    return float(max(dab, dba))


# Marching squares.  Corners of square (j, i) in CCW order: c0 = (j, i),
# c1 = (j, i+1), c2 = (j+1, i+1), c3 = (j+1, i).  Edge k runs from corner k to
# corner k+1.  A crossing on edge k "starts" a segment when the CCW direction
# goes low -> high and "ends" one when it goes high -> low; this keeps the low
# side on the left of every output segment.

def _square_table():
    table = {}
    for case in range(16):
        low = [(case >> k) & 1 for k in range(4)]
        for center_low in (0, 1):
            starts = [k for k in range(4) if low[k] and not low[(k + 1) % 4]]
            ends = [k for k in range(4) if not low[k] and low[(k + 1) % 4]]
            pairs = []
            if len(starts) == 1:
                pairs = [(starts[0], ends[0])]
            elif len(starts) == 2:
                step = 1 if center_low else -1
                pairs = [(s, (s + step) % 4) for s in starts]
            table[case, center_low] = pairs
    return table


_SQUARE_TABLE = _square_table()


def extract_isocontour(field_: ScalarField, level: float = 0.0) -> list[Polyline]:
    """Marching-squares level set of a grid field with the nodes at cell centres.

    Saddles are resolved by the bilinear value at the square centre.  Output
    polylines keep values below ``level`` on their left.
    """
    v = np.asarray(field_.values, dtype=float)
    g = field_.grid
    ny, nx = v.shape
    if ny < 2 or nx < 2:
        return []
    low = v < level
    xs, ys = g.xs, g.ys

    # crossing points on horizontal edges (j, i)-(j, i+1) and vertical (j, i)-(j+1, i)
    with np.errstate(invalid="ignore", divide="ignore"):
        th = (level - v[:, :-1]) / (v[:, 1:] - v[:, :-1])
        tv = (level - v[:-1, :]) / (v[1:, :] - v[:-1, :])
    hx = xs[None, :-1] + th * g.cell_size
    hy = np.broadcast_to(ys[:, None], th.shape)
    vx = np.broadcast_to(xs[None, :], tv.shape)
    vy = ys[:-1, None] + tv * g.cell_size
    nh = ny * (nx - 1)
    pts = np.concatenate([np.stack([hx.ravel(), hy.ravel()], 1),
                          np.stack([vx.ravel(), vy.ravel()], 1)])

    def hid(j, i):
        return j * (nx - 1) + i

    def vid(j, i):
        return nh + j * nx + i

    case = (low[:-1, :-1].astype(int) | (low[:-1, 1:] << 1)
            | (low[1:, 1:] << 2) | (low[1:, :-1] << 3))
    J, I = np.nonzero((case != 0) & (case != 15))
    cs = case[J, I]
    center = 0.25 * (v[J, I] + v[J, I + 1] + v[J + 1, I + 1] + v[J + 1, I])
    clow = (center < level).astype(int)
    edge_ids = np.stack([hid(J, I), vid(J, I + 1), hid(J + 1, I), vid(J, I)], axis=1)

    nxt: dict[int, int] = {}
    for r in range(len(J)):
        for s, e in _SQUARE_TABLE[int(cs[r]), int(clow[r])]:
            nxt[int(edge_ids[r, s])] = int(edge_ids[r, e])

    ends = set(nxt.values())
    out: list[Polyline] = []
    seen: set[int] = set()

    def walk(start):
        chain = [start]
        seen.add(start)
        cur = start
        while cur in nxt:
            cur = nxt[cur]
            if cur == start:
                return chain, True
            chain.append(cur)
            seen.add(cur)
        return chain, False

    for s in sorted(k for k in nxt if k not in ends):
        chain, closed = walk(s)
        _emit(out, pts[chain], closed)
    for s in sorted(nxt):
        if s not in seen:
            chain, closed = walk(s)
            _emit(out, pts[chain], closed)
    return out


def _emit(out: list, p: np.ndarray, closed: bool):
    pl = Polyline.from_points(p, closed=closed)
    if len(pl) >= 2:
        out.append(pl)


def segment_distance(p0, p1, q0, q1) -> np.ndarray:
    """Distance between segments p0p1 and q0q1 (vectorized; 0 when crossing)."""
    def cross(o, a, b):
        return (a[..., 0] - o[..., 0]) * (b[..., 1] - o[..., 1]) - \
               (a[..., 1] - o[..., 1]) * (b[..., 0] - o[..., 0])

    d1, d2 = cross(q0, q1, p0), cross(q0, q1, p1)
    d3, d4 = cross(p0, p1, q0), cross(p0, p1, q1)
    proper = (d1 * d2 < 0) & (d3 * d4 < 0)
    d = np.minimum.reduce([point_segment_distance(p0, q0, q1), point_segment_distance(p1, q0, q1),
                           point_segment_distance(q0, p0, p1), point_segment_distance(q1, p0, p1)])
    return np.where(proper, 0.0, d)


def close_segment_pairs(segs_a: np.ndarray, segs_b: np.ndarray | None = None,
                        tol: float = 0.0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Pairs (i, j) of segments within ``tol`` of each other.

    Candidate pairs come from an STRtree of buffered boxes; distances are exact.
    With ``segs_b`` omitted, pairs within ``segs_a`` are returned with i < j.
    """
    import shapely

    self_pairs = segs_b is None
    segs_b = segs_a if self_pairs else segs_b
    if len(segs_a) == 0 or len(segs_b) == 0:
        e = np.zeros(0, int)
        return e, e, np.zeros(0)

    def boxes(s):
        lo = s.min(axis=1) - tol
        hi = s.max(axis=1) + tol
        return shapely.box(lo[:, 0], lo[:, 1], hi[:, 0], hi[:, 1])

    tree = shapely.STRtree(boxes(segs_b))
    ia, ib = tree.query(boxes(segs_a), predicate="intersects")
    if self_pairs:
        keep = ia < ib
        ia, ib = ia[keep], ib[keep]
    d = segment_distance(segs_a[ia, 0], segs_a[ia, 1], segs_b[ib, 0], segs_b[ib, 1])
    keep = d <= tol
    return ia[keep], ib[keep], d[keep]


def points_in_polygon(points, polygon) -> np.ndarray:
    """Even-odd containment of points in a closed polygon (boundary excluded loosely)."""
    P = _as_xy(points).reshape(-1, 2)
    V = _as_xy(polygon.vertices if isinstance(polygon, Polyline) else polygon)
    x, y = P[:, 0:1], P[:, 1:2]
    x0, y0 = V[:, 0][None, :], V[:, 1][None, :]
    x1, y1 = np.roll(V[:, 0], -1)[None, :], np.roll(V[:, 1], -1)[None, :]
    straddle = (y0 > y) != (y1 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
    hits = straddle & (x < xint)
    return (hits.sum(axis=1) % 2) == 1


def polygon_area(vertices) -> float:
    V = _as_xy(vertices)
    x, y = V[:, 0], V[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def interior_point(vertices) -> np.ndarray:
    """A point strictly inside a simple polygon.

    Tries the centroid first, then midpoints of horizontal chords through the
    vertical middle of the polygon.
    """
    V = _as_xy(vertices)
    c = V.mean(axis=0)
    if points_in_polygon(c, V)[0]:
        return c
    ys = np.unique(V[:, 1])
    cand = 0.5 * (ys[:-1] + ys[1:]) if len(ys) > 1 else ys
    best, width = None, -1.0
    W = np.roll(V, -1, axis=0)
    for y in cand:
        s = (V[:, 1] > y) != (W[:, 1] > y)
        xi = np.sort(V[s, 0] + (y - V[s, 1]) * (W[s, 0] - V[s, 0]) / (W[s, 1] - V[s, 1]))
        for k in range(0, len(xi) - 1, 2):
            if xi[k + 1] - xi[k] > width:
                width = xi[k + 1] - xi[k]
                best = np.array([0.5 * (xi[k] + xi[k + 1]), y])
    if best is None:
        raise GeometryError("degenerate", "polygon has no interior")
    return best
