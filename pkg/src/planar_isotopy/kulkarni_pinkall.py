"""Skeleton, maximal disks, hulls and chords of a bounded planar domain.

The skeleton is read off the exact distance field: a cell is a ridge
candidate when the nearest boundary point of a neighbour explains the cell's
own distance badly (the distance function has a crease there).  Candidates
are confirmed by clustering boundary contacts and refined by Gauss-Newton on
the disk centre until every contact cluster is touched to 1e-6.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import GeometryError
from .hyperbolic import HyperbolicHull, hyperbolic_hull
from .planar import (Grid, Polyline, SegmentIndex, as_segments, close_segment_pairs,
                     point_segment_distance, points_in_polygon)

CLUSTER_GAP = np.deg2rad(10.0)
CONTACT_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class Domain:
    """A complementary domain given by its boundary segments and a cell mask."""

    segments: np.ndarray
    grid: Grid
    mask: np.ndarray
    label: int | None = None

    def __post_init__(self):
        m = np.asarray(self.mask, bool)
        if not m.any():
            raise GeometryError("empty-set", "domain has no cells")
        object.__setattr__(self, "mask", m)
        object.__setattr__(self, "segments", as_segments(self.segments))

    @property
    def bounded(self) -> bool:
        m = self.mask
        return not (m[0].any() or m[-1].any() or m[:, 0].any() or m[:, -1].any())

    @classmethod
    def polygon_interior(cls, vertices, grid: Grid) -> "Domain":
        poly = Polyline(np.asarray(vertices, float), closed=True)
        inside = points_in_polygon(grid.centers(), poly.vertices).reshape(grid.shape)
        return cls(poly.segments(), grid, inside)

    @classmethod
    def from_domain_map(cls, X, dmap, label: int) -> "Domain":
        return cls(X.segments(), dmap.grid, dmap.mask(label), label)

    def contains(self, p) -> np.ndarray:
        j, i = self.grid.index_of(p)
        return self.mask[j, i]


@dataclass(frozen=True, eq=False)
class MaximalDisk:
    center: complex
    radius: float
    contacts: np.ndarray
    whole: bool = False
    cell: tuple[int, int] = (-1, -1)
    contact_segments: np.ndarray | None = None

    @property
    def n_contacts(self) -> int:
        return len(self.contacts)


@dataclass(frozen=True, eq=False)
class Chord:
    endpoint_a: complex
    endpoint_b: complex
    carrier: Polyline
    source: int
    multiplicity: int = 1

    @property
    def diameter(self) -> float:
        v = self.carrier.vertices
        return float(np.hypot(*(v[:, None] - v[None]).transpose(2, 0, 1)).max())


@dataclass(frozen=True, eq=False)
class ChordFamily:
    chords: tuple[Chord, ...]
    domain_id: int | None = None

    def thick(self, eps: float) -> list[Chord]:
        return [c for c in self.chords if c.diameter >= eps]


def _cluster_angles(theta: np.ndarray, gap: float = CLUSTER_GAP) -> tuple[np.ndarray, bool]:
    """Cluster labels for angles; flag True when the angles cover the circle."""
    n = len(theta)
    if n == 0:
        return np.zeros(0, int), False
    order = np.argsort(theta)
    th = theta[order]
    gaps = np.diff(np.append(th, th[0] + 2 * np.pi))
    cuts = gaps > gap
    lab_sorted = np.zeros(n, int)
    if not cuts.any():
        return np.zeros(n, int), True
    # start a new cluster after each large gap; wrap the tail into the first
    start = int(np.argmax(cuts)) + 1
    k = 0
    for s in range(n):
        idx = (start + s) % n
        lab_sorted[idx] = k
        if cuts[idx]:
            k += 1
    labels = np.empty(n, int)
    labels[order] = lab_sorted
    return labels, False


def _contacts(index: SegmentIndex, c: np.ndarray, band: float):
    """Feet of every segment within (distance + band) of c."""
    d = float(index.query(c[None])[0])
    off, ids = index.within(c[None], d + band)
    S = index.source[ids]
    dist, feet = point_segment_distance(c[None], S[:, 0], S[:, 1], return_foot=True)
    return d, ids, dist, feet


def _refine(index: SegmentIndex, c: np.ndarray, h: float, iters: int = 40):
    """Move c onto the skeleton: equalise distances to all contact clusters."""
    band = 2.0 * h
    for _ in range(iters):
        d, ids, dist, feet = _contacts(index, c, band)
        v = c[None] - feet
        theta = np.arctan2(-v[:, 1], -v[:, 0])
        lab, full = _cluster_angles(theta)
        if full:
            sector = np.floor((theta + np.pi) / CLUSTER_GAP).astype(int)
            lab = sector
        reps = []
        for k in np.unique(lab):
            sel = np.nonzero(lab == k)[0]
            reps.append(sel[np.argmin(dist[sel])])
        reps = np.asarray(reps)
        if len(reps) < 2:
            return c, d, False
        u = v[reps] / np.maximum(dist[reps], 1e-300)[:, None]
        A = np.hstack([u, -np.ones((len(reps), 1))])
        rhs = -(dist[reps] - d)
        step = np.linalg.lstsq(A, rhs, rcond=None)[0]
        dc = step[:2]
        n = float(np.hypot(*dc))
        if n > h:
            dc *= h / n
        c = c + dc
        band = max(min(band, 4.0 * n + 1e-9), 4.0 * CONTACT_TOL * max(1.0, d))
        if n < 1e-10 * max(1.0, d):
            break
    return c, float(index.query(c[None])[0]), True


def _disk_at(index: SegmentIndex, c: np.ndarray, d: float, cell, min_sep: float = CLUSTER_GAP):
    tol = CONTACT_TOL * max(1.0, d)
    off, ids = index.within(c[None], d + tol)
    S = index.source[ids]
    dist, feet = point_segment_distance(c[None], S[:, 0], S[:, 1], return_foot=True)
    z = feet[:, 0] + 1j * feet[:, 1]
    # one contact per distinct foot point
    key = np.round(np.c_[z.real, z.imag] / (tol + 1e-300)).astype(np.int64)
    _, first = np.unique(key, axis=0, return_index=True)
    z, ids = z[first], ids[first]
    cc = complex(c[0], c[1])
    theta = np.angle(z - cc)
    lab, full = _cluster_angles(theta, min_sep)
    if full and len(z) >= 3:
        return MaximalDisk(cc, d, z[np.argsort(theta)], True, cell, ids[np.argsort(theta)])
    if lab.max(initial=0) < 1:
        return None
    # a cluster of a smooth contact arc is represented by its nearest foot
    reps = []
    for k in np.unique(lab):
        sel = np.nonzero(lab == k)[0]
        reps.append(sel[np.argmin(np.abs(np.abs(z[sel] - cc) - d))])
    reps = np.asarray(reps)
    order = np.argsort(np.mod(theta[reps], 2 * np.pi))
    return MaximalDisk(cc, d, z[reps][order], False, cell, ids[reps][order])


def ridge_candidates(d: np.ndarray, feet: np.ndarray, mask: np.ndarray, grid: Grid,
                     min_angle: float = np.deg2rad(5.0)) -> np.ndarray:
    """Cells whose unit gradient differs from a neighbour's by more than ``min_angle``.

    The gradient of the distance function is the unit vector away from the
    nearest boundary point.  It is constant along straight boundary pieces,
    rotates by about h/d per cell around a boundary vertex, and jumps by the
    full crease angle across the skeleton.
    """
    X, Y = np.meshgrid(grid.xs, grid.ys)
    with np.errstate(invalid="ignore", divide="ignore"):
        gx = (X - feet[..., 0]) / d
        gy = (Y - feet[..., 1]) / d
    cos_min = np.cos(min_angle)
    cand = np.zeros(d.shape, bool)
    for axis in (0, 1):
        sl_a = [slice(None), slice(None)]
        sl_b = [slice(None), slice(None)]
        sl_a[axis] = slice(None, -1)
        sl_b[axis] = slice(1, None)
        a, b = tuple(sl_a), tuple(sl_b)
        both = mask[a] & mask[b] & (d[a] > 0) & (d[b] > 0)
        hit = both & (gx[a] * gx[b] + gy[a] * gy[b] < cos_min)
        cand[a] |= hit
        cand[b] |= hit
    return cand


def skeleton(U: Domain, index: SegmentIndex | None = None) -> tuple[MaximalDisk, ...]:
    """Maximal disks of U at grid resolution, refined to contact tolerance."""
    if not U.bounded:
        raise GeometryError("unbounded-domain", "skeleton needs a bounded domain")
    grid = U.grid
    h = grid.cell_size
    index = index or SegmentIndex(U.segments)
    P = grid.centers()
    sel = U.mask.ravel()
    d = np.full(len(P), np.nan)
    feet = np.full((len(P), 2), np.nan)
    d[sel], feet[sel] = index.query(P[sel], return_foot=True)
    d = d.reshape(grid.shape)
    feet = feet.reshape(grid.shape + (2,))
    cand = ridge_candidates(d, feet, U.mask, grid)
    J, I = np.nonzero(cand)

    disks: list[MaximalDisk] = []
    seen = []
    for j, i in zip(J, I):
        c0 = np.array([grid.xs[i], grid.ys[j]])
        dd, ids, dist, f = _contacts(index, c0, 2.0 * h)
        v = f - c0[None]
        lab, full = _cluster_angles(np.arctan2(v[:, 1], v[:, 0]))
        if not full and lab.max(initial=0) < 1:
            continue
        c, r, ok = _refine(index, c0, h)
        if not ok or np.hypot(*(c - c0)) > 2.0 * h or not U.contains(c)[0]:
            continue
        disk = _disk_at(index, c, r, (int(j), int(i)))
        if disk is not None:
            disks.append(disk)
            seen.append(c)
    if not disks:
        return ()
    # identical refined disks collapse to one representative
    C = np.asarray(seen)
    tree = cKDTree(C)
    keep = np.ones(len(disks), bool)
    for k, nb in enumerate(tree.query_ball_point(C, 1e-7 * max(1.0, float(np.abs(C).max())))):
        if keep[k]:
            for m in nb:
                if m > k:
                    keep[m] = False
    return tuple(d_ for d_, k in zip(disks, keep) if k)


def hull_of(disk: MaximalDisk) -> HyperbolicHull:
    if disk.whole:
        return hyperbolic_hull(disk.center, disk.radius, disk.contacts, whole=True)
    return hyperbolic_hull(disk.center, disk.radius, disk.contacts)


def _side_chords(k: int, disk: MaximalDisk, hull: HyperbolicHull, n: int) -> list[Chord]:
    out = []
    for g in hull.sides:
        a, b = hull.to_world(g.a), hull.to_world(g.b)
        if abs(a - b) <= 1e-6 * disk.radius:
            continue
        w = hull.to_world(g.sample(n))
        out.append(Chord(complex(a), complex(b), Polyline.from_points(w), k))
    return out


def chord_crossings(chords, limit: int = 1) -> list[tuple[int, int]]:
    """Pairs of chords whose open carriers meet."""
    segs, owner = [], []
    for k, ch in enumerate(chords):
        s = ch.carrier.segments().copy()
        trim = 1e-6
        s[0, 0] = s[0, 0] + trim * (s[0, 1] - s[0, 0])
        s[-1, 1] = s[-1, 1] + trim * (s[-1, 0] - s[-1, 1])
        segs.append(s)
        owner.append(np.full(len(s), k))
    if not segs:
        return []
    S = np.concatenate(segs)
    O = np.concatenate(owner)
    i, j, _ = close_segment_pairs(S, tol=0.0)
    bad = O[i] != O[j]
    pairs = sorted({(int(min(a, b)), int(max(a, b))) for a, b in zip(O[i][bad], O[j][bad])})
    return pairs[:limit] if limit else pairs


def chord_family(U: Domain, disks=None, samples: int = 33, validate: bool = True) -> ChordFamily:
    """Hull sides of all maximal disks, deduplicated, checked for crossings."""
    if disks is None:
        disks = skeleton(U)
    chords: list[Chord] = []
    for k, disk in enumerate(disks):
        if disk.whole or disk.n_contacts < 2:
            continue
        chords.extend(_side_chords(k, disk, hull_of(disk), samples))
    scale = max(1.0, float(np.abs(U.segments).max()))
    groups: dict = {}
    for ch in chords:
        ends = sorted([(round(ch.endpoint_a.real / (1e-6 * scale)), round(ch.endpoint_a.imag / (1e-6 * scale))),
                       (round(ch.endpoint_b.real / (1e-6 * scale)), round(ch.endpoint_b.imag / (1e-6 * scale)))])
        key = tuple(ends[0] + ends[1])
        mid = ch.carrier.vertices[len(ch.carrier) // 2]
        for rep_i, rep in enumerate(groups.setdefault(key, [])):
            if np.hypot(*(rep[1] - mid)) <= 1e-6 * scale:
                groups[key][rep_i] = (rep[0], rep[1], rep[2] + 1)
                break
        else:
            groups[key].append((ch, mid, 1))
    uniq = [Chord(c.endpoint_a, c.endpoint_b, c.carrier, c.source, m)
            for reps in groups.values() for c, _, m in reps]
    uniq.sort(key=lambda c: (c.source, c.endpoint_a.real, c.endpoint_a.imag))
    if validate:
        bad = chord_crossings(uniq)
        if bad:
            raise GeometryError("lamination-violation", "two chords cross inside the domain",
                                witness=(uniq[bad[0][0]], uniq[bad[0][1]]))
    return ChordFamily(tuple(uniq), U.label)


@dataclass(frozen=True)
class Membership:
    disk: MaximalDisk
    index: int
    margin: float
    n_containing: int
    unique: bool


class KPDecomposition:
    """Maximal disks with their hulls, ready for membership queries."""

    def __init__(self, U: Domain, disks=None):
        self.domain = U
        self.disks = skeleton(U) if disks is None else tuple(disks)
        if not self.disks:
            raise GeometryError("resolution-miss", "no maximal disk found")
        self.hulls = [hull_of(d) for d in self.disks]
        self.centers = np.array([[d.center.real, d.center.imag] for d in self.disks])
        self.radii = np.array([d.radius for d in self.disks])
        self.tree = cKDTree(self.centers)
        self.rmax = float(self.radii.max())
        # single-chord hulls are handled in bulk
        self.single = np.array([len(hh.sides) == 1 and not hh.whole for hh in self.hulls])
        self.kind = np.zeros(len(self.disks), int)
        self.cc = np.zeros(len(self.disks), complex)
        self.rr = np.zeros(len(self.disks))
        for k in np.nonzero(self.single)[0]:
            hh = self.hulls[k]
            g = hh.sides[0]
            if g.kind == "diameter":
                self.kind[k] = 1
                self.cc[k] = hh.to_world(g.a)
                self.rr[k] = 0.0
                u = (g.b - g.a) / abs(g.b - g.a)
                self.cc[k] = complex(hh.to_world(g.a))
                self.rr[k] = np.angle(u)
            else:
                self.cc[k] = complex(hh.to_world(g.center))
                self.rr[k] = hh.radius * g.radius

    def margins(self, z: complex, cand: np.ndarray) -> np.ndarray:
        out = np.empty(len(cand))
        s = self.single[cand]
        cs = cand[s]
        m = np.empty(len(cs))
        line = self.kind[cs] == 1
        m[~line] = -np.abs(np.abs(z - self.cc[cs][~line]) - self.rr[cs][~line])
        u = np.exp(1j * self.rr[cs][line])
        m[line] = -np.abs(((z - self.cc[cs][line]) * np.conj(u)).imag)
        out[s] = m
        for t, k in zip(np.nonzero(~s)[0], cand[~s]):
            out[t] = float(self.hulls[k].margin(z)[0])
        return out

    def membership(self, z, tau: float | None = None) -> Membership:
        h = self.domain.grid.cell_size
        tau = 2.0 * h if tau is None else tau
        z = complex(*np.asarray(z, float)) if not isinstance(z, complex) else z
        near = np.asarray(self.tree.query_ball_point([z.real, z.imag], self.rmax), int)
        if len(near):
            near = near[np.hypot(self.centers[near, 0] - z.real, self.centers[near, 1] - z.imag)
                        < self.radii[near]]
        if len(near) == 0:
            raise GeometryError("resolution-miss", "no maximal disk contains the point", witness=z)
        m = self.margins(z, near)
        ok = m >= -tau
        if not ok.any():
            raise GeometryError("resolution-miss", "no hull contains the point (refine grid)",
                                witness=z)
        best = int(near[np.argmax(m)])
        hits = near[ok]
        # unique up to resolution: the containing disks form one chain of
        # grid-adjacent skeleton points (single linkage at 3 cells)
        C = self.centers[hits]
        n_groups = 1
        if len(hits) > 1:
            t = cKDTree(C)
            n_groups = connected_components(t.sparse_distance_matrix(t, 3.0 * h), directed=False)[0]
        return Membership(self.disks[best], best, float(m.max()), int(len(hits)), n_groups == 1)


def kp_membership(z, decomposition: KPDecomposition) -> Membership:
    return decomposition.membership(z)
