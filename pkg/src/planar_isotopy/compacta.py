"""Compacta made of polygonal components, keyframed isotopies, uniform
perfectness estimates, encircling, complementary domains and crosscuts."""

from __future__ import annotations

from dataclasses import InitVar, dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage
from scipy.spatial import ConvexHull, QhullError

from .errors import GeometryError
from .planar import (Grid, Polyline, SegmentIndex, as_segments, close_segment_pairs,
                     distance_field, point_segment_distance,
                     points_in_polygon)

K_LADDER = 0.01 * 1.05 ** np.arange(0, 95)
K_LADDER = K_LADDER[K_LADDER < 1.0]


@dataclass(frozen=True, eq=False)
class Component:
    """One component: a closed loop (optionally filled), an open arc or a point."""

    polyline: Polyline
    filled: bool = False
    name: str = ""

    def __post_init__(self):
        if self.filled and not self.polyline.closed:
            raise GeometryError("degenerate", f"component {self.name!r}: only loops can be filled")

    @property
    def vertices(self) -> np.ndarray:
        return self.polyline.vertices

    def moved(self, vertices) -> "Component":
        return Component(Polyline(vertices, self.polyline.closed), self.filled, self.name)


def _diameter(pts: np.ndarray) -> float:
    if len(pts) < 2:
        return 0.0
    if len(pts) > 3:
        try:
            pts = pts[ConvexHull(pts).vertices]
        except QhullError:  # collinear input
            pass
    d = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((d ** 2).sum(-1)).max())


def embedding_violations(components: Sequence[Component], tol: float = 0.0,
                         limit: int = 10) -> list[tuple]:
    """Witnesses of non-disjoint components or self-intersecting loops."""
    segs, comp, seg_no, nseg = [], [], [], []
    for ci, c in enumerate(components):
        s = c.polyline.segments()
        segs.append(s)
        comp.append(np.full(len(s), ci))
        seg_no.append(np.arange(len(s)))
        nseg.append(len(s))
    if not segs:
        return []
    S = np.concatenate(segs)
    C = np.concatenate(comp)
    K = np.concatenate(seg_no)
    i, j, d = close_segment_pairs(S, tol=tol)
    out = []
    same = C[i] == C[j]
    n = np.asarray(nseg)[C[i]]
    closed = np.array([components[c].polyline.closed for c in C[i]]) if len(i) else np.zeros(0, bool)
    gap = np.abs(K[i] - K[j])
    adjacent = same & ((gap <= 1) | (closed & (gap == n - 1)))
    bad = ~adjacent
    for a, b in zip(i[bad][:limit], j[bad][:limit]):
        out.append(("intersect", int(C[a]), int(K[a]), int(C[b]), int(K[b])))
    for fi, f in enumerate(components):
        if not f.filled:
            continue
        for gi, g in enumerate(components):
            if gi != fi and points_in_polygon(g.vertices[:1], f.vertices)[0]:
                out.append(("inside-filled", gi, fi))
    return out[:limit]


@dataclass(frozen=True, eq=False)
class Compactum:
    """Finite union of polygonal components.

    ``sigma`` is the index of the encircling circle when one has been added;
    ``eta`` is a declared lower bound for component diameters.
    """

    components: tuple[Component, ...]
    eta: float = 0.0
    sigma: int | None = None
    validate: InitVar[bool] = True

    def __post_init__(self, validate: bool):
        object.__setattr__(self, "components", tuple(self.components))
        if not self.components:
            raise GeometryError("empty-set", "compactum has no components")
        if validate:
            if self.eta > 0:
                for c in self.components:
                    if _diameter(c.vertices) < self.eta:
                        raise GeometryError("degenerate",
                                            f"component {c.name!r} smaller than eta={self.eta}")
            bad = embedding_violations(self.components)
            if bad:
                raise GeometryError("degenerate", "components are not disjoint simple curves",
                                    witness=bad)

    @classmethod
    def from_polygons(cls, polygons, filled: bool | Sequence[bool] = False,
                      eta: float = 0.0, names=None) -> "Compactum":
        polygons = list(polygons)
        if isinstance(filled, bool):
            filled = [filled] * len(polygons)
        names = names or [f"C{i}" for i in range(len(polygons))]
        comps = [Component(Polyline(np.asarray(p, float), closed=len(p) > 2), f, n)
                 for p, f, n in zip(polygons, filled, names)]
        return cls(tuple(comps), eta)

    def vertex_arrays(self) -> tuple[np.ndarray, ...]:
        return tuple(c.vertices for c in self.components)

    def all_vertices(self) -> np.ndarray:
        return np.concatenate(self.vertex_arrays())

    def segments(self) -> np.ndarray:
        return as_segments([c.polyline for c in self.components])

    def polylines(self) -> list[Polyline]:
        return [c.polyline for c in self.components]

    @property
    def diam(self) -> float:
        return _diameter(self.all_vertices())

    def component_diameters(self) -> np.ndarray:
        return np.array([_diameter(c.vertices) for c in self.components])

    def moved(self, vertex_arrays, validate: bool = False) -> "Compactum":
        comps = tuple(c.moved(v) for c, v in zip(self.components, vertex_arrays))
        return Compactum(comps, self.eta, self.sigma, validate=validate)

    def non_sigma(self) -> list[int]:
        return [i for i in range(len(self.components)) if i != self.sigma]

    def filled_contains(self, pts) -> np.ndarray:
        pts = np.asarray(pts, float).reshape(-1, 2)
        out = np.zeros(len(pts), bool)
        for c in self.components:
            if c.filled:
                out |= points_in_polygon(pts, c.vertices)
        return out


@dataclass(frozen=True, eq=False)
class Isotopy:
    """Per-vertex keyframes with linear interpolation in t."""

    base: Compactum
    times: np.ndarray
    frames: tuple

    def __post_init__(self):
        t = np.asarray(self.times, float)
        if t.ndim != 1 or len(t) == 0 or t[0] != 0.0 or np.any(np.diff(t) <= 0) or t[-1] > 1.0:
            raise GeometryError("time-range", "keyframe times must start at 0, increase and stay <= 1")
        frames = []
        for k, fr in enumerate(self.frames):
            fr = tuple(np.array(v, float) for v in fr)
            if len(fr) != len(self.base.components):
                raise GeometryError("degenerate", f"keyframe {k} has the wrong component count")
            for v, c in zip(fr, self.base.components):
                if v.shape != c.vertices.shape:
                    raise GeometryError("degenerate", f"keyframe {k} vertex count mismatch")
                if not np.all(np.isfinite(v)):
                    raise GeometryError("unbounded-isotopy", f"keyframe {k} is not finite",
                                        witness=float(t[k]))
                v.setflags(write=False)
            frames.append(fr)
        if len(frames) != len(t):
            raise GeometryError("degenerate", "one vertex set per keyframe time")
        for v, c in zip(frames[0], self.base.components):
            if not np.array_equal(v, c.vertices):
                raise GeometryError("degenerate", "first keyframe must equal the compactum")
        t.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "frames", tuple(frames))

    @classmethod
    def identity(cls, X: Compactum) -> "Isotopy":
        return cls(X, np.array([0.0, 1.0]), (X.vertex_arrays(), X.vertex_arrays()))

    @classmethod
    def from_motions(cls, X: Compactum, motions: dict, times=(0.0, 1.0)) -> "Isotopy":
        """Keyframes from per-component callables ``f(vertices, t) -> vertices``."""
        frames = []
        for t in times:
            frames.append(tuple(motions[i](c.vertices, t) if i in motions else c.vertices
                                for i, c in enumerate(X.components)))
        return cls(X, np.asarray(times, float), tuple(frames))

    @classmethod
    def translation(cls, X: Compactum, offsets: dict, times=(0.0, 1.0)) -> "Isotopy":
        """Component ``i`` moves linearly by ``offsets[i] * t``."""
        motions = {i: (lambda v, t, d=np.asarray(d, float): v + t * d) for i, d in offsets.items()}
        return cls.from_motions(X, motions, times)

    def positions(self, t: float) -> tuple[np.ndarray, ...]:
        t = float(t)
        if not 0.0 <= t <= 1.0:
            raise GeometryError("time-range", f"t = {t} outside [0, 1]", witness=t)
        k = int(np.searchsorted(self.times, t, side="right")) - 1
        if k >= len(self.times) - 1 or self.times[k] == t:
            return self.frames[k]
        s = (t - self.times[k]) / (self.times[k + 1] - self.times[k])
        return tuple((1 - s) * a + s * b for a, b in zip(self.frames[k], self.frames[k + 1]))

    def evaluate(self, t: float, validate: bool = False) -> Compactum:
        return self.base.moved(self.positions(t), validate=validate)

    def breakpoints(self) -> np.ndarray:
        """Keyframe times together with 1 (motion is linear in between)."""
        return np.unique(np.append(self.times, 1.0))

    def trajectories(self, ts) -> np.ndarray:
        """All vertices at the given times, shape ``(len(ts), n_vertices, 2)``."""
        return np.stack([np.concatenate(self.positions(t)) for t in ts])

    def embedding_violations(self, samples: int = 33) -> list[tuple]:
        ts = np.unique(np.concatenate([np.linspace(0, 1, samples), self.breakpoints()]))
        out = []
        for t in ts:
            bad = embedding_violations(self.evaluate(t).components, limit=1)
            if bad:
                out.append((float(t), bad[0]))
        return out

    def with_fixed_component(self, comp: Component) -> tuple[Compactum, "Isotopy"]:
        X = Compactum(self.base.components + (comp,), self.base.eta,
                      len(self.base.components), validate=False)
        frames = tuple(fr + (comp.vertices,) for fr in self.frames)
        return X, Isotopy(X, self.times, frames)

    def track(self, loc: "Location", t: float) -> np.ndarray:
        v = self.positions(t)[loc.component]
        n = len(v)
        return (1 - loc.s) * v[loc.segment % n] + loc.s * v[(loc.segment + 1) % n]

    def lipschitz_in_time(self) -> float:
        """Largest vertex speed over all keyframe intervals."""
        best = 0.0
        for k in range(len(self.times) - 1):
            dt = self.times[k + 1] - self.times[k]
            for a, b in zip(self.frames[k], self.frames[k + 1]):
                best = max(best, float(np.hypot(*(b - a).T).max() / dt))
        return best


@dataclass(frozen=True)
class Location:
    """A point of X as (component, segment, fraction along the segment)."""

    component: int
    segment: int
    s: float


def locate(X: Compactum, p, tol: float = 1e-9) -> Location:
    """Express a point lying on X by its position on a segment."""
    p = np.asarray(p, float)
    best = (np.inf, None)
    for ci, c in enumerate(X.components):
        S = c.polyline.segments()
        d, foot = point_segment_distance(p[None], S[:, 0], S[:, 1], return_foot=True)
        k = int(np.argmin(d))
        if d[k] < best[0]:
            ab = S[k, 1] - S[k, 0]
            L2 = float(ab @ ab)
            s = float((foot[k] - S[k, 0]) @ ab / L2) if L2 > 0 else 0.0
            best = (float(d[k]), Location(ci, k, s))
    if best[0] > tol * max(1.0, float(np.abs(p).max())):
        raise GeometryError("outside-domain-of-extension", "point is not on the compactum",
                            witness=tuple(p))
    return best[1]


# uniform perfectness

@dataclass(frozen=True)
class UPReport:
    k_hat: float
    k_raw: float
    witness_failures: tuple
    n_centers: int
    n_radii: int


def estimate_uniform_perfectness(X: Compactum, center_level: int = 2, radius_level: int = 1,
                                 depth: int = 10, n_witnesses: int = 5) -> UPReport:
    """Largest ladder constant k for which every sampled annulus meets X.

    Centres are the vertices plus ``2**center_level`` subdivision points per
    segment; radii are ``diam * 2**(-j / 2**radius_level)`` for
    ``0 < j <= depth * 2**radius_level``.  Both samples are nested under
    refinement, so the estimate can only decrease as density grows.

    For a centre x and radius r the best constant is
    ``max_z {|z - x| : z in X, |z - x| <= r} / r``; a segment realises every
    distance between its nearest and farthest point, so this is exact per
    segment.
    """
    S = X.segments()
    D = X.diam
    if D == 0.0:
        raise GeometryError("degenerate", "uniform perfectness needs at least two points")
    m = 1 << center_level
    fr = np.arange(m) / m
    real = S[np.any(S[:, 0] != S[:, 1], axis=1)]
    pts = [S[:, 0], S[:, 1]]
    if len(real):
        pts.append((real[:, 0, None, :] * (1 - fr[None, :, None]) + real[:, 1, None, :] * fr[None, :, None]).reshape(-1, 2))
    C = np.unique(np.concatenate(pts), axis=0)
    q = 1 << radius_level
    R = D * 2.0 ** (-np.arange(1, depth * q + 1) / q)

    k_raw = np.inf
    worst = []
    a, b = S[:, 0], S[:, 1]
    for s0 in range(0, len(C), 256):
        c = C[s0:s0 + 256]
        dmin = point_segment_distance(c[:, None, :], a[None], b[None])
        dmax = np.maximum(np.hypot(*(c[:, None] - a[None]).transpose(2, 0, 1)),
                          np.hypot(*(c[:, None] - b[None]).transpose(2, 0, 1)))
        for r in R:
            reach = np.where(dmin <= r, np.minimum(dmax, r), 0.0).max(axis=1) / r
            j = np.argmin(reach)
            if reach[j] < k_raw:
                k_raw = float(reach[j])
            worst.extend((float(reach[i]), (float(c[i, 0]), float(c[i, 1])), float(r)) for i in np.argsort(reach)[:n_witnesses])
            worst = sorted(worst)[:n_witnesses]
    ok = K_LADDER[K_LADDER <= k_raw]
    k_hat = float(ok[-1]) if len(ok) else 0.0
    fails = tuple((x, r) for _, x, r in worst)
    return UPReport(k_hat, k_raw, fails, len(C), len(R))


# encircling

def encircle(X: Compactum, h: Isotopy, n_sides: int = 256) -> tuple[Compactum, Isotopy]:
    """Add a fixed polygonal circle Sigma around all motion; idempotent.

    The radius R is at least twice the largest frame diameter and leaves a
    margin of that diameter around every trajectory.  Distances to a point and
    pairwise distances are convex along linear motion, so keyframes give the
    suprema exactly.
    """
    if X.sigma is not None:
        return X, h
    frames = [np.concatenate(fr) for fr in h.frames]
    if not all(np.all(np.isfinite(f)) for f in frames):
        raise GeometryError("unbounded-isotopy", "keyframes are not finite")
    c0 = frames[0].mean(axis=0)
    D = max(_diameter(f) for f in frames)
    reach = max(float(np.hypot(*(f - c0).T).max()) for f in frames)
    R = max(2.0 * D, reach + D)
    if not np.isfinite(R):
        raise GeometryError("unbounded-isotopy", "trajectory is unbounded")
    th = 2 * np.pi * np.arange(n_sides) / n_sides
    Rv = R / np.cos(np.pi / n_sides)  # polygon contains the round disk of radius R
    sigma = Component(Polyline(c0 + Rv * np.c_[np.cos(th), np.sin(th)], closed=True), False, "Sigma")
    X2, h2 = h.with_fixed_component(sigma)
    return X2, h2


def sigma_radius(X: Compactum) -> float:
    """Inscribed radius of the encircling polygon."""
    v = X.components[X.sigma].vertices
    c = v.mean(axis=0)
    return float(np.hypot(*(v - c).T).mean() * np.cos(np.pi / len(v)))


# complementary domains

@dataclass(frozen=True, eq=False)
class DomainMap:
    """Connected components of grid cells that do not meet X.

    ``labels`` is 0 on blocked cells and 1..n on free cells; ``unbounded`` is
    the label touching the grid border.
    """

    grid: Grid
    labels: np.ndarray
    n_labels: int
    unbounded: int
    distance: np.ndarray

    def label_at(self, p) -> int:
        j, i = self.grid.index_of(p)
        return int(self.labels[j[0], i[0]])

    @property
    def bounded_labels(self) -> list[int]:
        return [k for k in range(1, self.n_labels + 1) if k != self.unbounded]

    def mask(self, label: int) -> np.ndarray:
        return self.labels == label


def complementary_domains(X: Compactum, grid: Grid) -> DomainMap:
    d = distance_field(X.polylines(), grid).values
    blocked = d <= 0.5 * np.sqrt(2) * grid.cell_size
    if any(c.filled for c in X.components):
        blocked |= X.filled_contains(grid.centers()).reshape(grid.shape)
    lab, n = ndimage.label(~blocked)
    border = np.unique(np.concatenate([lab[0], lab[-1], lab[:, 0], lab[:, -1]]))
    border = border[border > 0]
    unb = int(border[0]) if len(border) else 0
    for extra in border[1:]:  # the outside is one domain even if X cuts the frame
        lab[lab == extra] = unb
    if len(border) > 1:
        uniq = np.unique(lab[lab > 0])
        remap = np.zeros(lab.max() + 1, int)
        remap[uniq] = np.arange(1, len(uniq) + 1)
        lab = remap[lab]
        unb = int(remap[unb])
        n = len(uniq)
    return DomainMap(grid, lab, int(n), unb, d)


# crosscuts

@dataclass(frozen=True, eq=False)
class Crosscut:
    arc: Polyline
    endpoint_a: np.ndarray
    endpoint_b: np.ndarray
    domain_id: int | None = None


def make_crosscut(X: Compactum, points, domain_id: int | None = None,
                  tol: float = 1e-9) -> Crosscut:
    """Validate an open polyline as a crosscut of a complementary domain of X."""
    arc = Polyline.from_points(points)
    v = arc.vertices
    if len(v) < 2:
        raise GeometryError("not-a-crosscut", "a crosscut needs two distinct endpoints")
    scale = max(1.0, float(np.abs(v).max()))
    index = SegmentIndex(X.segments())
    de = index.query(v[[0, -1]])
    if np.any(de > tol * scale):
        raise GeometryError("not-a-crosscut", "endpoints are not on the compactum", witness=de)
    if np.allclose(v[0], v[-1]):
        raise GeometryError("not-a-crosscut", "endpoints coincide")
    # open arc: pull the end segments back from the endpoints before testing
    segs = arc.segments().copy()
    shrink = 1e-6
    segs[0, 0] = segs[0, 0] + shrink * (segs[0, 1] - segs[0, 0])
    segs[-1, 1] = segs[-1, 1] + shrink * (segs[-1, 0] - segs[-1, 1])
    i, _, _ = close_segment_pairs(segs, X.segments(), tol=0.0)
    if len(i):
        raise GeometryError("not-a-crosscut", "arc interior meets the compactum",
                            witness=int(i[0]))
    inside = X.filled_contains(0.5 * (segs[:, 0] + segs[:, 1]))
    if np.any(inside):
        raise GeometryError("not-a-crosscut", "arc runs through a filled component")
    return Crosscut(arc, v[0].copy(), v[-1].copy(), domain_id)


# normalisation of scale

def _min_time_distance(p: np.ndarray, q: np.ndarray, times: np.ndarray) -> np.ndarray:
    """min_t |p(t) - q(t)| for piecewise-linear trajectories, exactly.

    ``p`` and ``q`` have shape ``(K, ..., 2)`` over keyframes.
    """
    w = p - q
    best = np.hypot(w[..., 0], w[..., 1]).min(axis=0)
    for k in range(len(times) - 1):
        w0, dw = w[k], w[k + 1] - w[k]
        den = (dw ** 2).sum(-1)
        with np.errstate(invalid="ignore", divide="ignore"):
            s = np.clip(-(w0 * dw).sum(-1) / np.where(den > 0, den, 1.0), 0.0, 1.0)
        z = w0 + s[..., None] * dw
        best = np.minimum(best, np.hypot(z[..., 0], z[..., 1]))
    return best


def separation_scale(X: Compactum, h: Isotopy) -> float:
    """min over points a and components C of max_{c in C} min_t |a^t - c^t|.

    Computed on vertices.  After dividing all lengths by this value every
    point has some component whose nearest approach stays at least 1.
    """
    traj = np.stack([np.concatenate(fr) for fr in h.frames])
    sizes = [len(c.vertices) for c in X.components]
    offs = np.cumsum([0] + sizes)
    md = _min_time_distance(traj[:, :, None, :], traj[:, None, :, :], h.times)
    per_comp = np.stack([md[:, offs[i]:offs[i + 1]].max(axis=1) for i in range(len(sizes))], axis=1)
    return float(per_comp.min())


def uniform_continuity_delta(h: Isotopy, radius: float, anchor=None, samples: int = 65,
                             max_len: float | None = None) -> float:
    """Largest dyadic delta with: |x^s - a^s| < 2 delta for some s implies
    |x^t - a^t| < radius for all t.

    ``anchor`` is a callable t -> a^t (default: the origin).  Points of X are
    sampled by densifying every component.
    """
    ts = np.unique(np.concatenate([np.linspace(0, 1, samples), h.breakpoints()]))
    X = h.base
    if max_len is None:
        max_len = radius / 8
    # fractions along each segment, shared by every time sample
    pts = []
    for t in ts:
        fr = []
        for c, v in zip(X.components, h.positions(t)):
            P = Polyline(v, c.polyline.closed).path if len(v) > 1 else v
            seg = np.stack([P[:-1], P[1:]], 1) if len(P) > 1 else np.stack([P, P], 1)
            fr.append(seg)
        pts.append(np.concatenate(fr))
    S0 = pts[0]
    k = np.maximum(1, np.ceil(np.hypot(*(S0[:, 1] - S0[:, 0]).T) / max_len).astype(int)).max()
    f = np.linspace(0, 1, k + 1)
    traj = np.stack([(S[:, None, 0] * (1 - f[None, :, None]) + S[:, None, 1] * f[None, :, None]).reshape(-1, 2)
                     for S in pts])
    a = np.stack([np.zeros(2) if anchor is None else np.asarray(anchor(t), float) for t in ts])
    r = np.hypot(*(traj - a[:, None, :]).transpose(2, 0, 1))
    near, far = r.min(axis=0), r.max(axis=0)
    delta = radius / 2
    while delta > 1e-12:
        if np.all(far[near < 2 * delta] < radius):
            return float(delta)
        delta /= 2
    return 0.0
