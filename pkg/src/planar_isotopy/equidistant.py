"""Equidistant sets of two closed sets, the non-interlaced test and a
combinatorial 1-manifold certificate for the extracted curves."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError
from .kulkarni_pinkall import _refine, ridge_candidates
from .planar import (Grid, Polyline, ScalarField, SegmentIndex, as_segments,
                     close_segment_pairs, extract_isocontour, nearest_segments,
                     point_segment_distance)


@dataclass(frozen=True, eq=False)
class OneManifold:
    curves: tuple[Polyline, ...]
    resolution: float
    window: tuple[float, float, float, float]

    @property
    def lines(self) -> list[Polyline]:
        return [c for c in self.curves if not c.closed]

    @property
    def loops(self) -> list[Polyline]:
        return [c for c in self.curves if c.closed]

    def vertices(self) -> np.ndarray:
        if not self.curves:
            return np.zeros((0, 2))
        return np.concatenate([c.vertices for c in self.curves])


@dataclass(frozen=True)
class ManifoldCertificate:
    n_lines: int
    n_loops: int
    max_degree: int
    min_separation: float


@dataclass(frozen=True)
class InterlacingWitness:
    center: complex
    radius: float
    points: tuple[complex, complex, complex, complex]
    labels: tuple[int, int, int, int] = (1, 2, 1, 2)


@dataclass(frozen=True)
class NonInterlacedReport:
    passed: bool
    witness: InterlacingWitness | None
    n_probes: int
    n_candidates: int
    exhausted: bool


def _set_field(segs: np.ndarray, disks, grid: Grid) -> np.ndarray:
    out = np.full(grid.shape, np.inf)
    if len(segs):
        out = nearest_segments(segs, grid)[0]
    if disks:
        X, Y = np.meshgrid(grid.xs, grid.ys)
        for c, r in disks:
            c = complex(c)
            out = np.minimum(out, np.maximum(0.0, np.hypot(X - c.real, Y - c.imag) - r))
    return out


def set_distance(segs: np.ndarray, disks, pts) -> np.ndarray:
    """Distance from points to a union of segments and closed disks."""
    pts = np.asarray(pts, float).reshape(-1, 2)
    out = np.full(len(pts), np.inf)
    if len(segs):
        out = SegmentIndex(segs).query(pts)
    for c, r in disks:
        c = complex(c)
        out = np.minimum(out, np.maximum(0.0, np.hypot(pts[:, 0] - c.real, pts[:, 1] - c.imag) - r))
    return out


def _min_cross_distance(s1, d1, s2, d2, tol: float) -> float:
    """Distance between the two sets, exact when below ``tol`` (else >= tol)."""
    best = np.inf
    if len(s1) and len(s2):
        _, _, dist = close_segment_pairs(s1, s2, tol=tol)
        best = float(dist.min()) if len(dist) else np.inf
    for c, r in d2:
        if len(s1):
            best = min(best, float(set_distance(s1, [], [[complex(c).real, complex(c).imag]])[0]) - r)
    for c, r in d1:
        if len(s2):
            best = min(best, float(set_distance(s2, [], [[complex(c).real, complex(c).imag]])[0]) - r)
        for c2, r2 in d2:
            best = min(best, abs(complex(c) - complex(c2)) - r - r2)
    return best


def difference_field(A1, A2, grid: Grid, disks1=(), disks2=()) -> tuple[ScalarField, np.ndarray, np.ndarray]:
    s1, s2 = as_segments(A1), as_segments(A2)
    f1 = _set_field(s1, list(disks1), grid)
    f2 = _set_field(s2, list(disks2), grid)
    return ScalarField(grid, f1 - f2), f1, f2


def equidistant_set(A1, A2, grid: Grid, disks1=(), disks2=(),
                    check_separation: bool = True) -> OneManifold:
    """Zero set of d(., A1) - d(., A2) on the grid, as maximal polylines.

    ``disks1`` / ``disks2`` add closed round disks ``(center, radius)`` to the
    respective sets.  Curves keep the A1 side on their left.
    """
    s1, s2 = as_segments(A1), as_segments(A2)
    disks1, disks2 = list(disks1), list(disks2)
    if (len(s1) == 0 and not disks1) or (len(s2) == 0 and not disks2):
        raise GeometryError("empty-set", "equidistant set needs two non-empty sets")
    h = grid.cell_size
    if check_separation:
        sep = _min_cross_distance(s1, disks1, s2, disks2, 2.0 * h)
        if sep <= 2.0 * h:
            raise GeometryError("resolution", f"sets are {sep:.3g} apart, grid cell {h:.3g}",
                                witness=sep)
    diff, _, _ = difference_field(s1, s2, grid, disks1, disks2)
    curves = tuple(extract_isocontour(diff, 0.0))
    xs, ys = grid.xs, grid.ys
    return OneManifold(curves, h, (float(xs[0]), float(xs[-1]), float(ys[0]), float(ys[-1])))


def validate_manifold(m: OneManifold, window=None, separation: float | None = None) -> ManifoldCertificate:
    """Combinatorial check that the extracted curves form a 1-manifold.

    Fails with ``not-a-manifold`` when a vertex has more than two incident
    segments, when two curves (or non-neighbouring parts of one curve) come
    closer than ``separation`` (default: one cell), or when an open curve ends
    away from the window boundary.
    """
    window = window or m.window
    h = m.resolution
    sep = h if separation is None else separation
    scale = max(1.0, max(abs(w) for w in window))
    key_eps = 1e-9 * scale

    deg: Counter = Counter()
    segs, owner, pos, length = [], [], [], []
    for ci, c in enumerate(m.curves):
        s = c.segments()
        for p in (s[:, 0], s[:, 1]):
            for k in map(tuple, np.round(p / key_eps).astype(np.int64)):
                deg[k] += 1
        segs.append(s)
        owner.append(np.full(len(s), ci))
        L = np.hypot(*(s[:, 1] - s[:, 0]).T)
        pos.append(np.cumsum(L) - 0.5 * L)
        length.append(np.full(len(s), L.sum()))
    max_deg = max(deg.values()) if deg else 0
    if max_deg > 2:
        k = max(deg, key=deg.get)
        raise GeometryError("not-a-manifold", "junction vertex", witness=np.array(k) * key_eps)

    min_sep = np.inf
    if segs:
        S = np.concatenate(segs)
        O = np.concatenate(owner)
        A = np.concatenate(pos)
        Ltot = np.concatenate(length)
        i, j, d = close_segment_pairs(S, tol=sep)
        same = O[i] == O[j]
        along = np.abs(A[i] - A[j])
        closed = np.array([m.curves[o].closed for o in O[i]], bool) if len(i) else np.zeros(0, bool)
        along = np.where(closed, np.minimum(along, Ltot[i] - along), along)
        # neighbouring parts of one curve are allowed to be close
        bad = ~same | (along > 4.0 * sep + 2.0 * h)
        if bad.any():
            k = int(np.nonzero(bad)[0][0])
            raise GeometryError("not-a-manifold", "curves touch or cross",
                                witness=0.5 * (S[i[k]].mean(0) + S[j[k]].mean(0)))
        far = along > 4.0 * sep + 2.0 * h
        if far.any():
            min_sep = float(d[far].min())

    x0, x1, y0, y1 = window
    tol = 1e-6 * scale
    for c in m.curves:
        if c.closed:
            continue
        for p in (c.vertices[0], c.vertices[-1]):
            edge = min(abs(p[0] - x0), abs(p[0] - x1), abs(p[1] - y0), abs(p[1] - y1))
            if edge > tol:
                raise GeometryError("not-a-manifold", "open curve ends inside the window",
                                    witness=p.copy())
    return ManifoldCertificate(len(m.lines), len(m.loops), max_deg, min_sep)


def _labeled_contacts(c: np.ndarray, r: float, sets, tol: float):
    """Contact points of each set on the circle |z - c| = r with labels 1, 2, ..."""
    pts, labels = [], []
    for lab, (index, disks) in enumerate(sets, start=1):
        if index is not None:
            off, ids = index.within(c[None], r + tol)
            S = index.source[ids]
            if len(S):
                dist, feet = point_segment_distance(c[None], S[:, 0], S[:, 1], return_foot=True)
                ok = np.abs(dist - r) <= tol
                pts.extend(feet[ok, 0] + 1j * feet[ok, 1])
                labels.extend([lab] * int(ok.sum()))
        for cc, rr in disks:
            cc = complex(cc)
            w = cc - complex(*c)
            if abs(abs(w) - rr - r) <= tol and abs(w) > 0:
                pts.append(complex(*c) + w / abs(w) * r)
                labels.append(lab)
    return np.asarray(pts, complex), np.asarray(labels, int)


def circular_runs(points: np.ndarray, labels: np.ndarray, center: complex):
    """Label runs around the circle: list of (label, indices)."""
    if len(points) == 0:
        return []
    order = np.argsort(np.mod(np.angle(points - center), 2 * np.pi))
    lab = labels[order]
    change = np.nonzero(lab != np.roll(lab, 1))[0]
    if len(change) == 0:
        return [(int(lab[0]), order)]
    runs = []
    for a, b in zip(change, np.append(change[1:], change[0] + len(lab))):
        idx = np.arange(a, b) % len(lab)
        runs.append((int(lab[idx[0]]), order[idx]))
    return runs


def interlacing_witness(center: complex, radius: float, points, labels) -> InterlacingWitness | None:
    runs = circular_runs(np.asarray(points, complex), np.asarray(labels, int), center)
    if len(runs) < 4:
        return None
    picks = [runs[k][1][0] for k in range(4)]
    P = np.asarray(points, complex)[picks]
    L = tuple(int(runs[k][0]) for k in range(4))
    return InterlacingWitness(complex(center), float(radius), tuple(complex(p) for p in P), L)


def non_interlaced_test(A1, A2, grid: Grid | None = None, budget: int = 2000,
                        probes=None, n_random: int = 64, seed: int = 0,
                        disks1=(), disks2=()) -> NonInterlacedReport:
    """Search maximal disks of the complement of A1 u A2 for alternating contacts.

    Probe disks are the refined skeleton disks of the joint complement on
    ``grid`` plus ``n_random`` disks centred at random window points (or only
    the explicit ``probes`` when given).  The first disk whose contacts with
    A1 and A2 alternate around the circle is returned as a witness.
    """
    s1, s2 = as_segments(A1), as_segments(A2)
    i1 = SegmentIndex(s1) if len(s1) else None
    i2 = SegmentIndex(s2) if len(s2) else None
    sets = [(i1, list(disks1)), (i2, list(disks2))]
    union = np.concatenate([s for s in (s1, s2) if len(s)])
    iu = SegmentIndex(union) if not (disks1 or disks2) else None
    rng = np.random.default_rng(seed)

    def dist_union(c):
        return float(set_distance(union, list(disks1) + list(disks2), c[None])[0])

    def check(c, r, tol):
        pts, labels = _labeled_contacts(c, r, sets, tol)
        return interlacing_witness(complex(*c), r, pts, labels)

    n_probes = 0
    if probes is not None:
        for c, r in probes:
            c = np.array([complex(c).real, complex(c).imag])
            if dist_union(c) < r - 1e-9 * max(1.0, r):
                continue  # probe disk meets the sets
            n_probes += 1
            w = check(c, r, 1e-9 * max(1.0, r))
            if w is not None:
                return NonInterlacedReport(False, w, n_probes, len(probes), False)
        return NonInterlacedReport(True, None, n_probes, len(probes), False)

    if grid is None:
        lo = union.reshape(-1, 2).min(0)
        hi = union.reshape(-1, 2).max(0)
        grid = Grid.covering(lo[0], hi[0], lo[1], hi[1], 256, margin=0.25 * float(np.max(hi - lo)))
    h = grid.cell_size
    index = iu or SegmentIndex(union)
    P = grid.centers()
    d, feet = index.query(P, return_foot=True)
    d = d.reshape(grid.shape)
    feet = feet.reshape(grid.shape + (2,))
    mask = d > 2.0 * h
    cand = ridge_candidates(d, feet, mask, grid)
    J, I = np.nonzero(cand)
    order = rng.permutation(len(J))
    n_cand = len(J) + n_random
    seen = []
    for k in order:
        if n_probes >= budget:
            return NonInterlacedReport(True, None, n_probes, n_cand, True)
        c0 = np.array([grid.xs[I[k]], grid.ys[J[k]]])
        c, r, ok = _refine(index, c0, h)
        if not ok or np.hypot(*(c - c0)) > 2.0 * h:
            continue
        if any(np.hypot(*(c - s)) < 1e-7 * max(1.0, r) for s in seen[-8:]):
            continue
        seen.append(c)
        n_probes += 1
        w = check(c, r, 1e-6 * max(1.0, r))
        if w is not None:
            return NonInterlacedReport(False, w, n_probes, n_cand, False)
    x0, x1, y0, y1 = grid.bounds
    for _ in range(n_random):
        if n_probes >= budget:
            return NonInterlacedReport(True, None, n_probes, n_cand, True)
        c = np.array([rng.uniform(x0, x1), rng.uniform(y0, y1)])
        r = dist_union(c)
        n_probes += 1
        w = check(c, r, 1e-9 * max(1.0, r))
        if w is not None:
            return NonInterlacedReport(False, w, n_probes, n_cand, False)
    return NonInterlacedReport(True, None, n_probes, n_cand, False)
