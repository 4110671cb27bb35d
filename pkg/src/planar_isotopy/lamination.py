"""Moving laminations of a complementary domain and the extension of an
isotopy over their chords.

Hyperbolic geodesics of U^t are replaced by grid shortest paths for the
quasihyperbolic weight 1/d(z, boundary); positions along a chord are matched
by quasihyperbolic arclength measured from the chord's midpoint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from skimage.graph import MCP_Geometric

from .compacta import Compactum, Isotopy, Location, complementary_domains, locate
from .errors import GeometryError
from .kulkarni_pinkall import ChordFamily, Domain
from .paths import PathRecord, midpoint
from .planar import Grid, Polyline, SegmentIndex, close_segment_pairs, densify, nearest_segments


# geodesics

def _cell_of(grid: Grid, mask: np.ndarray, p, d: np.ndarray) -> tuple[int, int]:
    """Free cell nearest to p (ties broken toward larger clearance)."""
    j, i = grid.index_of(np.asarray(p, float)[None])
    j, i = int(np.clip(j[0], 0, grid.ny - 1)), int(np.clip(i[0], 0, grid.nx - 1))
    if mask[j, i]:
        return j, i
    r = 1
    while r < max(grid.nx, grid.ny):
        j0, j1 = max(0, j - r), min(grid.ny, j + r + 1)
        i0, i1 = max(0, i - r), min(grid.nx, i + r + 1)
        sub = mask[j0:j1, i0:i1]
        if sub.any():
            jj, ii = np.nonzero(sub)
            P = np.c_[grid.xs[i0 + ii], grid.ys[j0 + jj]]
            k = int(np.argmin(np.hypot(*(P - p).T)))
            return j0 + int(jj[k]), i0 + int(ii[k])
        r *= 2
    raise GeometryError("not-joinable", "no free cell near the endpoint", witness=tuple(p))


def _smooth(path: np.ndarray, mask: np.ndarray, grid: Grid, iters: int = 20) -> np.ndarray:
    """Laplacian smoothing of interior vertices, rejecting moves that leave the mask."""
    P = path.copy()
    for _ in range(iters):
        Q = P.copy()
        Q[1:-1] = 0.5 * P[1:-1] + 0.25 * (P[:-2] + P[2:])
        j, i = grid.index_of(Q[1:-1])
        ok = ((j >= 0) & (j < grid.ny) & (i >= 0) & (i < grid.nx))
        ok[ok] = mask[j[ok], i[ok]]
        P[1:-1][ok] = Q[1:-1][ok]
    return P


def domain_geodesic(U: Domain, a, b, grid: Grid | None = None, smooth: int = 20,
                    d: np.ndarray | None = None) -> Polyline:
    """Quasihyperbolic grid geodesic from boundary point a to boundary point b."""
    grid = U.grid if grid is None else grid
    a, b = np.asarray(a, float), np.asarray(b, float)
    if d is None:
        d = nearest_segments(U.segments, grid)[0]
    mask = U.mask & (d > 0)
    lab, _ = ndimage.label(mask)
    sa = _cell_of(grid, mask, a, d)
    sb = _cell_of(grid, mask, b, d)
    if lab[sa] != lab[sb]:
        raise GeometryError("not-joinable", "endpoints reach different parts of the domain",
                            witness=(tuple(a), tuple(b)))
    with np.errstate(divide="ignore"):
        cost = np.where(mask, 1.0 / np.where(mask, d, 1.0), np.inf)
    mcp = MCP_Geometric(cost, fully_connected=True)
    mcp.find_costs([sa], [sb])
    cells = np.asarray(mcp.traceback(sb))
    pts = np.c_[grid.xs[cells[:, 1]], grid.ys[cells[:, 0]]]
    path = np.vstack([a, pts, b])
    path = _smooth(path, mask, grid, smooth)
    return Polyline.from_points(path)


def _seg_qh(L, d0, d1):
    """Quasihyperbolic length of a segment with clearance linear from d0 to d1."""
    if d0 <= 0 or d1 <= 0:
        return np.inf
    if np.isclose(d0, d1, rtol=1e-12, atol=0):
        return L / d0
    return L * np.log(d1 / d0) / (d1 - d0)


def qh_length_table(vertices: np.ndarray, dist: np.ndarray) -> np.ndarray:
    """Quasihyperbolic coordinates of the vertices of a polyline, d linear on segments.

    A segment of length L from clearance d0 to d1 has length L ln(d1/d0)/(d1 - d0)
    (L/d0 when equal).  The origin is the first vertex with positive clearance;
    vertices on the boundary get -inf / +inf.
    """
    v = np.asarray(vertices, float)
    L = np.hypot(*np.diff(v, axis=0).T)
    pos = np.nonzero(dist > 0)[0]
    if len(pos) == 0:
        raise GeometryError("degenerate-path", "polyline has no interior vertex")
    o = int(pos[0])
    c = np.empty(len(v))
    c[o] = 0.0
    for k in range(o, len(v) - 1):
        c[k + 1] = c[k] + _seg_qh(L[k], dist[k], dist[k + 1])
    for k in range(o - 1, -1, -1):
        c[k] = c[k + 1] - _seg_qh(L[k], dist[k], dist[k + 1])
    return c


class QHTable:
    """Quasihyperbolic coordinate along a polyline and its inverse."""

    def __init__(self, vertices, dist):
        self.v = np.asarray(vertices, float)
        self.d = np.asarray(dist, float)
        self.c = qh_length_table(self.v, self.d)
        self.L = np.hypot(*np.diff(self.v, axis=0).T)

    def _part(self, k: int, f: float) -> float:
        L, d0, d1 = self.L[k], self.d[k], self.d[k + 1]
        df = d0 + f * (d1 - d0)
        if np.isfinite(self.c[k]):
            if f <= 0:
                return float(self.c[k])
            if np.isclose(d0, d1, rtol=1e-12, atol=0):
                return float(self.c[k] + f * L / d0)
            return float(self.c[k] + L * np.log(df / d0) / (d1 - d0)) if df > 0 else np.inf
        if f >= 1:
            return float(self.c[k + 1])
        if df <= 0:
            return -np.inf
        return float(self.c[k + 1] - L * np.log(d1 / df) / (d1 - d0))

    def coordinate(self, p) -> float:
        p = np.asarray(p, float)
        S0, S1 = self.v[:-1], self.v[1:]
        dd = S1 - S0
        L2 = (dd ** 2).sum(1)
        f = np.clip(((p - S0) * dd).sum(1) / np.maximum(L2, 1e-300), 0, 1)
        k = int(np.argmin(np.hypot(*(S0 + f[:, None] * dd - p).T)))
        return self._part(k, float(f[k]))

    def point(self, s: float) -> np.ndarray:
        c = self.c
        k = int(np.searchsorted(c, s, side="right") - 1)
        k = min(max(k, 0), len(self.L) - 1)
        L, d0, d1 = self.L[k], self.d[k], self.d[k + 1]
        if np.isfinite(c[k]):
            rem = s - c[k]
            if np.isclose(d0, d1, rtol=1e-12, atol=0):
                f = rem * d0 / L
            else:
                f = (d0 * np.exp(rem * (d1 - d0) / L) - d0) / (d1 - d0)
        else:
            # first segment starts on the boundary: measure back from its far end
            rem = c[k + 1] - s
            df = d1 * np.exp(-rem * (d1 - d0) / L)
            f = (df - d0) / (d1 - d0)
        f = min(max(float(f), 0.0), 1.0)
        return self.v[k] + f * (self.v[k + 1] - self.v[k])


@dataclass(frozen=True)
class GHReport:
    K_meas: float
    geodesic_diameter: float
    competitor_diameters: tuple[float, ...]


def _diam(v) -> float:
    v = np.asarray(v, float)
    d = v[:, None] - v[None]
    return float(np.sqrt((d ** 2).sum(-1)).max())


def random_competitors(U: Domain, a, b, n: int = 20, seed: int = 0, max_vertices: int = 6,
                       max_tries: int = 10000) -> list[Polyline]:
    """Random polylines a -> interior vertices -> b whose samples stay in U."""
    rng = np.random.default_rng(seed)
    grid = U.grid
    free = np.argwhere(U.mask)
    out = []
    tries = 0
    while len(out) < n and tries < max_tries:
        tries += 1
        k = int(rng.integers(1, max_vertices + 1))
        cells = free[rng.integers(0, len(free), k)]
        mid = np.c_[grid.xs[cells[:, 1]], grid.ys[cells[:, 0]]]
        P = np.vstack([a, mid, b])
        s = np.linspace(0, 1, 64)[1:-1]
        samples = (P[:-1, None] * (1 - s)[None, :, None] + P[1:, None] * s[None, :, None]).reshape(-1, 2)
        j, i = grid.index_of(samples)
        inside = (j >= 0) & (j < grid.ny) & (i >= 0) & (i < grid.nx)
        if inside.all() and U.mask[j, i].all():
            out.append(Polyline.from_points(P))
    if len(out) < n:
        raise GeometryError("competitors", f"only {len(out)} competitors found")
    return out


def gehring_hayman(U: Domain, a, b, n_competitors: int = 20, seed: int = 0,
                   geodesic: Polyline | None = None) -> GHReport:
    """Measured constant max diam(geodesic) / diam(competitor) over random competitors."""
    g = domain_geodesic(U, a, b) if geodesic is None else geodesic
    dg = _diam(g.vertices)
    comps = random_competitors(U, np.asarray(a, float), np.asarray(b, float), n_competitors, seed)
    dc = tuple(_diam(c.vertices) for c in comps)
    return GHReport(float(dg / min(dc)), dg, dc)


# moving laminations

@dataclass(frozen=True, eq=False)
class GeodesicChord:
    a: Location
    b: Location
    times: np.ndarray
    carriers: tuple[Polyline, ...]
    tables: tuple["QHTable", ...]
    mid_s: tuple[float, ...]
    mids: tuple[np.ndarray, ...]

    def endpoints(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        v = self.carriers[k].vertices
        return v[0], v[-1]


@dataclass(frozen=True, eq=False)
class MovingLamination:
    chords: tuple[GeodesicChord, ...]
    times: np.ndarray
    grid: Grid
    domains: tuple[np.ndarray, ...]
    n_gaps: int

    def carriers_at(self, k: int) -> list[Polyline]:
        return [c.carriers[k] for c in self.chords]


def select_chords(J: ChordFamily, n_max: int = 8, min_diam: float = 0.0,
                  min_sep: float = 0.0, near=None) -> list:
    """Greedy choice of chords by diameter (or by distance to ``near``) whose
    endpoints are at least ``min_sep`` from endpoints already chosen."""
    chords = [c for c in J.chords if c.diameter >= min_diam]
    if near is None:
        chords.sort(key=lambda c: -c.diameter)
    else:
        p = complex(*near)
        chords.sort(key=lambda c: min(abs(c.endpoint_a - p), abs(c.endpoint_b - p)))
    picked = []
    for c in chords:
        e = np.array([c.endpoint_a, c.endpoint_b])
        if all(np.abs(e[:, None] - np.array([q.endpoint_a, q.endpoint_b])[None]).min() >= min_sep
               for q in picked):
            picked.append(c)
        if len(picked) >= n_max:
            break
    return picked


def _track_domain(X_t: Compactum, grid: Grid, prev_mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    dm = complementary_domains(X_t, grid)
    best, overlap = None, -1
    for lab in dm.bounded_labels:
        o = int((dm.labels[prev_mask] == lab).sum())
        if o > overlap:
            best, overlap = lab, o
    if best is None or overlap == 0:
        raise GeometryError("domain-lost", "no bounded domain overlaps the previous frame")
    return dm.mask(best), dm.distance


def _chord_frame(carrier: Polyline, index: SegmentIndex):
    v = carrier.vertices
    dist = index.query(v)
    dist[0] = dist[-1] = 0.0
    table = QHTable(v, dist)
    m = midpoint(PathRecord(carrier))
    mp = np.array([m.x, m.y])
    return table, table.coordinate(mp), mp


def _check_disjoint(carriers: list[Polyline], t: float, tol: float):
    segs, owner = [], []
    for ci, c in enumerate(carriers):
        s = c.segments()
        segs.append(s)
        owner.append(np.full(len(s), ci))
    S = np.concatenate(segs)
    O = np.concatenate(owner)
    i, j, d = close_segment_pairs(S, tol=0.0)
    for a, b in zip(i, j):
        if O[a] == O[b]:
            continue
        ends_a = carriers[O[a]].vertices[[0, -1]]
        ends_b = carriers[O[b]].vertices[[0, -1]]
        shared = np.hypot(*(ends_a[:, None] - ends_b[None]).transpose(2, 0, 1)).min() <= tol
        near_end = np.hypot(*(S[a].mean(0) - ends_a).T).min() <= 2 * tol
        if shared and near_end:
            continue
        raise GeometryError("lamination-crossing", f"chords {O[a]} and {O[b]} meet at t = {t}",
                            witness=(t, int(O[a]), int(O[b]), tuple(S[a].mean(0))))


def build_lamination(J, h: Isotopy, times, grid: Grid, U0_mask: np.ndarray | None = None,
                     tol: float = 1e-7) -> MovingLamination:
    """Chords of J followed through the isotopy: endpoints tracked on X, carriers
    recomputed as grid geodesics in U^t, disjointness checked per frame."""
    chords = list(J.chords) if isinstance(J, ChordFamily) else list(J)
    if not chords:
        raise GeometryError("empty-set", "no chords")
    times = np.asarray(sorted(set(float(t) for t in times)))
    X0 = h.evaluate(0.0)
    locs = []
    for c in chords:
        pa = locate(X0, [c.endpoint_a.real, c.endpoint_a.imag], tol)
        pb = locate(X0, [c.endpoint_b.real, c.endpoint_b.imag], tol)
        locs.append((pa, pb))
    if U0_mask is None:
        dm = complementary_domains(X0, grid)
        mid = midpoint(PathRecord(chords[0].carrier))
        U0_mask = dm.mask(dm.label_at([mid.x, mid.y]))
    carriers = [[] for _ in chords]
    tables = [[] for _ in chords]
    mids_s = [[] for _ in chords]
    mids = [[] for _ in chords]
    masks = []
    prev = U0_mask
    for t in times:
        Xt = h.evaluate(t)
        mask, _ = _track_domain(Xt, grid, prev)
        segs = Xt.segments()
        d = nearest_segments(segs, grid)[0]
        U = Domain(segs, grid, mask)
        index = SegmentIndex(segs)
        frame = []
        for ci, (pa, pb) in enumerate(locs):
            a, b = h.track(pa, t), h.track(pb, t)
            g = domain_geodesic(U, a, b, d=d)
            tab, s_m, mp = _chord_frame(g, index)
            carriers[ci].append(g)
            tables[ci].append(tab)
            mids_s[ci].append(s_m)
            mids[ci].append(mp)
            frame.append(g)
        _check_disjoint(frame, float(t), grid.cell_size)
        masks.append(mask)
        prev = mask
    out = tuple(GeodesicChord(pa, pb, times, tuple(carriers[i]), tuple(tables[i]),
                              tuple(mids_s[i]), tuple(mids[i]))
                for i, (pa, pb) in enumerate(locs))
    return MovingLamination(out, times, grid, tuple(masks), _count_gaps(out, grid, masks[0]))


def _count_gaps(chords, grid: Grid, mask: np.ndarray) -> int:
    """Number of gap regions of U^0 minus the rasterized chords (reporting only)."""
    cut = mask.copy()
    for c in chords:
        v = c.carriers[0].vertices
        p = densify(v, 0.25 * grid.cell_size)
        j, i = grid.index_of(p)
        ok = (j >= 0) & (j < grid.ny) & (i >= 0) & (i < grid.nx)
        cut[j[ok], i[ok]] = False
    return int(ndimage.label(cut)[1])


@dataclass(frozen=True, eq=False)
class ExtendedIsotopy:
    """h on X together with its extension over the chords of L^0."""

    lamination: MovingLamination
    h: Isotopy
    tol: float = 1e-9

    def _chord_of(self, p: np.ndarray) -> int | None:
        best, which = np.inf, None
        for ci, c in enumerate(self.lamination.chords):
            v = c.carriers[0].vertices
            S0, S1 = v[:-1], v[1:]
            d = S1 - S0
            L2 = (d ** 2).sum(1)
            f = np.clip(((p - S0) * d).sum(1) / np.maximum(L2, 1e-300), 0, 1)
            dist = float(np.hypot(*(S0 + f[:, None] * d - p).T).min())
            if dist < best:
                best, which = dist, ci
        scale = max(1.0, float(np.abs(p).max()))
        return which if best <= self.tol * scale else None

    def _on_frame(self, ci: int, k: int, sigma: float) -> np.ndarray:
        c = self.lamination.chords[ci]
        if sigma == 0.0:
            return c.mids[k].copy()
        return c.tables[k].point(c.mid_s[k] + sigma)

    def sigma(self, ci: int, p) -> float:
        """Signed quasihyperbolic coordinate of p on chord ci at t = 0, from its midpoint."""
        c = self.lamination.chords[ci]
        return c.tables[0].coordinate(p) - c.mid_s[0]

    def __call__(self, x, t: float) -> np.ndarray:
        p = np.asarray(x, float)
        t = float(t)
        if not 0.0 <= t <= 1.0:
            raise GeometryError("time-range", f"t = {t}")
        X0 = self.h.base
        try:
            loc = locate(X0, p, self.tol)
            return self.h.track(loc, t)
        except GeometryError:
            pass
        ci = self._chord_of(p)
        if ci is None:
            raise GeometryError("outside-domain-of-extension", "point is not on X or a chord",
                                witness=tuple(p))
        c = self.lamination.chords[ci]
        mp = c.mids[0]
        sig = 0.0 if np.allclose(p, mp, atol=self.tol, rtol=0) else self.sigma(ci, p)
        ts = self.lamination.times
        k = int(np.searchsorted(ts, t, side="right") - 1)
        k = min(max(k, 0), len(ts) - 1)
        if ts[k] == t or k == len(ts) - 1:
            return self._on_frame(ci, k, sig)
        lam = (t - ts[k]) / (ts[k + 1] - ts[k])
        return (1 - lam) * self._on_frame(ci, k, sig) + lam * self._on_frame(ci, k + 1, sig)


def extend_isotopy(L: MovingLamination, h: Isotopy, tol: float = 1e-9) -> ExtendedIsotopy:
    return ExtendedIsotopy(L, h, tol)


@dataclass(frozen=True)
class ProbeReport:
    gaps: tuple[tuple[float, ...], ...]
    input_distances: tuple[tuple[float, ...], ...]
    max_final_gap: float
    vanishing: bool


def continuity_probe(hL, probes, tol: float) -> ProbeReport:
    """For each probe ((x_i, t_i) sequence, (x_inf, t_inf)) the gaps
    |hL(x_i, t_i) - hL(x_inf, t_inf)|; vanishing means every sequence ends below
    ``tol`` and its gaps never grow by more than ``tol``."""
    gaps, dists, ok = [], [], True
    for seq, (x_inf, t_inf) in probes:
        target = hL(x_inf, t_inf)
        g = [float(np.hypot(*(hL(x, t) - target))) for x, t in seq]
        dd = [float(np.hypot(*(np.asarray(x, float) - np.asarray(x_inf, float))) + abs(t - t_inf))
              for x, t in seq]
        gaps.append(tuple(g))
        dists.append(tuple(dd))
        if g[-1] > tol or np.any(np.diff(g) > tol):
            ok = False
    final = max(g[-1] for g in gaps) if gaps else 0.0
    return ProbeReport(tuple(gaps), tuple(dists), float(final), ok)
