"""Crosscut normalization, the exponential covering exp~(z) = e^z / (e^z + 1),
lifted strip components, the moving equidistant curve M_t and the path
family gamma_t pulled back to the original plane."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .compacta import Compactum, Isotopy, locate, make_crosscut, uniform_continuity_delta
from .equidistant import OneManifold, equidistant_set, non_interlaced_test, validate_manifold
from .errors import GeometryError
from .paths import (ModulusReport, PathRecord, family_hausdorff_modulus,
                    homotopic_rel_endpoints, path_hausdorff)
from .planar import Grid, Polyline

POLE_TOL = 1e-9
BALL_MARGIN = 0.1


# parameters

@dataclass(frozen=True)
class PipelineParams:
    epsilon: float
    nu: float
    delta: float
    tol: float = 1e-4

    def __post_init__(self):
        if not self.epsilon > 0:
            raise GeometryError("params", "epsilon must be positive")
        if not 0 < self.nu < 1 / 3:
            raise GeometryError("params", "nu must lie in (0, 1/3)")
        if not 8 * self.nu / (1 - self.nu) < self.epsilon / 2:
            raise GeometryError("params", f"8 nu/(1 - nu) >= epsilon/2 for nu={self.nu}")
        if not 0 < self.delta < self.epsilon / 4:
            raise GeometryError("params", "delta must lie in (0, epsilon/4)")
        if not 0 < self.tol < 1:
            raise GeometryError("params", "tol must lie in (0, 1)")

    @staticmethod
    def nu_bound(epsilon: float) -> float:
        """Supremum of admissible nu: solves 8 nu / (1 - nu) = epsilon / 2."""
        return epsilon / (16.0 + epsilon)

    @classmethod
    def derive(cls, epsilon: float, nu: float, h: Isotopy | None = None, anchor=None,
               K: float | None = None, tol: float = 1e-4, safety: float = 0.99) -> "PipelineParams":
        """delta = safety * min(eps/4, nu/4, nu K, uniform-continuity delta at radius nu/2)."""
        K = find_K() if K is None else K
        cands = [epsilon / 4, nu / 4, nu * K]
        if h is not None:
            cands.append(uniform_continuity_delta(h, nu / 2, anchor=anchor))
        return cls(epsilon, nu, safety * min(cands), tol)


# the covering map

def exp_tilde(z):
    """e^z / (e^z + 1), evaluated without overflow; raises ``pole`` near (2n+1) pi i."""
    z = np.asarray(z, complex)
    n = np.round((z.imag / np.pi - 1) / 2)
    near = np.abs(z - (2 * n + 1) * np.pi * 1j) < POLE_TOL
    if np.any(near):
        raise GeometryError("pole", "argument within 1e-9 of a pole",
                            witness=complex(np.atleast_1d(z)[np.atleast_1d(near)][0]))
    with np.errstate(over="ignore", invalid="ignore"):
        pos = z.real >= 0
        e_neg = np.exp(np.where(pos, -z, 0))
        e_pos = np.exp(np.where(pos, 0, z))
        out = np.where(pos, 1.0 / (1.0 + e_neg), e_pos / (e_pos + 1.0))
    return out[()] if out.ndim == 0 else out


def log_ratio(w):
    """Principal log(w / (1 - w)); the cut of the branch with arg in (0, 2 pi) is (0, 1)."""
    w = np.asarray(w, complex)
    return np.log(w) - np.log1p(-w)


def exp_tilde_inverse(w, ref=None):
    """Preimage of w: y in [0, 2 pi) by default, otherwise the copy nearest ``ref``."""
    z = log_ratio(w)
    if ref is None:
        return z.real + 1j * np.mod(z.imag, 2 * np.pi)
    k = np.round((np.asarray(ref).imag - z.imag) / (2 * np.pi))
    return z + 2j * np.pi * k


def vertical_line_circle(x: float) -> tuple[float, float]:
    """Center (real) and radius of the image circle of the vertical line Re z = x."""
    e2 = np.exp(2 * x)
    return float(e2 / (e2 - 1)), float(abs(np.exp(x) / (e2 - 1)))


def _ball_ratios(r: float, n: int = 1000) -> tuple[float, float]:
    th = np.linspace(0, 2 * np.pi, n, endpoint=False)
    m = np.abs(exp_tilde(np.pi * 1j + r * np.exp(1j * th)))
    return float(m.min() * 2 * r), float(m.max() * r / 2)


@lru_cache(maxsize=None)
def find_K(margin: float = BALL_MARGIN, n: int = 2000) -> float:
    """Largest r <= pi/2 (on a 1e-3 grid) with both annulus bounds held with margin
    on every circle |z - pi i| = s, s <= r."""
    rs = np.arange(1e-3, np.pi / 2 + 1e-12, 1e-3)
    ok = np.array([(lo >= 1 + margin) and (hi <= 1 / (1 + margin)) for lo, hi in
                   (_ball_ratios(r, n // 4) for r in rs)])
    bad = np.nonzero(~ok)[0]
    if len(bad) == 0:
        return float(rs[-1])
    if bad[0] == 0:
        raise GeometryError("ball-like", "no admissible radius")
    return float(rs[bad[0] - 1])


@dataclass(frozen=True)
class BallLikeCertificate:
    r: float
    K: float
    min_ball_modulus: float
    inner_bound: float
    max_outside_modulus: float
    outer_bound: float
    margin_inner: float
    margin_outer: float
    passed: bool


@dataclass(frozen=True)
class ExpWindow:
    W: float
    y_lo: float = -2 * np.pi
    y_hi: float = 2 * np.pi
    copies: tuple[int, ...] = (-3, -2, -1, 0, 1, 2)
    n: int = 1024

    @classmethod
    def for_tolerance(cls, tol: float, anchors=(), **kw) -> "ExpWindow":
        """W = max(ln(2/tol), 2 + max |Re| over anchor lifts)."""
        a = np.asarray(anchors, complex).ravel()
        span = float(np.max(np.abs(a.real))) if len(a) else 0.0
        return cls(max(np.log(2 / tol), 2.0 + span), **kw)

    @property
    def grid(self) -> Grid:
        return _window_grid(self.W, self.y_lo, self.y_hi, self.n)

    @property
    def cell_size(self) -> float:
        return self.grid.cell_size

    def poles(self, pad: float = 0.0) -> np.ndarray:
        """Pole indices n with (2n+1) pi inside the padded y-range."""
        lo = int(np.floor(((self.y_lo - pad) / np.pi - 1) / 2))
        hi = int(np.ceil(((self.y_hi + pad) / np.pi - 1) / 2))
        ns = np.arange(lo, hi + 1)
        y = (2 * ns + 1) * np.pi
        return ns[(y >= self.y_lo - pad) & (y <= self.y_hi + pad)]


@lru_cache(maxsize=8)
def _window_grid(W: float, y_lo: float, y_hi: float, n: int) -> Grid:
    return Grid.covering(-W, W, y_lo, y_hi, n)


def ball_like_check(window: ExpWindow, r: float, K: float | None = None,
                    n_boundary: int = 1000, n_sweep: int = 400,
                    margin: float = BALL_MARGIN) -> BallLikeCertificate:
    """Sampled check that exp~ maps pole balls E_n(r) outside B(0, 1/(2r)) and the
    window minus the balls into B(0, 2/r), each bound held with ``margin``."""
    K = find_K(margin) if K is None else K
    if not 0 < r <= K:
        raise GeometryError("radius-too-large", f"r = {r} outside (0, K = {K:.4g}]", witness=r)
    th = np.linspace(0, 2 * np.pi, n_boundary, endpoint=False)
    ns = window.poles()
    ring = ((2 * ns[:, None] + 1) * np.pi * 1j + r * np.exp(1j * th)[None]).ravel()
    inner = float(np.abs(exp_tilde(ring)).min())
    xs = np.linspace(-window.W, window.W, n_sweep)
    ys = np.linspace(window.y_lo, window.y_hi, n_sweep)
    Z = (xs[None, :] + 1j * ys[:, None]).ravel()
    yk = np.round((Z.imag / np.pi - 1) / 2)
    Z = Z[np.abs(Z - (2 * yk + 1) * np.pi * 1j) >= r]
    outer = float(max(np.abs(exp_tilde(Z)).max(), np.abs(exp_tilde(ring)).max()))
    lo, hi = 1 / (2 * r), 2 / r
    m_in, m_out = inner / lo - 1, hi / outer - 1
    return BallLikeCertificate(r, K, inner, lo, outer, hi, m_in, m_out,
                               bool(m_in >= margin and m_out >= margin))


# normalization

@dataclass(frozen=True, eq=False)
class Straightening:
    """Compactly supported homeomorphism taking a u-monotone polyline from 0 to b
    onto the segment [0, b].

    In coordinates u + iv = z / e^{i arg b}, each vertical fibre over u in
    [0, |b|] is mapped piecewise linearly so that v = f(u) goes to 0 and
    v = +-H stay fixed; every other point is fixed.
    """

    b: complex
    us: np.ndarray
    fs: np.ndarray
    H: float

    @classmethod
    def for_arc(cls, pts) -> "Straightening":
        z = np.asarray(pts, float)
        z = z[:, 0] + 1j * z[:, 1]
        if abs(z[0]) > 1e-12:
            raise GeometryError("not-a-crosscut", "arc must start at the origin")
        b = complex(z[-1])
        rot = z * np.exp(-1j * np.angle(b))
        us, fs = rot.real.copy(), rot.imag.copy()
        us[0], fs[0], fs[-1], us[-1] = 0.0, 0.0, 0.0, abs(b)
        if np.any(np.diff(us) <= 0):
            raise GeometryError("unsupported-crosscut",
                                "crosscut must be monotone in the direction of its chord")
        top = float(np.abs(fs).max())
        H = 1.5 * top if top > 0 else 0.0
        return cls(b, us, fs, H)

    @property
    def support_radius(self) -> float:
        return float(np.hypot(abs(self.b), self.H))

    @property
    def is_identity(self) -> bool:
        return self.H == 0.0

    def _apply(self, z, inverse: bool):
        z = np.asarray(z, complex)
        if self.is_identity:
            return z.copy()
        rot = np.exp(1j * np.angle(self.b))
        w = z / rot
        u, v = w.real, w.imag
        inside = (u >= 0) & (u <= abs(self.b)) & (np.abs(v) < self.H)
        F = np.interp(u, self.us, self.fs)
        H = self.H
        src, dst = (0.0 * F, F) if inverse else (F, 0.0 * F)
        below = v <= src
        lo = -H + (v + H) * (dst + H) / (src + H)
        hi = dst + (v - src) * (H - dst) / (H - src)
        v2 = np.where(inside, np.where(below, lo, hi), v)
        return (u + 1j * v2) * rot

    def forward(self, z):
        return self._apply(z, False)

    def inverse(self, z):
        return self._apply(z, True)


def _to_c(a) -> np.ndarray:
    a = np.asarray(a, float)
    return a[..., 0] + 1j * a[..., 1]


def _to_xy(z) -> np.ndarray:
    z = np.asarray(z, complex)
    return np.stack([z.real, z.imag], axis=-1)


def insert_vertex(h: Isotopy, component: int, segment: int, s: float, snap: float = 1e-9):
    """Add a vertex at fraction s of a segment in the base and every keyframe.

    Returns the new isotopy and the vertex index (an existing vertex is reused
    when s is within ``snap`` of an end)."""
    v = h.base.components[component].vertices
    n = len(v)
    if s <= snap:
        return h, segment % n
    if s >= 1 - snap:
        return h, (segment + 1) % n
    return _insert_fractions(h, component, {segment: [s]}), segment + 1


def _insert_fractions(h: Isotopy, component: int, fracs: dict) -> Isotopy:
    def grow(v):
        n = len(v)
        closed = h.base.components[component].polyline.closed
        out = []
        for k in range(n):
            out.append(v[k])
            if k in fracs and (closed or k < n - 1):
                a, b = v[k], v[(k + 1) % n]
                out.extend(a + s * (b - a) for s in sorted(fracs[k]))
        return np.array(out)

    base = h.base.moved([grow(c.vertices) if i == component else c.vertices
                         for i, c in enumerate(h.base.components)])
    frames = tuple(tuple(grow(v) if i == component else v for i, v in enumerate(fr))
                   for fr in h.frames)
    return Isotopy(base, h.times, frames)


def densify_near(h: Isotopy, center_fn, radius: float, spacing: float) -> Isotopy:
    """Subdivide segments inside B(center(t), radius) at every keyframe to ``spacing``."""
    for ci, comp in enumerate(h.base.components):
        closed = comp.polyline.closed
        fracs: dict = {}
        n = len(comp.vertices)
        for k in range(n if closed else n - 1):
            lo, hi = 1.0, 0.0
            for t, fr in zip(h.times, h.frames):
                a, b = fr[ci][k], fr[ci][(k + 1) % n]
                c = np.asarray(center_fn(t), float)
                d = b - a
                L2 = float(d @ d)
                if L2 == 0:
                    continue
                # fractions where |a + s d - c| <= radius
                p = (c - a) @ d / L2
                q = (float((a - c) @ (a - c)) - radius ** 2) / L2
                disc = p * p - q
                if disc <= 0:
                    continue
                s0, s1 = max(0.0, p - np.sqrt(disc)), min(1.0, p + np.sqrt(disc))
                if s0 < s1:
                    lo, hi = min(lo, s0), max(hi, s1)
            if lo < hi:
                L = float(np.hypot(*(h.base.components[ci].vertices[(k + 1) % n]
                                     - h.base.components[ci].vertices[k])))
                m = int(np.ceil((hi - lo) * L / spacing))
                ss = np.linspace(lo, hi, m + 1)
                ss = ss[(ss > 1e-12) & (ss < 1 - 1e-12)]
                if len(ss):
                    fracs[k] = list(ss)
        if fracs:
            h = _insert_fractions(h, ci, fracs)
    return h


@dataclass(frozen=True, eq=False)
class NormalizedFrame:
    """Normalization data: w = Theta(x^t - a^t) / Theta(b^t - a^t)."""

    h: Isotopy
    a_loc: tuple[int, int]
    b_loc: tuple[int, int]
    theta: Straightening
    Q: Polyline

    @property
    def theta_support_radius(self) -> float:
        return 2.0 * float(_diam(self.Q.vertices))

    def a_t(self, t: float) -> complex:
        return complex(_to_c(self.h.positions(t)[self.a_loc[0]][self.a_loc[1]]))

    def b_t(self, t: float) -> complex:
        """Theta(b^t) in the frame translated so that a^t = 0."""
        b = complex(_to_c(self.h.positions(t)[self.b_loc[0]][self.b_loc[1]])) - self.a_t(t)
        return complex(self.theta.forward(b))

    def scale_t(self, t: float) -> complex:
        return 1.0 / self.b_t(t)

    def components_at(self, t: float) -> list[np.ndarray]:
        a, s = self.a_t(t), self.scale_t(t)
        out = [self.theta.forward(_to_c(v) - a) * s for v in self.h.positions(t)]
        out[self.a_loc[0]][self.a_loc[1]] = 0.0
        out[self.b_loc[0]][self.b_loc[1]] = 1.0
        return out

    def closed_flags(self) -> list[bool]:
        return [c.polyline.closed for c in self.h.base.components]

    def to_original(self, w, t: float) -> np.ndarray:
        """(L^t o Theta)^{-1} followed by the translation back by a^t."""
        return self.theta.inverse(np.asarray(w, complex) * self.b_t(t)) + self.a_t(t)


def _diam(v) -> float:
    v = np.asarray(v, float)
    d = v[:, None] - v[None]
    return float(np.sqrt((d ** 2).sum(-1)).max())


def normalize(X: Compactum, h: Isotopy, Q, tol: float = 1e-9) -> NormalizedFrame:
    """Put a at 0 for all t and straighten Q onto [0, b] with a compactly
    supported homeomorphism; X is densified inside the support first."""
    cc = make_crosscut(X, Q.vertices if isinstance(Q, Polyline) else Q, tol=tol)
    pts = cc.arc.vertices
    la = locate(X, pts[0], tol)
    h, ia = insert_vertex(h, la.component, la.segment, la.s)
    lb = locate(h.base, pts[-1], tol)
    h, ib = insert_vertex(h, lb.component, lb.segment, lb.s)
    if lb.component == la.component and ib <= ia and lb.s > 1e-9 and lb.s < 1 - 1e-9:
        ia += 1  # b was inserted before a
    a0 = h.base.components[la.component].vertices[ia]
    theta = Straightening.for_arc(pts - a0)
    R = theta.support_radius
    if not theta.is_identity:
        loc = (la.component, ia)
        def center(t, loc=loc, hh=[h]):
            return hh[0].positions(t)[loc[0]][loc[1]]
        h2 = densify_near(h, center, 1.2 * R, R / 200)
        # recover the indices of a and b after subdivision
        ia2 = int(np.argmin(np.hypot(*(h2.base.components[la.component].vertices - a0).T)))
        b0 = pts[-1]
        ib2 = int(np.argmin(np.hypot(*(h2.base.components[lb.component].vertices - b0).T)))
        h, ia, ib = h2, ia2, ib2
    return NormalizedFrame(h, (la.component, ia), (lb.component, ib), theta,
                           Polyline(pts - a0))


@dataclass(frozen=True)
class SizesReport:
    fixed_points: bool
    segment_clear: bool
    escape_bound_ok: bool
    escape_ratio: float
    far_point_ok: bool
    far_ratio: float


def sizes_check(nf: NormalizedFrame, nu: float, samples: int = 33) -> SizesReport:
    """Numerical check of the normalized-isotopy properties on sampled times.

    escape_ratio: max |w^t| |Theta(b^t)| / nu over vertices that ever sit on (0, 1)
    far_ratio: min over components of max over vertices of min_t |w^t| |Theta(b^t)|
    """
    ts = np.unique(np.concatenate([np.linspace(0, 1, samples), nf.h.breakpoints()]))
    W = np.stack([np.concatenate(nf.components_at(t)) for t in ts])
    bt = np.array([abs(nf.b_t(t)) for t in ts])
    sizes = [len(c.vertices) for c in nf.h.base.components]
    offs = np.cumsum([0] + sizes)
    ia = offs[nf.a_loc[0]] + nf.a_loc[1]
    ib = offs[nf.b_loc[0]] + nf.b_loc[1]
    fixed = bool(np.allclose(W[:, ia], 0) and np.allclose(W[:, ib], 1))
    on_seg = (np.abs(W.imag) < 1e-12) & (W.real > 0) & (W.real < 1)
    on_seg[:, [ia, ib]] = False
    clear = not on_seg[0].any()
    ever = on_seg.any(axis=0)
    esc = float((np.abs(W[:, ever]) * bt[:, None]).max() / nu) if ever.any() else 0.0
    scaled = np.abs(W) * bt[:, None]
    far = min(float(scaled[:, offs[i]:offs[i + 1]].min(axis=0).max()) for i in range(len(sizes)))
    return SizesReport(fixed, clear, esc < 1.0, esc, far >= 1.0, far)


# lifts

@dataclass(frozen=True, eq=False)
class LiftedPiece:
    component: int
    piece: int
    copy: int
    points: np.ndarray
    side: str
    unbounded_left: bool
    unbounded_right: bool
    touches_endpoints: bool

    @property
    def above(self) -> bool:
        return self.side == "A"


@dataclass(frozen=True, eq=False)
class StripComponents:
    t: float
    pieces: tuple[LiftedPiece, ...]
    refs: dict
    pole_radius: float
    W: float

    def side(self, s: str) -> list[LiftedPiece]:
        return [p for p in self.pieces if p.side == s]

    def segments(self, s: str) -> np.ndarray:
        out = []
        for p in self.side(s):
            z = p.points
            if len(z) > 1:
                xy = _to_xy(z)
                out.append(np.stack([xy[:-1], xy[1:]], axis=1))
            else:
                out.append(np.stack([_to_xy(z), _to_xy(z)], axis=1))
        return np.concatenate(out) if out else np.zeros((0, 2, 2))

    def pole_disks(self, s: str, ns) -> list[tuple[complex, float]]:
        keep = [n for n in ns if (n >= 0) == (s == "A")]
        return [((2 * n + 1) * np.pi * 1j, self.pole_radius) for n in keep]


class TimeRefinement(Exception):
    """Raised when consecutive frames are too far apart to track branches."""


def _split_at_endpoints(w: np.ndarray, closed: bool, cut: float):
    """Pieces of a vertex loop/arc cut at vertices lying exactly at 0 or 1.

    A cut vertex is replaced by the point at distance ``cut`` from it on the
    adjacent segment.  Returns a list of (points, start_kind, end_kind) where a
    kind is 'L' (cut at 0), 'R' (cut at 1) or ''.
    """
    w = np.asarray(w, complex)
    sing = (w == 0) | (w == 1)
    if not sing.any():
        return [(np.append(w, w[0]) if closed else w.copy(), "", "")]
    if closed:
        s0 = int(np.nonzero(sing)[0][0])
        order = np.r_[np.arange(s0, len(w)), np.arange(0, s0 + 1)]
    else:
        order = np.arange(len(w))
    cuts = [k for k, j in enumerate(order) if sing[j]]
    bounds = sorted(set([0, len(order) - 1] + cuts))
    pieces = []
    for a, b in zip(bounds, bounds[1:]):
        ids = order[a:b + 1]
        if len(ids) < 2:
            continue
        pts = w[ids].copy()
        kinds = ["", ""]
        for end, p, q in ((0, 0, 1), (1, -1, -2)):
            if sing[ids[p]]:
                s, d = pts[p], pts[q] - pts[p]
                pts[p] = s + d * min(cut / abs(d), 0.5)
                kinds[end] = "L" if s == 0 else "R"
        pieces.append((pts, kinds[0], kinds[1]))
    return pieces


def _lift_curve(w: np.ndarray, max_step: float, z0_ref=None, max_iter: int = 60) -> np.ndarray:
    """Lift a normalized polyline by continuity, subdividing until lifted steps
    are at most ``max_step``."""
    P = np.asarray(w, complex)
    for _ in range(max_iter):
        z = log_ratio(P)
        d = np.diff(z)
        dy = np.mod(d.imag + np.pi, 2 * np.pi) - np.pi
        step = np.hypot(d.real, dy)
        big = step > max_step
        if not big.any():
            break
        k = np.nonzero(big)[0]
        P = np.insert(P, k + 1, 0.5 * (P[k] + P[k + 1]))
    else:
        raise GeometryError("lift-resolution", "subdivision did not converge")
    z = log_ratio(P)
    dy = np.mod(np.diff(z.imag) + np.pi, 2 * np.pi) - np.pi
    y = np.concatenate([[z.imag[0]], z.imag[0] + np.cumsum(dy)])
    if z0_ref is None:
        y = y + (np.mod(y[0], 2 * np.pi) - y[0])
    else:
        y = y + 2 * np.pi * np.round((z0_ref.imag - y[0]) / (2 * np.pi))
    return z.real + 1j * y


def lift_compactum(components, closed, window: ExpWindow, pole_radius: float, t: float = 0.0,
                   refs: dict | None = None, cell: float | None = None) -> StripComponents:
    """Lift normalized components under exp~ into the strips of the window.

    Without ``refs`` the lift starts in the strip 0 < y < 2 pi, which requires
    the normalized set to avoid (0, 1).  With ``refs`` each piece's first point
    takes the copy nearest its previous lift (branch tracking in time).
    """
    cell = window.cell_size if cell is None else cell
    cut = float(np.exp(-(window.W + 1.0)))
    pieces_out, new_refs = [], {}
    for ci, (w, cl) in enumerate(zip(components, closed)):
        touches = bool(np.any((w == 0) | (w == 1)))
        for pi, (pts, k0, k1) in enumerate(_split_at_endpoints(np.asarray(w, complex), cl, cut)):
            key = (ci, pi)
            ref = None if refs is None else refs.get(key)
            z = _lift_curve(pts, 0.5 * cell, ref)
            if ref is not None and abs(z[0] - ref) > np.pi / 2:
                raise TimeRefinement(key)
            if refs is None and (np.any(z.imag <= 0) or np.any(z.imag >= 2 * np.pi)):
                raise GeometryError("crosscut-not-cleared",
                                    "normalized compactum meets the open segment (0, 1)",
                                    witness=(ci, pi))
            if cl and not touches and abs(z[-1] - z[0]) > 1e-6:
                raise GeometryError("lift-not-closed", "a lifted loop does not close", witness=key)
            new_refs[key] = z[0]
            ul = "L" in (k0, k1)
            ur = "R" in (k0, k1)
            for k in window.copies:
                pieces_out.append(LiftedPiece(ci, pi, k, z + 2j * np.pi * k, "A" if k >= 0 else "B",
                                              ul, ur, touches))
    return StripComponents(t, tuple(pieces_out), new_refs, pole_radius, window.W)


def _edge_crossings(z: np.ndarray, x: float) -> np.ndarray:
    """y-values where the polyline z crosses the vertical line Re = x."""
    a, b = z[:-1], z[1:]
    s = (a.real - x) * (b.real - x)
    k = np.nonzero(s <= 0)[0]
    out = []
    for j in k:
        dx = b[j].real - a[j].real
        f = 0.5 if dx == 0 else (x - a[j].real) / dx
        out.append(a[j].imag + f * (b[j].imag - a[j].imag))
    return np.asarray(out)


@dataclass(frozen=True)
class DichotomyCertificate:
    passed: bool
    n_pairs: int
    n_frames: int
    min_gap: float


def dichotomy_check(frames, x_edge: float | None = None) -> DichotomyCertificate:
    """Every A piece unbounded on a side lies above every B piece unbounded on
    that side, compared by max and min y on the window-edge vertical line."""
    n_pairs, gap = 0, np.inf
    for sc in frames:
        xe = sc.W if x_edge is None else x_edge
        for side, x in (("left", -xe), ("right", xe)):
            flag = "unbounded_left" if side == "left" else "unbounded_right"
            A = [(p, _edge_crossings(p.points, x)) for p in sc.side("A") if getattr(p, flag)]
            B = [(p, _edge_crossings(p.points, x)) for p in sc.side("B") if getattr(p, flag)]
            for pa, ya in A:
                if len(ya) == 0:
                    continue
                for pb, yb in B:
                    if len(yb) == 0:
                        continue
                    n_pairs += 1
                    g = min(ya.max() - yb.max(), ya.min() - yb.min())
                    gap = min(gap, g)
                    if g <= 0:
                        raise GeometryError("dichotomy-violated", "B piece is not below A piece",
                                            witness=(sc.t, x, (pa.component, pa.copy),
                                                     (pb.component, pb.copy)))
    return DichotomyCertificate(True, n_pairs, len(frames), float(gap))


def anchor_check(sc: StripComponents) -> float:
    """Largest distance from a piece that avoids {0, 1} to its strip's pole,
    divided by the pole-ball radius (at most 1 means every piece meets its ball)."""
    worst = 0.0
    for p in sc.pieces:
        if p.touches_endpoints:
            continue
        n = int(np.floor(np.median(p.points.imag) / (2 * np.pi)))
        d = float(np.abs(p.points - (2 * n + 1) * np.pi * 1j).min())
        worst = max(worst, d / sc.pole_radius)
    return worst


# moving equidistant curve and path assembly

@dataclass(frozen=True, eq=False)
class EquiManifoldFrame:
    t: float
    M_t: OneManifold
    curve: np.ndarray
    gamma_tilde_t: PathRecord
    gamma_t: PathRecord
    clearance: float
    lifts: StripComponents


def m_disjoint_radius(theta_b: complex, nu: float) -> float:
    return (1 - nu) * abs(theta_b) / (4 * nu)


def _main_curve(M: OneManifold, grid: Grid) -> np.ndarray:
    """The single open curve of M with x-projection onto the node window, left to right."""
    x0, x1 = grid.xs[0], grid.xs[-1]
    tol = 1e-9 * max(1.0, abs(x0), abs(x1))
    if len(M.curves) != 1 or M.curves[0].closed:
        raise GeometryError("manifold-structure",
                            f"expected one open curve, found {len(M.lines)} arcs and {len(M.loops)} loops",
                            witness=len(M.curves))
    v = M.curves[0].vertices
    if v[:, 0].min() > x0 + tol or v[:, 0].max() < x1 - tol:
        raise GeometryError("manifold-structure", "vertical projection does not cover the window")
    if v[0, 0] > v[-1, 0]:
        v = v[::-1]
    return _to_c(v)


def equidistant_frame(nf: NormalizedFrame, params: PipelineParams, window: ExpWindow,
                      t: float, refs=None, interlacing_budget: int = 0) -> EquiManifoldFrame:
    grid = window.grid
    tb = nf.b_t(t)
    sc = lift_compactum(nf.components_at(t), nf.closed_flags(), window, abs(tb) / 2, t, refs,
                        grid.cell_size)
    ns = window.poles(pad=2 * np.pi)
    A, B = sc.segments("A"), sc.segments("B")
    dA, dB = sc.pole_disks("A", ns), sc.pole_disks("B", ns)
    if interlacing_budget:
        rep = non_interlaced_test(A, B, grid, budget=interlacing_budget, n_random=0,
                                  disks1=dA, disks2=dB)
        if not rep.passed:
            raise GeometryError("interlaced", f"A and B interlace at t = {t}", witness=rep.witness)
    M = equidistant_set(A, B, grid, dA, dB)
    validate_manifold(M)
    curve = _main_curve(M, grid)
    R = m_disjoint_radius(tb, params.nu)
    poles = (2 * window.poles(pad=np.pi) + 1) * np.pi * 1j
    clear = float((np.abs(curve[:, None] - poles[None]) - R).min())
    gt = assemble_path(curve, nf, t)
    return EquiManifoldFrame(t, M, curve, gt[0], gt[1], clear, sc)


def assemble_path(curve: np.ndarray, nf: NormalizedFrame, t: float) -> tuple[PathRecord, PathRecord]:
    """gamma~ = exp~(M) with endpoints 0 and 1; gamma = its pullback to the original plane."""
    w = np.concatenate([[0.0], exp_tilde(curve), [1.0]])
    gt = PathRecord(Polyline.from_points(_to_xy(w)), t, (True, True))
    g = nf.to_original(w, t)
    return gt, PathRecord(Polyline.from_points(_to_xy(g)), t, (True, True))


def moving_equidistant(nf: NormalizedFrame, params: PipelineParams, window: ExpWindow,
                       times, interlacing_every: int = 0, interlacing_budget: int = 200,
                       max_inserts: int = 64, refine_ratio: float = 3.0,
                       progress=None) -> list[EquiManifoldFrame]:
    """Frames of M_t in time order with branch tracking; adds midpoint frames
    where tracking needs them and where the Hausdorff step of M_t exceeds
    ``refine_ratio`` times the median step."""
    pending = sorted(set(float(t) for t in times))
    frames: list[EquiManifoldFrame] = []
    refs = None
    inserts = 0
    i = 0
    while i < len(pending):
        t = pending[i]
        budget = interlacing_budget if interlacing_every and i % interlacing_every == 0 else 0
        try:
            fr = equidistant_frame(nf, params, window, t, refs, budget)
        except TimeRefinement:
            if not frames or inserts >= max_inserts:
                raise GeometryError("time-resolution", f"cannot track lifts up to t = {t}")
            pending.insert(i, 0.5 * (frames[-1].t + t))
            inserts += 1
            continue
        frames.append(fr)
        refs = fr.lifts.refs
        if progress:
            progress(fr)
        i += 1
    if refine_ratio and len(frames) > 2 and inserts < max_inserts:
        steps = np.array([path_hausdorff(Polyline(_to_xy(a.curve)), Polyline(_to_xy(b.curve)))
                          for a, b in zip(frames, frames[1:])])
        thresh = max(refine_ratio * float(np.median(steps)), window.cell_size)
        for k in np.nonzero(steps > thresh)[0][: max_inserts - inserts]:
            tm = 0.5 * (frames[k].t + frames[k + 1].t)
            frames.append(equidistant_frame(nf, params, window, tm, frames[k].lifts.refs))
        frames.sort(key=lambda f: f.t)
    return frames


@dataclass(frozen=True, eq=False)
class PipelineResult:
    params: PipelineParams
    window: ExpWindow
    frames: tuple[EquiManifoldFrame, ...]
    diameters: np.ndarray
    modulus: ModulusReport
    homotopy: object
    dichotomy: DichotomyCertificate
    sizes: SizesReport
    K: float

    def gammas(self) -> list[PathRecord]:
        return [f.gamma_t for f in self.frames]

    @property
    def min_clearance(self) -> float:
        return float(min(f.clearance for f in self.frames))


def assemble_gamma(frames, nf: NormalizedFrame, params: PipelineParams, X0: Compactum | None = None):
    """Check the path family: diameters below epsilon, Hausdorff continuity and
    (given X at t=0) homotopy of gamma_0 to Q rel endpoints."""
    gammas = [f.gamma_t for f in frames]
    diams = np.array([_diam(g.vertices) for g in gammas])
    bad = np.nonzero(diams >= params.epsilon)[0]
    if len(bad):
        raise GeometryError("epsilon-violated", f"diam(gamma_t) >= epsilon at t = {frames[bad[0]].t}",
                            witness=frames[bad[0]].t)
    modulus = family_hausdorff_modulus(gammas)
    hom = None
    if X0 is not None:
        q = nf.Q.vertices + nf.h.positions(0.0)[nf.a_loc[0]][nf.a_loc[1]]
        hom = homotopic_rel_endpoints(gammas[0], PathRecord(Polyline(q)), X0, tol=1e-9)
    return gammas, diams, modulus, hom


def run_pipeline(X: Compactum, h: Isotopy, Q, params: PipelineParams, n_steps: int = 64,
                 grid_n: int = 1024, interlacing_every: int = 16, progress=None) -> PipelineResult:
    dq = _diam(np.asarray(Q, float))
    if not dq < params.delta:
        raise GeometryError("crosscut-too-large", f"diam(Q) = {dq:.3g} is not below delta = {params.delta:.3g}",
                            witness=dq)
    nf = normalize(X, h, Q)
    sizes = sizes_check(nf, params.nu)
    K = find_K()
    window = ExpWindow.for_tolerance(params.tol, n=grid_n)
    times = np.linspace(0.0, 1.0, n_steps + 1)
    frames = moving_equidistant(nf, params, window, times, interlacing_every, progress=progress)
    dich = dichotomy_check([f.lifts for f in frames])
    _, diams, modulus, hom = assemble_gamma(frames, nf, params, nf.h.evaluate(0.0))
    return PipelineResult(params, window, tuple(frames), diams, modulus, hom, dich, sizes, K)
