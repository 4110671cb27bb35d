"""Hyperbolic geometry of the unit disk with metric 2|dz| / (1 - |z|^2).

Points are complex numbers.  Geodesics are diameters or arcs of circles
orthogonal to the unit circle; a hull inside an arbitrary round disk is stored
in the unit-disk coordinates of that disk.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError

TOL = 1e-9


def _on_circle(z: complex) -> bool:
    return abs(abs(z) - 1.0) <= TOL


@dataclass(frozen=True)
class DiskGeodesic:
    """Geodesic of the unit disk with ideal endpoints ``a`` and ``b``."""

    kind: str  # "diameter" or "orthocircle"
    a: complex
    b: complex
    center: complex = 0j
    radius: float = np.inf

    def sample(self, n: int = 64) -> np.ndarray:
        """Points from a to b along the geodesic (endpoints included)."""
        s = np.linspace(0.0, 1.0, n)
        if self.kind == "diameter":
            return self.a + s * (self.b - self.a)
        c, r = self.center, self.radius
        ta, tb = np.angle(self.a - c), np.angle(self.b - c)
        d = np.angle(np.exp(1j * (tb - ta)))  # the short way round stays in the disk
        return c + r * np.exp(1j * (ta + s * d))

    def distance_to(self, z) -> np.ndarray:
        """Euclidean distance from z to the full carrier line or circle."""
        z = np.asarray(z, complex)
        if self.kind == "diameter":
            u = (self.b - self.a) / abs(self.b - self.a)
            return np.abs((z * np.conj(u)).imag)
        return np.abs(np.abs(z - self.center) - self.radius)

    def side(self, z) -> np.ndarray:
        """+1 / -1 for the two half-planes the geodesic cuts the disk into."""
        z = np.asarray(z, complex)
        if self.kind == "diameter":
            return np.sign(((self.b - self.a).conjugate() * (z - self.a)).imag)
        return np.sign(np.abs(z - self.center) ** 2 - self.radius ** 2)


def geodesic_between(a: complex, b: complex) -> DiskGeodesic:
    """The geodesic with ideal endpoints a and b on the unit circle."""
    a, b = complex(a), complex(b)
    if not (_on_circle(a) and _on_circle(b)):
        raise GeometryError("not-in-disk", "geodesic endpoints must lie on the unit circle",
                            witness=(a, b))
    if abs(a - b) <= TOL:
        raise GeometryError("degenerate-chord", "coincident endpoints", witness=a)
    s = a + b
    if abs(s) <= TOL:
        return DiskGeodesic("diameter", a, b)
    c = 2.0 * s / abs(s) ** 2
    return DiskGeodesic("orthocircle", a, b, c, float(np.sqrt(abs(c) ** 2 - 1.0)))


def hyperbolic_distance(p, q) -> float:
    p, q = complex(p), complex(q)
    if abs(p) >= 1.0 or abs(q) >= 1.0:
        raise GeometryError("not-in-disk", "points must lie in the open unit disk", witness=(p, q))
    return float(2.0 * np.arctanh(abs(p - q) / abs(1.0 - np.conj(p) * q)))


def _mobius(z, w):
    """Disk automorphism sending w to 0."""
    return (z - w) / (1.0 - np.conj(w) * z)


def _mobius_inv(z, w):
    return (z + w) / (1.0 + np.conj(w) * z)


def on_geodesic(g: DiskGeodesic, z: complex, tol: float = TOL) -> bool:
    return abs(z) < 1.0 and float(g.distance_to(z)) <= tol


def point_at_hyperbolic_arclength(g: DiskGeodesic, anchor: complex, s: float) -> complex:
    """Point of g at signed hyperbolic distance s from anchor (positive toward b)."""
    anchor = complex(anchor)
    if not on_geodesic(g, anchor, 1e-7):
        raise GeometryError("anchor-off-geodesic", "anchor is not on the geodesic", witness=anchor)
    u = _mobius(g.b, anchor)
    u /= abs(u)
    return complex(_mobius_inv(np.tanh(s / 2.0) * u, anchor))


def signed_arclength(g: DiskGeodesic, anchor: complex, z: complex) -> float:
    """Inverse of point_at_hyperbolic_arclength for z on g."""
    w = _mobius(complex(z), complex(anchor))
    u = _mobius(g.b, complex(anchor))
    return float(2.0 * np.arctanh(abs(w)) * np.sign((w * np.conj(u)).real or 1.0))


@dataclass(frozen=True, eq=False)
class HyperbolicHull:
    """Hyperbolic convex hull of ideal points of a round carrier disk.

    ``angles`` are the sorted boundary points (radians, in the carrier);
    ``sides`` are unit-disk geodesics between circularly consecutive points.
    ``whole`` marks a hull equal to the closed carrier disk (contacts cover
    the circle), which has no sides.
    """

    center: complex
    radius: float
    angles: np.ndarray
    sides: tuple[DiskGeodesic, ...]
    whole: bool = False

    def to_unit(self, z):
        return (np.asarray(z, complex) - self.center) / self.radius

    def to_world(self, w):
        return self.center + self.radius * np.asarray(w, complex)

    def side_polylines(self, n: int = 64) -> list[np.ndarray]:
        return [self.to_world(g.sample(n)) for g in self.sides]

    def margin(self, z) -> np.ndarray:
        """Signed Euclidean clearance of z inside the hull (world units).

        Positive inside, negative outside; for a two-point hull (a single
        chord) the value is minus the distance to the chord carrier.
        """
        w = np.atleast_1d(self.to_unit(z))
        m = (1.0 - np.abs(w))
        if self.whole:
            return self.radius * m
        if len(self.sides) == 1:
            return -self.radius * self.sides[0].distance_to(w)
        for g, ref in zip(self.sides, self._reference_points()):
            sgn = g.side(ref)
            m = np.minimum(m, sgn * g.side(w) * g.distance_to(w))
        return self.radius * m

    def _reference_points(self) -> list[complex]:
        # for side k (angle k -> k+1) a boundary point on the far arc k+1 -> k
        th = self.angles
        n = len(th)
        out = []
        for k in range(n):
            t0, t1 = th[k], th[(k + 1) % n]
            gap = (t0 - t1) % (2 * np.pi)
            out.append(np.exp(1j * (t1 + 0.5 * gap)))
        return out

    def contains(self, z, tol: float = 0.0) -> np.ndarray:
        return self.margin(z) >= -tol


def hyperbolic_hull(center: complex, radius: float, boundary_pts, tol: float = TOL,
                    whole: bool = False) -> HyperbolicHull:
    """Hull of points on the circle |z - center| = radius."""
    center = complex(center)
    pts = (np.asarray(boundary_pts, complex).ravel() - center) / radius
    if np.any(np.abs(np.abs(pts) - 1.0) > 1e-6):
        raise GeometryError("not-in-disk", "boundary points are not on the carrier circle")
    th = np.sort(np.mod(np.angle(pts), 2 * np.pi))
    if len(th) > 1:
        keep = np.ones(len(th), bool)
        keep[1:] = np.diff(th) > tol
        if len(th) > 2 and (th[0] + 2 * np.pi - th[-1]) <= tol:
            keep[-1] = False
        th = th[keep]
    if whole:
        return HyperbolicHull(center, float(radius), th, (), True)
    if len(th) < 2:
        raise GeometryError("degenerate-hull", "a hull needs at least two boundary points")
    u = np.exp(1j * th)
    if len(th) == 2:
        sides = (geodesic_between(u[0], u[1]),)
    else:
        sides = tuple(geodesic_between(u[k], u[(k + 1) % len(u)]) for k in range(len(u)))
    return HyperbolicHull(center, float(radius), th, sides, False)
