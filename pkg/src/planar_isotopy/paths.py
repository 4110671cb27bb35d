"""Paths as polylines: length, arc midpoint, Hausdorff continuity of a
family, and homotopy rel endpoints by winding numbers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .compacta import Compactum
from .errors import GeometryError
from .planar import Point, Polyline, SegmentIndex, densify, interior_point


@dataclass(frozen=True, eq=False)
class PathRecord:
    polyline: Polyline
    t: float = 0.0
    endpoints_on_boundary: tuple[bool, bool] = (False, False)

    def __post_init__(self):
        if self.polyline.closed:
            raise GeometryError("degenerate-path", "path must be an open polyline")
        if len(self.polyline.vertices) < 2:
            raise GeometryError("degenerate-path", "path needs two vertices")
        if not 0.0 <= self.t <= 1.0:
            raise GeometryError("time-range", f"t = {self.t}")

    @classmethod
    def from_points(cls, pts, t: float = 0.0) -> "PathRecord":
        return cls(Polyline.from_points(pts), t)

    @property
    def vertices(self) -> np.ndarray:
        return self.polyline.vertices

    @property
    def start(self) -> np.ndarray:
        return self.polyline.vertices[0]

    @property
    def end(self) -> np.ndarray:
        return self.polyline.vertices[-1]

    def reversed(self) -> "PathRecord":
        return PathRecord(Polyline(self.vertices[::-1].copy()), self.t, self.endpoints_on_boundary[::-1])


def path_length(p: PathRecord) -> float:
    return float(np.hypot(*np.diff(p.vertices, axis=0).T).sum())


def point_at_length(vertices: np.ndarray, s: float) -> np.ndarray:
    """Point at arclength ``s`` along a vertex array (clamped to the ends)."""
    L = np.hypot(*np.diff(vertices, axis=0).T)
    cum = np.concatenate([[0.0], np.cumsum(L)])
    s = min(max(s, 0.0), cum[-1])
    k = int(np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(L) - 1))
    if L[k] == 0:
        return vertices[k].copy()
    return vertices[k] + (s - cum[k]) / L[k] * (vertices[k + 1] - vertices[k])


def midpoint(p: PathRecord) -> Point:
    """Point at half the length; the same point for either orientation."""
    v = p.vertices
    total = path_length(p)
    if total <= 0:
        raise GeometryError("degenerate-path", "zero-length path")
    a = point_at_length(v, 0.5 * total)
    b = point_at_length(v[::-1], 0.5 * total)
    m = 0.5 * (a + b)  # equal up to rounding; averaging keeps the result orientation-free
    return Point(float(m[0]), float(m[1]))


def path_hausdorff(a: Polyline, b: Polyline, samples: int = 2000) -> float:
    """Hausdorff distance of two polyline images.

    Each side is densified to ``samples`` points per unit of the shorter
    length and measured exactly against the other side's segments, so the
    error is at most half the sample spacing.
    """
    la = float(np.hypot(*np.diff(a.vertices, axis=0).T).sum()) if len(a.vertices) > 1 else 0.0
    lb = float(np.hypot(*np.diff(b.vertices, axis=0).T).sum()) if len(b.vertices) > 1 else 0.0
    lens = [v for v in (la, lb) if v > 0]
    step = (min(lens) if lens else 1.0) / samples

    def one_way(p: Polyline, q: Polyline) -> float:
        pts = densify(p.vertices, step, p.closed) if len(p.vertices) > 1 else p.vertices
        if len(q.vertices) == 1:
            return float(np.hypot(*(pts - q.vertices[0]).T).max())
        return float(SegmentIndex(q.segments()).query(pts).max())

    return max(one_way(a, b), one_way(b, a))


@dataclass(frozen=True)
class ModulusReport:
    modulus: float
    max_jump: float
    jump_index: int
    steps: tuple[float, ...]


def family_hausdorff_modulus(family) -> ModulusReport:
    """Largest Hausdorff distance between consecutive images, per unit time and raw."""
    fam = sorted(family, key=lambda p: p.t)
    if len(fam) < 2:
        raise GeometryError("too-few-samples", "need at least two time samples")
    steps, ratios = [], []
    for a, b in zip(fam, fam[1:]):
        d = path_hausdorff(a.polyline, b.polyline)
        steps.append(float(d))
        dt = b.t - a.t
        ratios.append(d / dt if dt > 0 else (0.0 if d == 0 else np.inf))
    k = int(np.argmax(steps))
    return ModulusReport(float(max(ratios)), steps[k], k, tuple(steps))


def winding_number(loop: np.ndarray, z) -> int:
    """Winding number of a closed vertex loop about z (crossing-number rule)."""
    P = np.asarray(loop, float)
    z = complex(z)
    x, y = P[:, 0] - z.real, P[:, 1] - z.imag
    x1, y1 = np.roll(x, -1), np.roll(y, -1)
    cross = x * y1 - x1 * y
    up = (y <= 0) & (y1 > 0) & (cross > 0)
    down = (y > 0) & (y1 <= 0) & (cross < 0)
    return int(up.sum() - down.sum())


def component_representatives(X: Compactum) -> list[complex]:
    """One point per component lying in the component or in its filled interior."""
    out = []
    for c in X.components:
        if c.filled:
            p = interior_point(c.vertices)
            out.append(complex(p[0], p[1]))
        else:
            v = c.vertices[0]
            out.append(complex(v[0], v[1]))
    return out


@dataclass(frozen=True)
class HomotopyCertificate:
    homotopic: bool
    windings: tuple[int, ...]

    def __bool__(self) -> bool:
        return self.homotopic


def homotopic_rel_endpoints(p: PathRecord, q: PathRecord, X_frame: Compactum,
                            tol: float = 1e-9) -> HomotopyCertificate:
    """Zero winding of p followed by reversed q about every component of X."""
    if np.hypot(*(p.start - q.start)) > tol or np.hypot(*(p.end - q.end)) > tol:
        raise GeometryError("endpoints", "paths do not share endpoints")
    loop = np.concatenate([p.vertices, q.vertices[::-1][1:-1]])
    w = tuple(winding_number(loop, z) for z in component_representatives(X_frame))
    return HomotopyCertificate(all(k == 0 for k in w), w)
