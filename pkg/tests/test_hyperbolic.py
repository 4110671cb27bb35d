import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from shapely.geometry import LineString

from planar_isotopy.errors import GeometryError
from planar_isotopy.hyperbolic import (geodesic_between, hyperbolic_distance, hyperbolic_hull,
                                       point_at_hyperbolic_arclength, signed_arclength)


def integrated_distance(p: complex, q: complex) -> float:
    """Integrate 2|dz|/(1-|z|^2) along the geodesic from p to q.

    The geodesic is the image of the radial segment [0, w] under the disk
    automorphism sending 0 to p, with w the image of q under its inverse.
    """
    w = (q - p) / (1 - np.conj(p) * q)

    def integrand(s):
        z = (s * w + p) / (1 + np.conj(p) * s * w)
        dz = w * (1 - abs(p) ** 2) / (1 + np.conj(p) * s * w) ** 2
        return 2 * abs(dz) / (1 - abs(z) ** 2)

    return quad(integrand, 0.0, 1.0, epsabs=1e-13, epsrel=1e-13, limit=200)[0]


def test_distance_origin_half_against_integration():
    oracle = quad(lambda r: 2.0 / (1 - r * r), 0.0, 0.5, epsabs=1e-14)[0]
    assert oracle == pytest.approx(np.log(3.0), abs=1e-12)
    assert hyperbolic_distance(0, 0.5) == pytest.approx(oracle, abs=1e-9)
    assert hyperbolic_distance(0, 0) == 0.0
    assert hyperbolic_distance(0, 0.9) > hyperbolic_distance(0, 0.5)


def test_distance_random_pairs_against_integration():
    rng = np.random.default_rng(7)
    for _ in range(100):
        p, q = (np.sqrt(rng.uniform(0, 0.9)) * np.exp(2j * np.pi * rng.uniform()) for _ in range(2))
        assert hyperbolic_distance(p, q) == pytest.approx(integrated_distance(p, q), abs=1e-6)
        assert hyperbolic_distance(p, q) == pytest.approx(hyperbolic_distance(q, p), abs=1e-12)


def test_distance_rejects_boundary():
    with pytest.raises(GeometryError) as e:
        hyperbolic_distance(0, 1.0)
    assert e.value.code == "not-in-disk"


def test_geodesic_examples():
    g = geodesic_between(1, -1)
    assert g.kind == "diameter"
    g = geodesic_between(1, 1j)
    assert g.kind == "orthocircle"
    assert g.center == pytest.approx(1 + 1j, abs=1e-12)
    assert g.radius == pytest.approx(1.0, abs=1e-12)
    for th in np.linspace(0, 2 * np.pi, 7):
        assert geodesic_between(np.exp(1j * th), np.exp(1j * (th + np.pi))).kind == "diameter"
    with pytest.raises(GeometryError) as e:
        geodesic_between(1j, 1j)
    assert e.value.code == "degenerate-chord"


def test_orthocircle_identity_random_pairs():
    rng = np.random.default_rng(11)
    th = rng.uniform(0, 2 * np.pi, size=(1000, 2))
    for a, b in np.exp(1j * th):
        g = geodesic_between(a, b)
        if g.kind == "orthocircle":
            assert abs(abs(g.center) ** 2 - g.radius ** 2 - 1.0) < 1e-9


@settings(max_examples=10, deadline=None)
@given(st.floats(0, 2 * np.pi), st.floats(0.1, 3.0), st.floats(0, 2 * np.pi))
def test_geodesics_rotate_with_inputs(t0, gap, rot):
    a, b = np.exp(1j * t0), np.exp(1j * (t0 + gap))
    g = geodesic_between(a, b)
    r = np.exp(1j * rot)
    gr = geodesic_between(r * a, r * b)
    assert gr.kind == g.kind
    if g.kind == "orthocircle":
        assert abs(gr.center - r * g.center) < 1e-9
        assert gr.radius == pytest.approx(g.radius, abs=1e-9)


def test_arclength_examples():
    g = geodesic_between(-1, 1)
    assert point_at_hyperbolic_arclength(g, 0, 0.0) == 0
    assert point_at_hyperbolic_arclength(g, 0, np.log(3.0)) == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(GeometryError) as e:
        point_at_hyperbolic_arclength(g, 0.3j, 1.0)
    assert e.value.code == "anchor-off-geodesic"


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 2 * np.pi), st.floats(0.2, 3.0), st.floats(-0.9, 0.9), st.floats(-4, 4))
def test_arclength_round_trip(t0, gap, u, s):
    g = geodesic_between(np.exp(1j * t0), np.exp(1j * (t0 + gap)))
    anchor = point_at_hyperbolic_arclength(g, g.sample(3)[1], np.arctanh(u))
    z = point_at_hyperbolic_arclength(g, anchor, s)
    assert abs(point_at_hyperbolic_arclength(g, z, -s) - anchor) < 1e-9
    assert signed_arclength(g, anchor, z) == pytest.approx(s, abs=1e-8)
    assert hyperbolic_distance(anchor, z) == pytest.approx(abs(s), abs=1e-8)


def test_hull_examples():
    h = hyperbolic_hull(0, 1, [1, -1])
    assert len(h.sides) == 1 and h.sides[0].kind == "diameter"
    h = hyperbolic_hull(0, 1, np.exp(2j * np.pi * np.arange(3) / 3))
    radii = [g.radius for g in h.sides]
    assert np.ptp(radii) < 1e-12
    h = hyperbolic_hull(0, 1, [1, 1j, -1, -1j])
    centers = sorted((g.center for g in h.sides), key=np.angle)
    assert np.allclose(sorted(centers, key=np.angle), sorted([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j], key=np.angle))
    assert all(g.radius == pytest.approx(1.0) for g in h.sides)
    with pytest.raises(GeometryError) as e:
        hyperbolic_hull(0, 1, [1j])
    assert e.value.code == "degenerate-hull"


def test_hull_in_scaled_carrier_and_membership():
    h = hyperbolic_hull(2 + 1j, 3.0, (2 + 1j) + 3 * np.exp(1j * np.array([0.1, 2.0, 4.0])))
    assert h.contains(2 + 1j)
    assert not h.contains((2 + 1j) + 2.95 * np.exp(1j * 3.0))


def test_hull_sides_do_not_cross():
    rng = np.random.default_rng(5)
    for _ in range(20):
        th = np.sort(rng.uniform(0, 2 * np.pi, rng.integers(3, 9)))
        h = hyperbolic_hull(0, 1, np.exp(1j * th))
        P = [g.sample(200) for g in h.sides]
        for i in range(len(P)):
            for j in range(i + 1, len(P)):
                # drop the end samples: adjacent sides share an ideal endpoint
                a = LineString(np.c_[P[i].real, P[i].imag][1:-1])
                b = LineString(np.c_[P[j].real, P[j].imag][1:-1])
                assert not a.intersects(b)
