import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from planar_isotopy.compacta import (Compactum, Isotopy, complementary_domains, encircle,
                                     estimate_uniform_perfectness, locate, make_crosscut,
                                     separation_scale, sigma_radius, uniform_continuity_delta)
from planar_isotopy.errors import GeometryError
from planar_isotopy.planar import Grid

from conftest import circle, square


def cantor_intervals(level):
    iv = [(0.0, 1.0)]
    for _ in range(level):
        iv = [x for a, b in iv for x in ((a, a + (b - a) / 3), (b - (b - a) / 3, b))]
    return iv


def cantor_oracle(iv, radii):
    """min over endpoints x and radii r of (farthest point of X within r of x) / r."""
    E = np.array(iv)
    best = 1.0
    for R in radii:
        for x in np.unique(E.ravel()):
            ok = (E[:, 1] >= x - R) & (E[:, 0] <= x + R)
            lo = np.clip(x - R, E[ok, 0], E[ok, 1])
            hi = np.clip(x + R, E[ok, 0], E[ok, 1])
            best = min(best, max(np.abs(lo - x).max(), np.abs(hi - x).max()) / R)
    return best


# uniform perfectness

def test_up_segment_is_continuum_bound():
    X = Compactum.from_polygons([np.array([[0.0, 0.0], [1.0, 0.0]])])
    for level in (1, 2, 3):
        assert estimate_uniform_perfectness(X, center_level=level).k_hat >= 0.5


def test_up_cantor_level8_matches_exhaustive_scan():
    iv = cantor_intervals(8)
    X = Compactum.from_polygons([np.array([[a, 0.0], [b, 0.0]]) for a, b in iv])
    rep = estimate_uniform_perfectness(X, center_level=0, radius_level=1, depth=10)
    oracle = cantor_oracle(iv, 2.0 ** (-np.arange(1, 21) / 2))
    assert oracle == pytest.approx(0.4096936442615444, abs=1e-12)
    assert rep.k_raw == pytest.approx(oracle, abs=1e-12)
    assert rep.k_hat >= 0.25


def test_up_two_points_reports_zero_with_witness():
    X = Compactum.from_polygons([np.array([[0.0, 0.0]]), np.array([[1.0, 0.0]])])
    rep = estimate_uniform_perfectness(X)
    assert rep.k_hat == 0.0
    assert rep.witness_failures


def test_up_single_point_is_degenerate():
    X = Compactum.from_polygons([np.array([[0.3, 0.2]])])
    with pytest.raises(GeometryError) as e:
        estimate_uniform_perfectness(X)
    assert e.value.code == "degenerate"


def test_up_monotone_under_refinement():
    X = Compactum.from_polygons([circle(12), square(3, 0, 0.3)])
    ks = [estimate_uniform_perfectness(X, center_level=c, radius_level=r).k_raw
          for c, r in ((0, 0), (1, 1), (2, 2))]
    assert ks[0] >= ks[1] >= ks[2]


# compactum and isotopy

def test_eta_and_disjointness_enforced():
    with pytest.raises(GeometryError):
        Compactum.from_polygons([square(0, 0, 0.1)], eta=1.0)
    with pytest.raises(GeometryError):
        Compactum.from_polygons([square(0, 0), square(0.5, 0)])


def test_evaluate_examples():
    X = Compactum.from_polygons([square(0, 0)])
    P1 = square(1, 0)
    P2 = square(1, 2)
    h = Isotopy(X, np.array([0.0, 0.5, 1.0]), ((X.components[0].vertices,), (P1,), (P2,)))
    assert np.array_equal(h.positions(0.0)[0], X.components[0].vertices)
    assert np.array_equal(h.positions(0.5)[0], P1)
    assert np.allclose(h.positions(0.75)[0], 0.5 * (P1 + P2))
    with pytest.raises(GeometryError) as e:
        h.evaluate(1.5)
    assert e.value.code == "time-range"


def test_isotopy_frames_stay_embedded():
    X = Compactum.from_polygons([square(-1, 0), square(1, 0)])
    h = Isotopy.translation(X, {1: (0.2, 0.0)})
    assert h.embedding_violations() == []
    bad = Isotopy.translation(X, {1: (-2.0, 0.0)})
    assert bad.embedding_violations()


# encircling

def test_encircle_stationary_inside_unit_disk():
    X = Compactum.from_polygons([circle(40, 0.5)])
    h = Isotopy.identity(X)
    X2, h2 = encircle(X, h)
    assert len(X2.components) == 2 and X2.sigma == 1
    assert sigma_radius(X2) >= 2.0
    for fr, fr2 in zip(h.frames, h2.frames):
        assert np.array_equal(fr[0], fr2[0])


def test_encircle_translation_contains_motion_with_margin():
    X = Compactum.from_polygons([square(-1, 0), square(1, 0)])
    h = Isotopy.translation(X, {1: (0.2, 0.0)})
    X2, h2 = encircle(X, h)
    R = sigma_radius(X2)
    c = X2.components[X2.sigma].vertices.mean(axis=0)
    D = max(np.ptp(np.concatenate(fr), axis=0).max() for fr in h.frames)
    diam = max(np.hypot(*(P[:, None] - P[None]).transpose(2, 0, 1)).max()
               for P in (np.concatenate(fr) for fr in h.frames))
    assert R >= 2 * diam - 1e-12 and D > 0
    for t in np.linspace(0, 1, 11):
        P = np.concatenate(h2.positions(t)[:2])
        assert np.hypot(*(P - c).T).max() <= R - diam + 1e-12
    X3, h3 = encircle(X2, h2)
    assert X3 is X2 and h3 is h2


def test_encircle_rejects_unbounded():
    X = Compactum.from_polygons([square(0, 0)])
    with pytest.raises(GeometryError) as e:
        Isotopy(X, np.array([0.0, 1.0]), ((X.components[0].vertices,), (np.full((4, 2), np.inf),)))
    assert e.value.code == "unbounded-isotopy"


# complementary domains

def test_domains_circle_and_nested():
    g = Grid.covering(-2, 2, -2, 2, 256)
    assert complementary_domains(Compactum.from_polygons([circle(200)]), g).n_labels == 2
    X = Compactum.from_polygons([circle(200), circle(200, 0.5)])
    assert complementary_domains(X, g).n_labels == 3


def test_domains_filled_squares_with_sigma():
    X = Compactum.from_polygons([square(-1, 0), square(1, 0)], filled=True)
    g = Grid.covering(-2, 2, -2, 2, 512)
    dm = complementary_domains(X, g)
    assert dm.bounded_labels == [] and dm.n_labels == 1
    X2, _ = encircle(X, Isotopy.identity(X))
    R = sigma_radius(X2) * 1.1
    dm2 = complementary_domains(X2, Grid.covering(-R, R, -R, R, 512))
    assert len(dm2.bounded_labels) == 1
    lab = dm2.bounded_labels[0]
    assert dm2.label_at([0.0, 0.0]) == lab and dm2.label_at([0.0, 0.9]) == lab


def test_domains_stable_under_refinement():
    X = Compactum.from_polygons([circle(100), circle(100, 0.5)])
    g = Grid.covering(-2, 2, -2, 2, 128)
    a = complementary_domains(X, g)
    b = complementary_domains(X, g.refined(2))
    far = a.distance > 2 * g.cell_size
    fine = b.labels.reshape(g.ny, 2, g.nx, 2)[:, 0, :, 0]
    # the two labelings agree up to a renaming on cells far from X
    pairs = set(zip(a.labels[far].tolist(), fine[far].tolist()))
    assert len(pairs) == len({p[0] for p in pairs}) == len({p[1] for p in pairs})


# crosscuts and locations

def test_crosscut_validation():
    X = Compactum.from_polygons([square(0, 0)], filled=True)
    cc = make_crosscut(X, [[0.5, 0.4], [0.6, 0.6], [0.4, 0.5]])
    assert np.allclose(cc.endpoint_a, [0.5, 0.4])
    with pytest.raises(GeometryError) as e:
        make_crosscut(X, [[0.5, 0.4], [0.0, 0.0], [0.4, 0.5]])
    assert e.value.code == "not-a-crosscut"
    with pytest.raises(GeometryError):
        make_crosscut(X, [[0.7, 0.4], [0.9, 0.9]])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 3), st.floats(0, 1))
def test_locate_round_trip(seg, s):
    X = Compactum.from_polygons([square(0.3, -0.2)])
    h = Isotopy.translation(X, {0: (1.0, 2.0)})
    v = X.components[0].vertices
    p = (1 - s) * v[seg] + s * v[(seg + 1) % 4]
    loc = locate(X, p)
    assert np.allclose(h.track(loc, 0.0), p, atol=1e-12)
    assert np.allclose(h.track(loc, 1.0), p + [1.0, 2.0], atol=1e-12)


def test_separation_scale_of_two_squares():
    X = Compactum.from_polygons([square(-1, 0), square(1, 0)])
    h = Isotopy.identity(X)
    # a corner's own square reaches sqrt(2) (the diagonal); the other square
    # reaches at least hypot(2, 1), so the minimum is the diagonal
    assert separation_scale(X, h) == pytest.approx(np.sqrt(2.0), rel=1e-12)


def test_uniform_continuity_delta_translation():
    X = Compactum.from_polygons([square(0, 0)])
    h = Isotopy.translation(X, {0: (0.3, 0.0)})
    anchor = lambda t: np.array([0.3 * t, 0.0])  # noqa: E731  moving with X
    d = uniform_continuity_delta(h, 0.4, anchor=anchor)
    assert 0 < d <= 0.2
    # rigid motion: distances to the anchor are constant, so 2 delta < radius suffices
    assert d == 0.2 or 2 * d < 0.4
