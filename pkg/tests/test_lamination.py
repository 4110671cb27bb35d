import numpy as np
import pytest

from planar_isotopy.compacta import Compactum, Isotopy, complementary_domains
from planar_isotopy.errors import GeometryError
from planar_isotopy.hyperbolic import geodesic_between
from planar_isotopy.kulkarni_pinkall import Chord, Domain, chord_family
from planar_isotopy.lamination import (QHTable, build_lamination, continuity_probe, domain_geodesic,
                                       extend_isotopy, gehring_hayman, qh_length_table,
                                       select_chords)
from planar_isotopy.planar import Grid, Polyline, hausdorff_distance, point_segment_distance

from conftest import circle

RECT = np.array([[0, 0], [2, 0], [2, 1], [0, 1.0]])


def disk_domain(n):
    g = Grid.covering(-1, 1, -1, 1, n, margin=0.02)
    return Domain.polygon_interior(circle(720), g), g


def test_disk_vertical_diameter():
    U, g = disk_domain(200)
    path = domain_geodesic(U, (0, -1), (0, 1))
    assert np.abs(path.vertices[:, 0]).max() <= 2 * g.cell_size


def test_disk_quarter_arc_close_to_orthocircle():
    # the grid geodesic is quasihyperbolic, which differs from the hyperbolic
    # geodesic by a bounded amount; measured deviation is about 0.12
    U, g = disk_domain(200)
    path = domain_geodesic(U, (1, 0), (0, 1))
    geo = geodesic_between(1, 1j)
    assert geo.center == pytest.approx(1 + 1j) and geo.radius == pytest.approx(1)
    dev = np.abs(np.abs(path.vertices @ [1, 1j] - (1 + 1j)) - 1).max()
    assert dev <= 0.15


def test_gehring_hayman_stable_across_resolutions():
    Ks = []
    for n in (128, 256):
        U, _ = disk_domain(n)
        rep = gehring_hayman(U, (1, 0), (-0.6, 0.8), n_competitors=20, seed=0)
        assert rep.geodesic_diameter <= rep.K_meas * min(rep.competitor_diameters) + 1e-12
        Ks.append(rep.K_meas)
    assert abs(Ks[0] - Ks[1]) <= 0.2 * Ks[1]


def test_not_joinable():
    g = Grid.covering(-0.1, 3.1, -0.1, 1.1, 160)
    # two boxes joined by nothing: a union domain mask with two parts
    left = Domain.polygon_interior(np.array([[0, 0], [1, 0], [1, 1], [0, 1.0]]), g)
    right = Domain.polygon_interior(np.array([[2, 0], [3, 0], [3, 1], [2, 1.0]]), g)
    U = Domain(np.concatenate([left.segments, right.segments]), g, left.mask | right.mask)
    with pytest.raises(GeometryError) as e:
        domain_geodesic(U, (0.5, 0), (2.5, 1))
    assert e.value.code == "not-joinable"


def test_qh_table_round_trip():
    v = np.array([[0.0, 0.0], [0.5, 0.4], [1.0, 0.5], [1.5, 0.4], [2.0, 0.0]])
    d = np.array([0.0, 0.4, 0.5, 0.4, 0.0])
    tab = QHTable(v, d)
    c = qh_length_table(v, d)
    assert c[0] == -np.inf and c[-1] == np.inf
    for s in np.linspace(c[1] - 3, c[3] + 3, 15):
        assert tab.coordinate(tab.point(s)) == pytest.approx(s, abs=1e-9)
    # uniform clearance reduces to Euclidean length over clearance
    assert qh_length_table(np.array([[0, 1.0], [2, 1.0]]), np.array([0.5, 0.5]))[1] == pytest.approx(4)


@pytest.fixture(scope="module")
def rectangle():
    X = Compactum.from_polygons([RECT])
    g = Grid.covering(-0.1, 2.4, -0.1, 1.2, 256)
    dm = complementary_domains(X, g)
    U = Domain.from_domain_map(X, dm, dm.bounded_labels[0])
    J = chord_family(U)
    chords = select_chords(J, n_max=3, min_diam=0.9, min_sep=0.3)
    return X, g, J, chords


def test_rectangle_translation(rectangle):
    X, g, _, chords = rectangle
    h = Isotopy.translation(X, {0: (0.3, 0.1)})
    L = build_lamination(chords, h, np.linspace(0, 1, 3), g)
    E = extend_isotopy(L, h)
    for c in L.chords:
        for k, t in enumerate(L.times):
            assert np.array_equal(E(c.mids[0], t), c.mids[k])
            a, b = c.endpoints(k)
            assert np.hypot(*(a - h.track(c.a, t))) <= 1e-12
        moved = c.carriers[-1].vertices - [0.3, 0.1]
        assert hausdorff_distance(moved, c.carriers[0].vertices) <= 2 * g.cell_size
    # points of X follow h exactly
    p = np.array([1.0, 0.0])
    assert np.allclose(E(p, 0.5), p + [0.15, 0.05])


def test_identity_isotopy(rectangle):
    X, g, _, chords = rectangle
    h = Isotopy.identity(X)
    L = build_lamination(chords, h, [0.0, 1.0], g)
    E = extend_isotopy(L, h)
    for c in L.chords:
        assert np.array_equal(c.carriers[0].vertices, c.carriers[1].vertices)
        for p in c.carriers[0].vertices[1:-1:5]:
            assert np.hypot(*(E(p, 0.6) - p)) < 1e-9


def test_outside_domain_of_extension(rectangle):
    X, g, _, chords = rectangle
    h = Isotopy.identity(X)
    E = extend_isotopy(build_lamination(chords, h, [0.0, 1.0], g), h)
    with pytest.raises(GeometryError) as e:
        E((1.3, 0.77), 0.5)
    assert e.value.code == "outside-domain-of-extension"


def test_shared_endpoint_chords_stay_disjoint(rectangle):
    X, g, J, _ = rectangle
    corner = 1.0 + 0j
    pair = [Chord(corner, 0.0 + 0.5j, Polyline(np.array([[1, 0], [0, 0.5]])), 0),
            Chord(corner, 2.0 + 0.5j, Polyline(np.array([[1, 0], [2, 0.5]])), 0)]
    h = Isotopy.translation(X, {0: (0.3, 0.1)})
    L = build_lamination(pair, h, np.linspace(0, 1, 3), g)
    for k in range(3):
        a, b = L.carriers_at(k)
        inner = a.vertices[3:-1]
        segs = b.segments()
        d = point_segment_distance(inner[:, None], segs[None, :, 0], segs[None, :, 1]).min(1)
        assert d.min() > 0


def test_crossing_chords_rejected(rectangle):
    X, g, _, _ = rectangle
    cross = [Chord(0.0 + 0.5j, 2.0 + 0.5j, Polyline(np.array([[0, 0.5], [2, 0.5]])), 0),
             Chord(1.0 + 0j, 1.0 + 1j, Polyline(np.array([[1, 0], [1, 1.0]])), 0)]
    with pytest.raises(GeometryError) as e:
        build_lamination(cross, Isotopy.identity(X), [0.0], g)
    assert e.value.code == "lamination-crossing"


def test_continuity_probe_on_time_sequence(rectangle):
    X, g, _, chords = rectangle
    h = Isotopy.translation(X, {0: (0.3, 0.1)})
    L = build_lamination(chords, h, np.linspace(0, 1, 5), g)
    E = extend_isotopy(L, h)
    p0 = L.chords[0].carriers[0].vertices[5]
    rep = continuity_probe(E, [([(p0, 0.5 + 2.0 ** -k) for k in range(1, 8)], (p0, 0.5))],
                           tol=2 * g.cell_size)
    assert rep.vanishing
    assert rep.gaps[0][-1] <= rep.gaps[0][0]
