"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line; the lines are printed as they are
produced and again in a terminal summary section (see conftest.py).
"""

import time

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.spatial import cKDTree

from planar_isotopy.equidistant import difference_field, equidistant_set, non_interlaced_test, validate_manifold
from planar_isotopy.errors import GeometryError
from planar_isotopy.expflow import ExpWindow, ball_like_check, exp_tilde, run_pipeline, vertical_line_circle
from planar_isotopy.hyperbolic import geodesic_between, hyperbolic_distance
from planar_isotopy.kulkarni_pinkall import Domain, KPDecomposition, chord_family, kp_membership
from planar_isotopy.lamination import build_lamination, continuity_probe, extend_isotopy, gehring_hayman, select_chords
from planar_isotopy.paths import family_hausdorff_modulus
from planar_isotopy.planar import Grid, Polyline, as_segments, point_segment_distance, points_in_polygon

from conftest import Q_TWO_SQUARES, circle, two_squares

RESULTS: list[str] = []


def record(n: int, name: str, checks: dict, elapsed: float, limit: float):
    checks = dict(checks)
    checks[f"runtime {elapsed:.2f} s < {limit:g} s"] = elapsed < limit
    ok = all(checks.values())
    line = f"criterion {n} ({name}): {'PASS' if ok else 'FAIL'}"
    line += "".join(f"\n    [{'ok' if v else 'FAILED'}] {k}" for k, v in checks.items())
    RESULTS.append(line)
    print(line)
    assert ok, line


def test_criterion_1_exp_tilde_identities():
    t0 = time.perf_counter()
    win = ExpWindow.for_tolerance(1e-4)
    rng = np.random.default_rng(1)
    z = rng.uniform(-win.W, win.W, 10_000) + 1j * rng.uniform(win.y_lo, win.y_hi, 10_000)
    per = float(np.abs(exp_tilde(z + 2j * np.pi) - exp_tilde(z)).max())
    c, r = vertical_line_circle(np.log(2))
    y = rng.uniform(-np.pi + 1e-3, np.pi - 1e-3, 1000)
    on = float(np.abs(np.abs(exp_tilde(np.log(2) + 1j * y) - 4 / 3) - 2 / 3).max())
    elapsed = time.perf_counter() - t0
    record(1, "exp~ identities", {
        f"periodicity {per:.2e} < 1e-12": per < 1e-12,
        "exp~(0) == 0.5": exp_tilde(0) == 0.5,
        "circle center 4/3, radius 2/3": abs(c - 4 / 3) < 1e-9 and abs(r - 2 / 3) < 1e-9 and on < 1e-9,
    }, elapsed, 1.0)


def test_criterion_2_ball_like():
    t0 = time.perf_counter()
    win = ExpWindow.for_tolerance(1e-4)
    certs = [ball_like_check(win, r) for r in (0.2, 0.1, 0.05)]
    elapsed = time.perf_counter() - t0
    record(2, "ball-like certificate", {
        f"r = {c.r}: margins {c.margin_inner:.2f}, {c.margin_outer:.2f} >= 0.10":
            c.margin_inner >= 0.1 and c.margin_outer >= 0.1
        for c in certs
    }, elapsed, 10.0)


def _pts(*zs):
    return [Polyline(np.array([[complex(z).real, complex(z).imag]])) for z in zs]


def _square(cx, cy, s):
    return Polyline(np.array([[cx - s, cy - s], [cx + s, cy - s], [cx + s, cy + s], [cx - s, cy + s]]),
                    closed=True)


EQUI_INSTANCES = {
    "two points": (_pts(-1), _pts(1)),
    "point vs circle": (_pts(0.3 + 0.1j), [Polyline(circle(400), closed=True)]),
    "line vs two points": ([Polyline(np.array([[-3.0, 1.0], [3.0, 1.0]]))], _pts(-1 - 1j, 2 - 1j)),
    "two polygons": ([_square(-1, 0, 0.5)], [_square(1, 0, 0.5)]),
    "interlaced": (_pts(1, -1), _pts(1j, -1j)),
}


def _brute_difference(A1, A2, grid, chunk=8192):
    C = grid.centers()
    s1, s2 = as_segments(A1), as_segments(A2)
    out = np.empty(len(C))
    for k in range(0, len(C), chunk):
        c = C[k:k + chunk, None, :]
        out[k:k + chunk] = (point_segment_distance(c, s1[None, :, 0], s1[None, :, 1]).min(1)
                            - point_segment_distance(c, s2[None, :, 0], s2[None, :, 1]).min(1))
    return out.reshape(grid.shape)


def test_criterion_3_equidistant_oracle():
    grid = Grid.covering(-3, 3, -3, 3, 512)
    checks, elapsed = {}, 0.0
    for name, (A1, A2) in EQUI_INSTANCES.items():
        t0 = time.perf_counter()
        diff = difference_field(A1, A2, grid)[0].values
        try:
            validate_manifold(equidistant_set(A1, A2, grid))
            manifold = True
        except GeometryError:
            manifold = False
        passed = non_interlaced_test(A1, A2, grid).passed
        elapsed += time.perf_counter() - t0
        brute = _brute_difference(A1, A2, grid)
        decided = np.abs(brute) > 1e-9
        mism = int((np.sign(diff[decided]) != np.sign(brute[decided])).sum())
        checks[f"{name}: {mism} sign mismatches"] = mism == 0
        checks[f"{name}: manifold {manifold} == non-interlaced {passed}"] = manifold == passed
    record(3, "equidistant oracle equivalence", checks, elapsed, 30.0)


def _medial_oracle(V, g):
    C = g.centers()
    n = len(V)
    D = np.sort(np.stack([point_segment_distance(C, V[k], V[(k + 1) % n]) for k in range(n)], 1), 1)
    keep = points_in_polygon(C, V) & (D[:, 1] - D[:, 0] <= 0.5 * g.cell_size)
    return C[keep]


def test_criterion_4_kulkarni_pinkall():
    shapes = {"rectangle 2x1": np.array([[0, 0], [2, 0], [2, 1], [0, 1.0]]),
              "unit square": np.array([[0, 0], [1, 0], [1, 1], [0, 1.0]])}
    checks, elapsed = {}, 0.0
    rng = np.random.default_rng(0)
    for name, V in shapes.items():
        g = Grid.covering(-0.05, V[:, 0].max() + 0.05, -0.05, V[:, 1].max() + 0.05, 1024)
        t0 = time.perf_counter()
        U = Domain.polygon_interior(V, g)
        dec = KPDecomposition(U)
        chord_family(U, dec.disks)
        pts = rng.uniform([0, 0], V.max(0), (1000, 2))
        margin = 2 * g.cell_size
        pts = pts[(np.minimum(pts, V.max(0) - pts).min(1) > margin)]
        while len(pts) < 1000:
            p = rng.uniform([0, 0], V.max(0), (1000, 2))
            pts = np.vstack([pts, p[np.minimum(p, V.max(0) - p).min(1) > margin]])
        unique = sum(kp_membership(p, dec).unique for p in pts[:1000])
        elapsed += time.perf_counter() - t0
        S = np.array([[d.center.real, d.center.imag] for d in dec.disks])
        O = _medial_oracle(V, g)
        gap = max(cKDTree(O).query(S)[0].max(), cKDTree(S).query(O)[0].max()) / g.cell_size
        checks[f"{name}: skeleton within {gap:.2f} cells of brute force (<= 2)"] = gap <= 2
        checks[f"{name}: {unique}/1000 unique memberships"] = unique == 1000
    record(4, "Kulkarni-Pinkall oracle", checks, elapsed, 60.0)


def _integrated_distance(r):
    return quad(lambda s: 2.0 / (1.0 - s * s), 0.0, r, epsabs=1e-13, epsrel=1e-13)[0]


def test_criterion_5_hyperbolic():
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    th = rng.uniform(0, 2 * np.pi, (1000, 2))
    worst = 0.0
    for a, b in np.exp(1j * th):
        g = geodesic_between(a, b)
        if g.kind == "arc":
            worst = max(worst, abs(abs(g.center) ** 2 - g.radius ** 2 - 1))
    d = hyperbolic_distance(0, 0.5)
    oracle = _integrated_distance(0.5)
    elapsed = time.perf_counter() - t0
    record(5, "hyperbolic geometry", {
        f"orthocircle identity error {worst:.1e} < 1e-9": worst < 1e-9,
        f"d(0, 0.5) - ln 3 = {d - np.log(3):.1e}": abs(d - np.log(3)) < 1e-6,
        f"d(0, 0.5) vs integration {d - oracle:.1e}": abs(d - oracle) < 1e-6,
    }, elapsed, 5.0)


@pytest.mark.slow
def test_criterion_6_pipeline():
    t0 = time.perf_counter()
    X, h, params = two_squares()
    res = run_pipeline(X, h, Q_TWO_SQUARES, params, n_steps=64, grid_n=1024)
    elapsed = time.perf_counter() - t0
    jumps = []
    for n in (16, 32, 64):
        fam = [f.gamma_t for f in res.frames if abs(f.t * n - round(f.t * n)) < 1e-9]
        assert len(fam) == n + 1
        jumps.append(family_hausdorff_modulus(fam).max_jump)
    cell = res.window.cell_size
    record(6, "pipeline end-to-end", {
        f"max diam(gamma_t) {res.diameters.max():.4f} < epsilon {params.epsilon}":
            bool(res.diameters.max() < params.epsilon),
        "gamma_0 homotopic to Q rel endpoints": bool(res.homotopy),
        "Hausdorff step decreases under halving " + " > ".join(f"{j:.2e}" for j in jumps):
            jumps[0] > jumps[1] > jumps[2],
        f"pole-ball clearance {res.min_clearance:.3f} >= cell {cell:.4f}": res.min_clearance >= cell,
    }, elapsed, 600.0)


@pytest.mark.slow
def test_criterion_7_lamination():
    from planar_isotopy.compacta import Compactum, Isotopy, complementary_domains
    t0 = time.perf_counter()
    rect = np.array([[0, 0], [2, 0], [2, 1], [0, 1.0]])
    X = Compactum.from_polygons([rect])
    h = Isotopy.translation(X, {0: (0.3, 0.1)})
    g = Grid.covering(-0.1, 2.4, -0.1, 1.2, 512)
    dm = complementary_domains(X, g)
    U = Domain.from_domain_map(X, dm, dm.bounded_labels[0])
    J = chord_family(U)
    big = select_chords(J, n_max=3, min_diam=0.9, min_sep=0.3)
    small = [min((c for c in J.chords if min(abs(c.endpoint_a), abs(c.endpoint_b)) < D),
                 key=lambda c: abs(c.diameter - D)) for D in (0.4, 0.2, 0.1, 0.05, 0.025, 0.0125)]
    chords = big + small
    L = build_lamination(chords, h, np.linspace(0, 1, 5), g)
    E = extend_isotopy(L, h)
    mid_err = max(float(np.hypot(*(E(c.mids[0], t) - c.mids[k])))
                  for c in L.chords for k, t in enumerate(L.times))
    hid = Isotopy.identity(X)
    Ei = extend_isotopy(build_lamination(chords, hid, [0.0, 1.0], g), hid)
    id_err = max(float(np.hypot(*(Ei(p, t) - p)))
                 for c in Ei.lamination.chords for p in c.carriers[0].vertices[1:-1:5] for t in (0.3, 1.0))
    finals = []
    for nf in (3, 5, 9):
        Lr = build_lamination(chords, h, np.linspace(0, 1, nf), g)
        Er = extend_isotopy(Lr, h)
        p0 = Lr.chords[0].carriers[0].vertices[5]
        probes = [([(c.mids[0], 0.5) for c in Lr.chords[len(big):]], ((0.0, 0.0), 0.5)),
                  ([(p0, 0.5 + 2.0 ** -k) for k in range(1, 8)], (p0, 0.5))]
        rep = continuity_probe(Er, probes, tol=2 * g.cell_size)
        finals.append((nf, rep.vanishing, rep.max_final_gap))
    elapsed = time.perf_counter() - t0
    record(7, "lamination extension", {
        f"midpoint matching error {mid_err:.1e} == 0": mid_err == 0.0,
        f"identity isotopy error {id_err:.1e} < cell": id_err < g.cell_size,
        "probe gaps vanish at " + ", ".join(f"{nf} frames ({gap:.4f})" for nf, _, gap in finals):
            all(v for _, v, _ in finals),
    }, elapsed, 300.0)


def test_criterion_8_gehring_hayman():
    t0 = time.perf_counter()
    Ks, checks = [], {}
    for n in (256, 512):
        g = Grid.covering(-1, 1, -1, 1, n, margin=0.02)
        U = Domain.polygon_interior(circle(720), g)
        rep = gehring_hayman(U, (1.0, 0.0), (-0.6, 0.8), n_competitors=20, seed=0)
        Ks.append(rep.K_meas)
        ok = all(rep.geodesic_diameter <= rep.K_meas * d + 1e-12 for d in rep.competitor_diameters)
        checks[f"{n}^2: K_meas = {rep.K_meas:.4f} bounds all 20 competitors"] = ok and len(rep.competitor_diameters) == 20
    checks[f"K_meas stable within 20% ({Ks[0]:.4f} vs {Ks[1]:.4f})"] = abs(Ks[0] - Ks[1]) <= 0.2 * Ks[1]
    record(8, "measured Gehring-Hayman", checks, time.perf_counter() - t0, np.inf)
