import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from planar_isotopy.compacta import Compactum, Isotopy, encircle
from planar_isotopy.errors import GeometryError
from planar_isotopy.expflow import (ExpWindow, LiftedPiece, PipelineParams, Straightening,
                                    StripComponents, ball_like_check, dichotomy_check, exp_tilde,
                                    exp_tilde_inverse, find_K, lift_compactum, normalize,
                                    run_pipeline, sizes_check, vertical_line_circle)
from planar_isotopy.paths import path_hausdorff
from planar_isotopy.planar import Polyline

from conftest import Q_TWO_SQUARES, square


def test_exp_tilde_examples():
    assert exp_tilde(0) == 0.5
    assert abs(exp_tilde(1j * np.pi / 2) - (0.5 + 0.5j)) < 1e-15
    assert abs(exp_tilde(-40.0)) < 1e-17 and abs(exp_tilde(40.0) - 1) < 1e-15
    with pytest.raises(GeometryError) as e:
        exp_tilde(1j * np.pi + 1e-11)
    assert e.value.code == "pole"


def test_vertical_line_image_circle():
    c, r = vertical_line_circle(np.log(2))
    assert abs(c - 4 / 3) < 1e-12 and abs(r - 2 / 3) < 1e-12
    y = np.linspace(-np.pi + 0.01, np.pi - 0.01, 100)
    w = exp_tilde(np.log(2) + 1j * y)
    assert np.abs(np.abs(w - 4 / 3) - 2 / 3).max() < 1e-12


@settings(max_examples=100, deadline=None)
@given(st.floats(-10, 10), st.floats(-2 * np.pi, 2 * np.pi))
def test_inverse_round_trip(x, y):
    z = complex(x, y)
    if abs(np.mod(y, 2 * np.pi) - np.pi) < 1e-3 and abs(x) < 1e-3:
        return
    w = exp_tilde(z)
    back = exp_tilde_inverse(w, ref=z)
    assert abs(back - z) < 1e-8 * max(1.0, np.exp(abs(x)))


def test_periodicity():
    rng = np.random.default_rng(0)
    z = rng.uniform(-9, 9, 10_000) + 1j * rng.uniform(-2 * np.pi, 2 * np.pi, 10_000)
    assert np.abs(exp_tilde(z + 2j * np.pi) - exp_tilde(z)).max() < 1e-12


def test_find_K_in_range():
    K = find_K()
    assert 0 < K <= np.pi / 2
    assert K == pytest.approx(1.096, abs=1e-3)


def test_ball_like_examples():
    win = ExpWindow(W=9.9)
    cert = ball_like_check(win, 0.1)
    assert cert.min_ball_modulus >= 5 and cert.max_outside_modulus <= 20
    assert cert.passed
    with pytest.raises(GeometryError) as e:
        ball_like_check(win, 3.2)
    assert e.value.code == "radius-too-large"


def test_params_invariants():
    assert PipelineParams.nu_bound(1.0) == pytest.approx(1 / 17)
    PipelineParams(1.0, 0.058, 0.01)
    with pytest.raises(GeometryError):
        PipelineParams(1.0, 0.059, 0.01)
    with pytest.raises(GeometryError):
        PipelineParams(0.5, 0.5, 0.01)
    with pytest.raises(GeometryError):
        PipelineParams(0.5, 0.02, 0.2)
    p = PipelineParams.derive(0.5, 0.02)
    assert p.delta == pytest.approx(0.99 * 0.005)


def test_straightening_identity_for_straight_arc():
    th = Straightening.for_arc([(0, 0), (0.3, 0.1)])
    assert th.is_identity
    z = np.array([0.1 + 0.2j, -1 + 3j])
    assert np.array_equal(th.forward(z), z)


def test_straightening_collinear_for_L_shape():
    L = np.array([(0, 0), (0.5, 0.4), (1.0, 0.0)])
    th = Straightening.for_arc(L)
    dense = np.concatenate([np.linspace(L[k], L[k + 1], 50) for k in range(2)])
    w = th.forward(dense[:, 0] + 1j * dense[:, 1])
    assert np.abs(w.imag).max() < 1e-9
    rng = np.random.default_rng(1)
    z = rng.uniform(-2, 2, 2000) + 1j * rng.uniform(-2, 2, 2000)
    assert np.abs(th.inverse(th.forward(z)) - z).max() < 1e-12
    far = np.abs(z) > th.support_radius
    assert np.array_equal(th.forward(z)[far], z[far])
    with pytest.raises(GeometryError) as e:
        Straightening.for_arc([(0, 0), (0.5, 0.4), (0.2, 0.5), (1, 0)])
    assert e.value.code == "unsupported-crosscut"


def test_normalize_fixes_zero_and_one(two_squares_setup):
    X, h, params = two_squares_setup
    nf = normalize(X, h, Q_TWO_SQUARES)
    for t in np.linspace(0, 1, 5):
        comps = np.concatenate(nf.components_at(t))
        assert (comps == 0).sum() == 1 and (comps == 1).sum() == 1
    rep = sizes_check(nf, params.nu)
    assert rep.fixed_points and rep.segment_clear and rep.escape_bound_ok


def _circle_c(c, r, n=64):
    return c + r * np.exp(2j * np.pi * np.arange(n) / n)


def test_lift_bounded_component_per_strip():
    win = ExpWindow(W=9.9)
    sc = lift_compactum([_circle_c(0.5 + 0.3j, 0.05)], [True], win, 0.1)
    assert len(sc.pieces) == len(win.copies)
    base = next(p for p in sc.pieces if p.copy == 0)
    assert not base.unbounded_left and not base.unbounded_right
    assert np.all((base.points.imag > 0) & (base.points.imag < 2 * np.pi))
    # the numeric inverse maps back
    sag = 0.05 * (1 - np.cos(np.pi / 64))
    assert np.abs(np.abs(exp_tilde(base.points) - (0.5 + 0.3j)) - 0.05).max() <= sag + 1e-12
    for p in sc.pieces:
        assert np.abs(p.points - (base.points + 2j * np.pi * p.copy)).max() < 1e-9


def test_lift_of_component_through_zero_is_unbounded_left():
    win = ExpWindow(W=9.9)
    arc = np.array([0.0, -0.3 + 0.3j, -0.6 + 0.6j])
    sc = lift_compactum([arc], [False], win, 0.1)
    p = next(p for p in sc.pieces if p.copy == 0)
    assert p.unbounded_left and not p.unbounded_right
    assert p.points.real.min() < -win.W


def test_lift_rejects_set_meeting_unit_segment():
    win = ExpWindow(W=9.9)
    with pytest.raises(GeometryError) as e:
        lift_compactum([_circle_c(0.5, 0.05)], [True], win, 0.1)
    assert e.value.code == "crosscut-not-cleared"


def _piece(copy, ys, side):
    x = np.linspace(-12, 0, 20)
    return LiftedPiece(0, 0, copy, x + 1j * np.asarray(ys, float), side, True, False, True)


def test_dichotomy_negative_control():
    good = StripComponents(0.0, (_piece(0, 1.0, "A"), _piece(-1, -1.0, "B")), {}, 0.1, 9.9)
    assert dichotomy_check([good]).passed
    bad = StripComponents(0.5, (_piece(0, -1.0, "A"), _piece(-1, 1.0, "B")), {}, 0.1, 9.9)
    with pytest.raises(GeometryError) as e:
        dichotomy_check([good, bad])
    assert e.value.code == "dichotomy-violated"
    assert e.value.witness[0] == 0.5


def test_identity_isotopy_gives_constant_straight_path():
    X = Compactum.from_polygons([square(-0.501, 0), square(0.501, 0)], filled=True, eta=0.001)
    X, h = encircle(X, Isotopy.identity(X))
    Q = np.array([[-0.001, 0.0], [0.001, 0.0]])
    params = PipelineParams.derive(0.5, 0.02, h, anchor=lambda t: Q[0])
    r = run_pipeline(X, h, Q, params, n_steps=4, grid_n=256, interlacing_every=0)
    assert r.modulus.max_jump < 1e-12
    assert path_hausdorff(r.frames[0].gamma_t.polyline, Polyline(Q)) < 1e-12
    assert r.homotopy


def test_small_two_squares_run(two_squares_setup):
    X, h, params = two_squares_setup
    r = run_pipeline(X, h, Q_TWO_SQUARES, params, n_steps=8, grid_n=256, interlacing_every=4)
    assert r.diameters.max() < params.epsilon
    assert r.homotopy and r.dichotomy.passed
    assert r.min_clearance > r.window.cell_size
    for f in r.frames:
        v = f.gamma_t.vertices
        assert np.hypot(*(v[0] - v[-1])) < params.delta
    assert r.sizes.fixed_points


def test_crosscut_too_large(two_squares_setup):
    X, h, params = two_squares_setup
    Q = np.array([[0.5, 0.4], [0.4, 0.6], [0.6, 0.5]])
    with pytest.raises(GeometryError) as e:
        run_pipeline(X, h, Q, params, n_steps=2, grid_n=64)
    assert e.value.code == "crosscut-too-large"
