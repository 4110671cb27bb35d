from __future__ import annotations

import numpy as np
import pytest

from planar_isotopy.compacta import Compactum, Isotopy, encircle
from planar_isotopy.expflow import PipelineParams


def square(cx, cy, s=0.5):
    return np.array([[cx - s, cy - s], [cx + s, cy - s], [cx + s, cy + s], [cx - s, cy + s]])


def circle(n=360, r=1.0, c=(0.0, 0.0)):
    th = 2 * np.pi * np.arange(n) / n
    return np.c_[c[0] + r * np.cos(th), c[1] + r * np.sin(th)]


# crosscut around the upper left corner of the moving square
Q_SIZE = 0.001
Q_TWO_SQUARES = np.array([[0.5, 0.5 - Q_SIZE], [0.5 - Q_SIZE, 0.5 + Q_SIZE], [0.5 + Q_SIZE, 0.5]])


def two_squares(dx=0.2):
    X = Compactum.from_polygons([square(-1, 0), square(1, 0)], filled=True, eta=1.0)
    h = Isotopy.translation(X, {1: (dx, 0.0)})
    X, h = encircle(X, h)
    anchor = lambda t: np.array([0.5 + dx * t, 0.5 - Q_SIZE])  # noqa: E731
    params = PipelineParams.derive(0.5, 0.02, h, anchor=anchor)
    return X, h, params


@pytest.fixture(scope="session")
def two_squares_setup():
    return two_squares()


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for ln in lines:
            terminalreporter.write_line(ln)
