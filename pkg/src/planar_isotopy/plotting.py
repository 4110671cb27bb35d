"""Deterministic SVG frames: the compactum, the path and the chords as
separate layers (``<g id=...>``), byte-identical across reruns."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.patches import Polygon as PolygonPatch  # noqa: E402

SVG_RC = {
    "svg.hashsalt": "planar-isotopy",
    "svg.fonttype": "path",
    "font.family": "DejaVu Sans",
    "font.size": 8,
    "axes.linewidth": 0.6,
    "path.simplify": False,
}

LAYER_STYLE = {
    "compactum": dict(color="0.15", lw=0.9),
    "gamma": dict(color="#c0392b", lw=1.2),
    "chords": dict(color="#2471a3", lw=0.7),
    "skeleton": dict(color="#7d3c98", lw=0.5),
    "manifold": dict(color="#1e8449", lw=0.8),
}


def write_frame(path, t: float, layers: dict, bounds, title: str = "",
                filled: dict | None = None, markers: dict | None = None):
    """One SVG; ``layers`` maps a layer name to a list of (n, 2) vertex arrays
    (closed loops repeat their first vertex), ``filled`` maps layer names to
    polygons drawn as patches and ``markers`` to point arrays."""
    xmin, xmax, ymin, ymax = bounds
    with plt.rc_context(SVG_RC):
        w = 5.0
        hgt = max(1.5, min(8.0, w * (ymax - ymin) / max(xmax - xmin, 1e-12)))
        fig, ax = plt.subplots(figsize=(w, hgt))
        for name, polys in (filled or {}).items():
            st = LAYER_STYLE.get(name, {})
            for k, P in enumerate(polys):
                patch = PolygonPatch(P, closed=True, fc=st.get("color", "0.5"), ec="none",
                                     alpha=0.25, gid=f"{name}-fill-{k}")
                ax.add_patch(patch)
        for name, curves in layers.items():
            st = LAYER_STYLE.get(name, dict(color="k", lw=0.8))
            for k, P in enumerate(curves):
                if len(P) == 1:
                    ax.plot(P[:, 0], P[:, 1], "o", ms=2, color=st["color"], gid=f"{name}-{k}")
                else:
                    ax.plot(P[:, 0], P[:, 1], "-", gid=f"{name}-{k}", **st)
        for name, pts in (markers or {}).items():
            if len(pts):
                st = LAYER_STYLE.get(name, dict(color="k"))
                ax.plot(pts[:, 0], pts[:, 1], ".", ms=1.5, color=st["color"], gid=f"{name}-pts")
        ax.set_xlim(xmin, xmax)
        ax.set_ylim(ymin, ymax)
        ax.set_aspect("equal")
        ax.set_title(f"{title}  t = {t:.4f}" if title else f"t = {t:.4f}")
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
