"""Scenario files: versioned YAML describing a compactum, its keyframed motion,
a crosscut and the parameters of each stage."""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .compacta import Component, Compactum, Isotopy
from .planar import Polyline

FORMAT_VERSION = 1
STAGES = ("up", "kp", "equi", "pipeline", "lamination")
DEPENDS = {"up": (), "kp": (), "equi": (), "pipeline": ("up",), "lamination": ("up", "kp")}


class ScenarioError(ValueError):
    """Rejected scenario; ``field`` is a dotted path and ``line`` is 1-based when known."""

    def __init__(self, field_: str, message: str, line: int | None = None):
        self.field = field_
        self.line = line
        where = f"line {line}, " if line is not None else ""
        super().__init__(f"{where}field {field_!r}: {message}")


@dataclass(frozen=True)
class Params:
    epsilon: float = 0.5
    nu: float = 0.02
    delta: float | None = None
    eta: float = 0.0
    tol: float = 1e-4
    grid: int = 256
    timesteps: int = 16


@dataclass(frozen=True)
class Scenario:
    name: str
    version: int
    X: Compactum
    h: Isotopy
    params: Params
    stages: tuple[str, ...]
    seed: int = 0
    crosscut: np.ndarray | None = None
    encircle: bool = False
    domain_point: tuple[float, float] | None = None
    equi_sets: tuple[tuple[str, ...], tuple[str, ...]] | None = None
    lamination: dict = field(default_factory=dict)
    source: str = ""


def resolve_stages(requested) -> tuple[str, ...]:
    """Requested stages plus their prerequisites, in dependency order."""
    need = set()

    def add(s):
        if s not in need:
            need.add(s)
            for d in DEPENDS[s]:
                add(d)

    for s in requested:
        if s not in DEPENDS:
            raise ScenarioError("stages", f"unknown stage {s!r}; expected one of {', '.join(STAGES)}")
        add(s)
    return tuple(s for s in STAGES if s in need)


# line lookup in the YAML node tree

def _line_of(node, path: tuple) -> int | None:
    line = node.start_mark.line + 1 if node is not None else None
    for key in path:
        if isinstance(node, yaml.MappingNode):
            nxt = None
            for k, v in node.value:
                if k.value == key:
                    nxt = v
                    line = k.start_mark.line + 1
                    break
            node = nxt
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
            line = node.start_mark.line + 1
        else:
            break
        if node is None:
            break
    return line


class _Reader:
    def __init__(self, root_node):
        self.root = root_node

    def fail(self, path: tuple, message: str):
        raise ScenarioError(".".join(str(p) for p in path), message, _line_of(self.root, path))

    def number(self, data: dict, path: tuple, key: str, default=None, kind=float):
        if key not in data or data[key] is None:
            return default
        v = data[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(path + (key,), f"expected a number, got {v!r}")
        if kind is int:
            if int(v) != v:
                self.fail(path + (key,), "expected an integer")
            return int(v)
        if not np.isfinite(v):
            self.fail(path + (key,), "must be finite")
        return float(v)

    def points(self, value, path: tuple, min_len: int = 1) -> np.ndarray:
        try:
            P = np.asarray(value, float)
        except (TypeError, ValueError):
            self.fail(path, "expected a list of [x, y] pairs")
        if P.ndim != 2 or P.shape[1] != 2 or len(P) < min_len:
            self.fail(path, f"expected at least {min_len} [x, y] pairs")
        if not np.all(np.isfinite(P)):
            self.fail(path, "coordinates must be finite")
        return P


def _validate_params(r: _Reader, p: Params):
    path = ("params",)
    if not p.epsilon > 0:
        r.fail(path + ("epsilon",), "epsilon must be positive")
    if not 0 < p.nu < 1 / 3:
        r.fail(path + ("nu",), f"nu = {p.nu} violates the nu invariant 0 < nu < 1/3")
    if not 8 * p.nu / (1 - p.nu) < p.epsilon / 2:
        r.fail(path + ("nu",), f"nu = {p.nu} violates the nu invariant 8 nu/(1 - nu) < epsilon/2")
    if p.delta is not None and not 0 < p.delta < p.epsilon / 4:
        r.fail(path + ("delta",), "delta must lie in (0, epsilon/4)")
    if not 0 < p.tol < 1:
        r.fail(path + ("tol",), "tol must lie in (0, 1)")
    if p.eta < 0:
        r.fail(path + ("eta",), "eta must be non-negative")
    if p.grid < 16:
        r.fail(path + ("grid",), "grid must be at least 16")
    if p.timesteps < 1:
        r.fail(path + ("timesteps",), "timesteps must be at least 1")


def parse_scenario(text: str, source: str = "<string>") -> Scenario:
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        raise ScenarioError("<document>", str(getattr(e, "problem", e)),
                            mark.line + 1 if mark is not None else None) from None
    r = _Reader(node)
    if not isinstance(data, dict):
        raise ScenarioError("<document>", "scenario must be a mapping", 1)

    version = data.get("version")
    if version != FORMAT_VERSION:
        r.fail(("version",), f"unsupported version {version!r}; expected {FORMAT_VERSION}")
    name = str(data.get("name", Path(source).stem))
    seed = r.number(data, (), "seed", 0, int)

    pd = data.get("params") or {}
    if not isinstance(pd, dict):
        r.fail(("params",), "expected a mapping")
    known = {"epsilon", "nu", "delta", "eta", "tol", "grid", "timesteps"}
    for k in pd:
        if k not in known:
            r.fail(("params", k), "unknown parameter")
    P = Params(
        epsilon=r.number(pd, ("params",), "epsilon", 0.5),
        nu=r.number(pd, ("params",), "nu", 0.02),
        delta=r.number(pd, ("params",), "delta", None),
        eta=r.number(pd, ("params",), "eta", 0.0),
        tol=r.number(pd, ("params",), "tol", 1e-4),
        grid=r.number(pd, ("params",), "grid", 256, int),
        timesteps=r.number(pd, ("params",), "timesteps", 16, int),
    )
    _validate_params(r, P)

    stages_raw = data.get("stages", [])
    if stages_raw is None:
        stages_raw = []
    if not isinstance(stages_raw, list):
        r.fail(("stages",), "expected a list")
    for i, s in enumerate(stages_raw):
        if s not in STAGES:
            r.fail(("stages", i), f"unknown stage {s!r}")

    comps_raw = (data.get("compactum") or {}).get("components")
    if not isinstance(comps_raw, list) or not comps_raw:
        r.fail(("compactum", "components"), "expected a non-empty list of components")
    comps, names, keyframes = [], [], {}
    for i, c in enumerate(comps_raw):
        path = ("compactum", "components", i)
        if not isinstance(c, dict) or "vertices" not in c:
            r.fail(path, "a component needs 'vertices'")
        V = r.points(c["vertices"], path + ("vertices",))
        nm = str(c.get("name", f"C{i}"))
        if nm in names:
            r.fail(path + ("name",), f"duplicate component name {nm!r}")
        closed = bool(c.get("closed", len(V) > 2))
        filled = bool(c.get("filled", False))
        try:
            comps.append(Component(Polyline(V, closed), filled, nm))
        except ValueError as e:
            r.fail(path, str(e))
        names.append(nm)
        kf = c.get("keyframes")
        if kf is not None:
            if not isinstance(kf, list) or not kf:
                r.fail(path + ("keyframes",), "expected a list of [t, vertex-list] pairs")
            frames = []
            for j, item in enumerate(kf):
                kp = path + ("keyframes", j)
                if not isinstance(item, list) or len(item) != 2:
                    r.fail(kp, "expected a [t, vertex-list] pair")
                t = item[0]
                if isinstance(t, bool) or not isinstance(t, (int, float)) or not 0 <= t <= 1:
                    r.fail(kp, f"keyframe time {t!r} outside [0, 1]")
                W = r.points(item[1], kp)
                if W.shape != V.shape:
                    r.fail(kp, f"keyframe has {len(W)} vertices, component has {len(V)}")
                frames.append((float(t), W))
            ts = [t for t, _ in frames]
            if any(b <= a for a, b in zip(ts, ts[1:])):
                r.fail(path + ("keyframes",), "keyframe times must increase")
            if ts[0] != 0.0:
                frames.insert(0, (0.0, V))
            elif not np.allclose(frames[0][1], V, atol=0, rtol=0):
                r.fail(path + ("keyframes", 0), "keyframe at t = 0 must equal the vertices")
            keyframes[i] = frames

    try:
        X = Compactum(tuple(comps), P.eta)
    except ValueError as e:
        r.fail(("compactum",), str(e))
    h = _isotopy_from_keyframes(X, keyframes)
    bad = h.embedding_violations()
    if bad:
        r.fail(("compactum", "components"), f"motion is not an isotopy near t = {bad[0][0]:.4g}")

    crosscut = None
    cc = data.get("crosscut")
    if cc is not None:
        crosscut = r.points(cc, ("crosscut",), 2)
    if "pipeline" in stages_raw and crosscut is None:
        r.fail(("crosscut",), "the pipeline stage needs a crosscut")

    dp = data.get("domain_point")
    domain_point = None
    if dp is not None:
        domain_point = tuple(r.points([dp], ("domain_point",))[0])
    if ("kp" in stages_raw or "lamination" in stages_raw) and domain_point is None:
        r.fail(("domain_point",), "the kp and lamination stages need a domain_point")

    equi = None
    ed = data.get("equi")
    if ed is not None:
        sets = []
        for key in ("A1", "A2"):
            v = ed.get(key) if isinstance(ed, dict) else None
            if not isinstance(v, list) or not v:
                r.fail(("equi", key), "expected a list of component names")
            for j, nm in enumerate(v):
                if nm not in names:
                    r.fail(("equi", key, j), f"unknown component {nm!r}")
            sets.append(tuple(v))
        if set(sets[0]) & set(sets[1]):
            r.fail(("equi",), "A1 and A2 must be disjoint")
        equi = (sets[0], sets[1])
    if "equi" in stages_raw and equi is None:
        r.fail(("equi",), "the equi stage needs A1 and A2")

    lam = data.get("lamination") or {}
    if not isinstance(lam, dict):
        r.fail(("lamination",), "expected a mapping")

    return Scenario(name, int(version), X, h, P, tuple(stages_raw), seed, crosscut,
                    bool(data.get("encircle", False)), domain_point, equi, dict(lam), source)


def _isotopy_from_keyframes(X: Compactum, keyframes: dict) -> Isotopy:
    times = sorted({0.0, 1.0} | {t for fr in keyframes.values() for t, _ in fr})
    frames = []
    for t in times:
        fr = []
        for i, c in enumerate(X.components):
            if i not in keyframes:
                fr.append(c.vertices)
                continue
            kt = np.array([s for s, _ in keyframes[i]])
            kv = np.stack([v for _, v in keyframes[i]])
            k = int(np.searchsorted(kt, t, side="right")) - 1
            if k >= len(kt) - 1:
                fr.append(kv[-1])
            else:
                s = (t - kt[k]) / (kt[k + 1] - kt[k])
                fr.append((1 - s) * kv[k] + s * kv[k + 1])
        frames.append(tuple(fr))
    return Isotopy(X, np.array(times), tuple(frames))


def load_scenario(path) -> Scenario:
    """Read a scenario file, or a bundled scenario by name (``two-squares``)."""
    p = Path(path)
    if not p.exists():
        bundled = resources.files("planar_isotopy") / "scenarios" / f"{path}.yaml"
        if bundled.is_file():
            return parse_scenario(bundled.read_text(), str(path))
        raise ScenarioError("<file>", f"no such scenario: {path}")
    return parse_scenario(p.read_text(), str(p))


def bundled_scenarios() -> list[str]:
    d = resources.files("planar_isotopy") / "scenarios"
    return sorted(f.name[:-5] for f in d.iterdir() if f.name.endswith(".yaml"))
