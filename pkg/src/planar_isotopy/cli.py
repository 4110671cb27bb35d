"""Command line: ``planar-isotopy run <scenario> --out <dir>``.

Stages run in dependency order (pipeline needs up, lamination needs up and
kp).  A failing stage halts its dependents; the report, metrics and the
frames produced so far are always written.  Nothing time- or host-dependent
enters the outputs, so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .compacta import (Isotopy, complementary_domains, encircle, estimate_uniform_perfectness,
                       locate)
from .equidistant import equidistant_set, non_interlaced_test, validate_manifold
from .errors import GeometryError
from .expflow import PipelineParams, run_pipeline
from .kulkarni_pinkall import Domain, KPDecomposition, chord_family
from .lamination import build_lamination, continuity_probe, extend_isotopy, select_chords
from .planar import Grid
from .plotting import write_frame
from .scenario import DEPENDS, Scenario, ScenarioError, load_scenario, resolve_stages

METRICS_HEADER = ("t", "diam_gamma", "hausdorff_step", "min_poleball_clearance")


@dataclass
class StageResult:
    name: str
    status: str  # pass | fail | halted
    lines: list = field(default_factory=list)
    constants: dict = field(default_factory=dict)


@dataclass
class Run:
    scenario: Scenario
    out: Path
    seed: int
    results: list = field(default_factory=list)
    metrics: list = field(default_factory=list)
    frames: list = field(default_factory=list)  # (t, layers, bounds, title, filled, markers)
    kp: dict = field(default_factory=dict)


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.6g}"
    if isinstance(v, complex):
        return f"({v.real:.6g}, {v.imag:.6g})"
    if isinstance(v, (tuple, list)):
        return "(" + ", ".join(_fmt(x) for x in v) + ")"
    if isinstance(v, np.ndarray):
        return _fmt(v.tolist())
    return str(v)


def _closed(P: np.ndarray, closed: bool) -> np.ndarray:
    return np.vstack([P, P[:1]]) if closed and len(P) > 2 else P


def _compactum_layer(X, skip_sigma: bool = True):
    lines, fills = [], []
    for i, c in enumerate(X.components):
        if skip_sigma and X.sigma is not None and i == X.sigma:
            continue
        lines.append(_closed(c.vertices, c.polyline.closed))
        if c.filled:
            fills.append(c.vertices)
    return lines, fills


def _bounds(h: Isotopy, pad: float = 0.08, skip_sigma: bool = True):
    X = h.base
    pts = []
    for fr in h.frames:
        for i, v in enumerate(fr):
            if skip_sigma and X.sigma is not None and i == X.sigma:
                continue
            pts.append(v)
    P = np.concatenate(pts)
    lo, hi = P.min(0), P.max(0)
    m = pad * max(float((hi - lo).max()), 1e-3)
    return float(lo[0] - m), float(hi[0] + m), float(lo[1] - m), float(hi[1] + m)


def _stage_grid(sc: Scenario, n: int) -> Grid:
    xmin, xmax, ymin, ymax = _bounds(sc.h, pad=0.05)
    return Grid.covering(xmin, xmax, ymin, ymax, n)


# stages

def stage_up(run: Run, grid_n: int, timesteps: int) -> StageResult:
    sc = run.scenario
    r = StageResult("up", "pass")
    ks = []
    for t in sc.h.breakpoints():
        rep = estimate_uniform_perfectness(sc.h.evaluate(float(t)), center_level=1, radius_level=0,
                                           depth=8)
        ks.append(rep.k_hat)
        if rep.k_hat <= 0:
            r.status = "fail"
            r.lines.append(f"witness: t = {_fmt(float(t))}, empty annulus at {_fmt(rep.witness_failures[:1])}")
    r.constants["k_hat"] = float(min(ks))
    r.lines.append(f"k_hat (min over keyframes) = {_fmt(min(ks))}")
    eta = sc.params.eta
    if eta > 0:
        for t in sc.h.breakpoints():
            d = sc.h.evaluate(float(t)).component_diameters()
            if d.min() < eta:
                r.status = "fail"
                r.lines.append(f"witness: t = {_fmt(float(t))}, component diameter {_fmt(d.min())} < eta = {_fmt(eta)}")
        r.lines.append(f"all component diameters >= eta = {_fmt(eta)}: {r.status == 'pass'}")
    return r


def stage_kp(run: Run, grid_n: int, timesteps: int) -> StageResult:
    sc = run.scenario
    r = StageResult("kp", "pass")
    grid = _stage_grid(sc, grid_n)
    X0 = sc.h.evaluate(0.0)
    dm = complementary_domains(X0, grid)
    label = dm.label_at(np.asarray(sc.domain_point))
    if label not in dm.bounded_labels:
        raise GeometryError("domain-unbounded", "domain_point lies in the unbounded domain",
                            witness=sc.domain_point)
    U = Domain.from_domain_map(X0, dm, label)
    dec = KPDecomposition(U)
    J = chord_family(U, dec.disks)
    run.kp.update(U=U, grid=grid, J=J, decomposition=dec)

    rng = np.random.default_rng(run.seed)
    cells = np.argwhere(U.mask)
    pick = cells[rng.choice(len(cells), size=min(200, len(cells)), replace=False)]
    pts = grid.centers().reshape(grid.ny, grid.nx, 2)[pick[:, 0], pick[:, 1]]
    pts = pts + (rng.random(pts.shape) - 0.5) * grid.cell_size
    n_unique = 0
    for p in pts:
        try:
            m = dec.membership(p)
        except GeometryError as e:
            r.status = "fail"
            r.lines.append(f"witness: {e.code} at {_fmt(tuple(p))}")
            continue
        if m.unique:
            n_unique += 1
        else:
            r.status = "fail"
            r.lines.append(f"witness: {m.n_containing} separate hulls contain {_fmt(tuple(p))}")
    r.constants.update(n_disks=len(dec.disks), n_chords=len(J.chords),
                       membership_unique=n_unique, membership_probes=len(pts))
    r.lines.append(f"maximal disks = {len(dec.disks)}, chords = {len(J.chords)}")
    r.lines.append(f"unique membership: {n_unique}/{len(pts)} random interior points")
    big = sorted(J.chords, key=lambda c: -c.diameter)[:12]
    for c in big:
        r.lines.append(f"  chord {_fmt(c.endpoint_a)} -- {_fmt(c.endpoint_b)}  diam {_fmt(c.diameter)}")
    lines, fills = _compactum_layer(X0)
    centers = np.array([[d.center.real, d.center.imag] for d in dec.disks])
    run.frames.append((0.0, {"compactum": lines, "chords": [c.carrier.vertices for c in J.chords]},
                       _bounds(sc.h), f"{sc.name}: skeleton and chords", {"compactum": fills},
                       {"skeleton": centers}))
    return r


def stage_equi(run: Run, grid_n: int, timesteps: int) -> StageResult:
    sc = run.scenario
    r = StageResult("equi", "pass")
    X0 = sc.h.evaluate(0.0)
    names = [c.name for c in X0.components]
    A = [[X0.components[names.index(n)].polyline for n in s] for s in sc.equi_sets]
    pts = np.concatenate([p.vertices for s in A for p in s])
    lo, hi = pts.min(0), pts.max(0)
    m = 0.5 * max(float((hi - lo).max()), 1.0)
    grid = Grid.covering(lo[0] - m, hi[0] + m, lo[1] - m, hi[1] + m, grid_n)
    M = equidistant_set(A[0], A[1], grid)
    try:
        cert = validate_manifold(M)
        manifold_ok = True
        r.lines.append(f"validate_manifold: pass ({cert.n_lines} lines, {cert.n_loops} loops, "
                       f"max degree {cert.max_degree})")
    except GeometryError as e:
        manifold_ok = False
        r.lines.append(f"validate_manifold: fail ({e.code}, witness {_fmt(e.witness)})")
    nit = non_interlaced_test(A[0], A[1], grid, seed=run.seed)
    if nit.passed:
        r.lines.append(f"non_interlaced_test: pass ({nit.n_probes} probe disks)")
    else:
        w = nit.witness
        r.lines.append(f"non_interlaced_test: fail (witness disk center {_fmt(w.center)}, radius {_fmt(w.radius)})")
    agree = manifold_ok == nit.passed
    r.lines.append(f"manifold iff non-interlaced: {agree}")
    if not agree:
        r.status = "fail"
    r.constants.update(equi_curves=len(M.curves), equi_manifold=int(manifold_ok),
                       equi_non_interlaced=int(nit.passed))
    lines, fills = _compactum_layer(X0)
    run.frames.append((0.0, {"compactum": lines, "manifold": [c.vertices for c in M.curves]},
                       (float(grid.xs[0]), float(grid.xs[-1]), float(grid.ys[0]), float(grid.ys[-1])),
                       f"{sc.name}: equidistant set", {"compactum": fills}, {}))
    return r


def stage_pipeline(run: Run, grid_n: int, timesteps: int) -> StageResult:
    sc = run.scenario
    r = StageResult("pipeline", "pass")
    X, h = encircle(sc.h.base, sc.h)
    Q = np.asarray(sc.crosscut, float)
    loc = locate(X, Q[0], 1e-9)
    anchor = (lambda t: h.track(loc, t))
    P = sc.params
    if P.delta is None:
        params = PipelineParams.derive(P.epsilon, P.nu, h, anchor=anchor, tol=P.tol)
    else:
        params = PipelineParams(P.epsilon, P.nu, P.delta, P.tol)
    r.lines.append(f"epsilon = {_fmt(params.epsilon)}, nu = {_fmt(params.nu)}, delta = {_fmt(params.delta)}")
    res = run_pipeline(X, h, Q, params, n_steps=timesteps, grid_n=grid_n)
    cell = res.window.cell_size
    steps = (0.0,) + res.modulus.steps
    for f, d, s in zip(res.frames, res.diameters, steps):
        run.metrics.append((f.t, float(d), float(s), float(f.clearance)))
    r.constants.update(delta=params.delta, K=res.K, W=res.window.W, cell=cell,
                       max_diam_gamma=float(res.diameters.max()),
                       hausdorff_modulus=res.modulus.modulus, max_hausdorff_step=res.modulus.max_jump,
                       min_clearance=res.min_clearance, n_frames=len(res.frames))
    r.lines.append(f"frames = {len(res.frames)} (requested {timesteps + 1}), window W = {_fmt(res.window.W)}, cell = {_fmt(cell)}, K = {_fmt(res.K)}")
    r.lines.append(f"max diam(gamma_t) = {_fmt(res.diameters.max())} < epsilon: {bool(res.diameters.max() < params.epsilon)}")
    r.lines.append(f"Hausdorff modulus = {_fmt(res.modulus.modulus)}, max step = {_fmt(res.modulus.max_jump)}")
    hom = res.homotopy
    r.lines.append(f"gamma_0 homotopic to Q rel endpoints: {bool(hom)} (windings {_fmt(hom.windings)})")
    r.lines.append(f"dichotomy: {res.dichotomy.passed} ({res.dichotomy.n_pairs} pairs)")
    sz = res.sizes
    r.lines.append(f"sizes: fixed points = {sz.fixed_points}, segment clear = {sz.segment_clear}, "
                   f"escape ratio = {_fmt(sz.escape_ratio)}, far-point ratio = {_fmt(sz.far_ratio)}")
    clear_ok = res.min_clearance >= cell
    r.lines.append(f"min pole-ball clearance = {_fmt(res.min_clearance)} >= cell: {clear_ok}")
    if not (bool(hom) and res.dichotomy.passed and clear_ok):
        r.status = "fail"
        if not clear_ok:
            k = int(np.argmin([f.clearance for f in res.frames]))
            r.lines.append(f"witness: clearance {_fmt(res.frames[k].clearance)} at t = {_fmt(res.frames[k].t)}")
    bounds = _bounds(sc.h)
    for f in res.frames:
        Xt = h.evaluate(f.t)
        lines, fills = _compactum_layer(Xt)
        run.frames.append((f.t, {"compactum": lines, "gamma": [f.gamma_t.vertices]}, bounds,
                           f"{sc.name}: pipeline", {"compactum": fills}, {}))
    return r


def _corner_sequence(J, corner, sizes):
    p = complex(*corner)
    out = []
    for D in sizes:
        near = [c for c in J.chords if min(abs(c.endpoint_a - p), abs(c.endpoint_b - p)) < D]
        if near:
            c = min(near, key=lambda c: abs(c.diameter - D))
            if all(c is not q for q in out):
                out.append(c)
    return out


def stage_lamination(run: Run, grid_n: int, timesteps: int) -> StageResult:
    sc = run.scenario
    r = StageResult("lamination", "pass")
    cfg = sc.lamination
    J, grid = run.kp["J"], run.kp["grid"]
    chords = select_chords(J, int(cfg.get("n_chords", 4)), float(cfg.get("min_diam", 0.0)),
                           float(cfg.get("min_sep", 0.0)))
    corner = cfg.get("corner")
    seq = _corner_sequence(J, corner, cfg.get("corner_sequence", [])) if corner is not None else []
    seq = [c for c in seq if all(c is not q for q in chords)]
    n_big = len(chords)
    chords = chords + seq
    times = np.linspace(0.0, 1.0, timesteps + 1)
    U0 = run.kp["U"].mask
    L = build_lamination(chords, sc.h, times, grid, U0_mask=U0)
    E = extend_isotopy(L, sc.h)
    cell = grid.cell_size

    mid_err = max(float(np.abs(E(c.mids[0], t) - c.mids[k]).max())
                  for c in L.chords for k, t in enumerate(L.times))
    end_err = 0.0
    for c in L.chords:
        for k, t in enumerate(L.times):
            a, b = c.endpoints(k)
            end_err = max(end_err, float(np.hypot(*(a - sc.h.track(c.a, t)))),
                          float(np.hypot(*(b - sc.h.track(c.b, t)))))
    ident = Isotopy.identity(sc.h.base)
    Li = build_lamination(chords, ident, [0.0, 1.0], grid, U0_mask=U0)
    Ei = extend_isotopy(Li, ident)
    id_err = 0.0
    for c in Li.chords:
        for p in c.carriers[0].vertices[1:-1:5]:
            id_err = max(id_err, float(np.hypot(*(Ei(p, 0.5) - p))))

    rng = np.random.default_rng(run.seed)
    probes = []
    t_inf = float(rng.uniform(0.25, 0.75))
    for c in L.chords[:n_big]:
        p0 = c.mids[0]
        probes.append(([(p0, t_inf + 2.0 ** -k) for k in range(2, 9)], (p0, t_inf)))
        tab, s0 = c.tables[0], c.mid_s[0]
        xa = c.carriers[0].vertices[0]
        probes.append(([(tab.point(s0 - k), t_inf) for k in range(1, 7)], (xa, t_inf)))
    if len(seq) >= 2:
        probes.append(([(c.mids[0], t_inf) for c in L.chords[n_big:]], (tuple(corner), t_inf)))
    rep = continuity_probe(E, probes, tol=2 * cell)

    mid_ok, end_ok, id_ok = mid_err == 0.0, end_err <= cell, id_err < cell
    r.lines.append(f"chords = {len(L.chords)} ({n_big} selected, {len(seq)} in the corner sequence), frames = {len(L.times)}, gaps at t=0: {L.n_gaps}")
    r.lines.append(f"midpoint matching error = {_fmt(mid_err)} (exact: {mid_ok})")
    r.lines.append(f"endpoint fidelity error = {_fmt(end_err)} (<= cell {_fmt(cell)}: {end_ok})")
    r.lines.append(f"identity isotopy sup error = {_fmt(id_err)} (< cell: {id_ok})")
    r.lines.append(f"continuity probe: {len(probes)} sequences at t_inf = {_fmt(t_inf)}, max final gap = {_fmt(rep.max_final_gap)}, vanishing: {rep.vanishing}")
    r.constants.update(lam_chords=len(L.chords), lam_midpoint_error=mid_err, lam_endpoint_error=end_err,
                       lam_identity_error=id_err, lam_max_final_gap=rep.max_final_gap, lam_gaps=L.n_gaps)
    if not (mid_ok and end_ok and id_ok and rep.vanishing):
        r.status = "fail"
    bounds = _bounds(sc.h)
    for k, t in enumerate(L.times):
        lines, fills = _compactum_layer(sc.h.evaluate(float(t)))
        run.frames.append((float(t), {"compactum": lines, "chords": [c.vertices for c in L.carriers_at(k)]},
                           bounds, f"{sc.name}: lamination", {"compactum": fills}, {}))
    return r


STAGE_FUNCS = {"up": stage_up, "kp": stage_kp, "equi": stage_equi,
               "pipeline": stage_pipeline, "lamination": stage_lamination}


# outputs

def _write_metrics(path: Path, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(METRICS_HEADER)
        for row in rows:
            w.writerow([f"{v:.10g}" for v in row])


def _write_constants(path: Path, results):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(("stage", "name", "value"))
        for r in results:
            for k, v in r.constants.items():
                w.writerow((r.name, k, f"{float(v):.10g}"))


def _write_report(path: Path, header: list, results, rejection: str | None = None):
    out = list(header)
    if rejection is not None:
        out.append("stage parse: FAIL")
        out.append(f"  {rejection}")
    for r in results:
        out.append(f"stage {r.name}: {r.status.upper()}")
        out.extend(f"  {ln}" for ln in r.lines)
    if rejection is None:
        overall = all(r.status == "pass" for r in results)
        out.append(f"overall: {'PASS' if overall else 'FAIL'}")
    else:
        out.append("overall: FAIL")
    path.write_text("\n".join(out) + "\n")


def run_scenario(sc: Scenario, out: Path, stages=None, grid: int | None = None,
                 timesteps: int | None = None, seed: int | None = None, log=None) -> Run:
    out = Path(out)
    (out / "frames").mkdir(parents=True, exist_ok=True)
    seed = sc.seed if seed is None else seed
    grid_n = sc.params.grid if grid is None else grid
    steps = sc.params.timesteps if timesteps is None else timesteps
    requested = sc.stages if stages is None else tuple(stages)
    order = resolve_stages(requested)
    if "pipeline" in order and sc.crosscut is None:
        raise ScenarioError("crosscut", "the pipeline stage needs a crosscut")
    if ("kp" in order) and sc.domain_point is None:
        raise ScenarioError("domain_point", "the kp and lamination stages need a domain_point")
    if "equi" in order and sc.equi_sets is None:
        raise ScenarioError("equi", "the equi stage needs A1 and A2")
    run = Run(sc, out, seed)
    failed = set()
    for name in order:
        deps = [d for d in DEPENDS[name] if d in failed]
        if deps:
            run.results.append(StageResult(name, "halted", [f"not run: prerequisite {deps[0]} failed"]))
            failed.add(name)
            continue
        t0 = time.perf_counter()
        try:
            res = STAGE_FUNCS[name](run, grid_n, steps)
        except GeometryError as e:
            res = StageResult(name, "fail", [f"error {e.code}: {e}", f"witness: {_fmt(e.witness)}"])
        if log is not None:
            log(f"{name}: {res.status} in {time.perf_counter() - t0:.1f} s")
        run.results.append(res)
        if res.status != "pass":
            failed.add(name)
    digest = hashlib.sha256(repr((sc.name, sc.source and Path(sc.source).name)).encode()).hexdigest()[:12]
    header = [f"scenario: {sc.name} (format version {sc.version}, id {digest})",
              f"seed: {seed}",
              f"stages: {', '.join(order) if order else '(none)'}",
              f"grid: {grid_n}", f"timesteps: {steps}"]
    _write_report(out / "report.txt", header, run.results)
    _write_metrics(out / "metrics.csv", run.metrics)
    _write_constants(out / "constants.csv", run.results)
    for k, (t, layers, bounds, title, filled, markers) in enumerate(run.frames):
        write_frame(out / "frames" / f"{k:04d}.svg", t, layers, bounds, title, filled, markers)
    return run


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="planar-isotopy", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the stages of a scenario file (or a bundled scenario name)")
    r.add_argument("scenario")
    r.add_argument("--out", required=True, type=Path)
    r.add_argument("--stages", nargs="*", choices=list(STAGE_FUNCS), default=None,
                   help="stages to run (default: those listed in the scenario); give none for an empty run")
    r.add_argument("--grid", type=int, default=None)
    r.add_argument("--timesteps", type=int, default=None)
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("-q", "--quiet", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    log = None if args.quiet else (lambda s: print(s, file=sys.stderr))
    try:
        sc = load_scenario(args.scenario)
        if args.grid is not None and args.grid < 16:
            raise ScenarioError("--grid", "grid must be at least 16")
        if args.timesteps is not None and args.timesteps < 1:
            raise ScenarioError("--timesteps", "timesteps must be at least 1")
    except ScenarioError as e:
        args.out.mkdir(parents=True, exist_ok=True)
        _write_report(args.out / "report.txt", [f"scenario: {args.scenario}"], [], rejection=str(e))
        _write_metrics(args.out / "metrics.csv", [])
        print(f"rejected: {e}", file=sys.stderr)
        return 2
    try:
        run = run_scenario(sc, args.out, args.stages, args.grid, args.timesteps, args.seed, log)
    except ScenarioError as e:
        _write_report(args.out / "report.txt", [f"scenario: {sc.name}"], [], rejection=str(e))
        _write_metrics(args.out / "metrics.csv", [])
        print(f"rejected: {e}", file=sys.stderr)
        return 2
    ok = all(r.status == "pass" for r in run.results)
    if log:
        log(f"wrote {args.out / 'report.txt'}")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
