"""Batch front end: ``plateau-hxr <group> <command> [flags]``.

Every run writes its artifacts plus ``manifest.json`` into ``--out-dir``.
Exit status is 0 on success, 2 on invalid input and 3 on numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np

from . import boundary_curves as bc
from . import catenoid as cat
from . import rectangle_graphs as rg
from . import scenarios as sc
from . import topology as tp
from .errors import NumericalFailure, PlateauError, ValidationError
from .mesh import SurfaceMesh
from .minimizer import SolverConfig, minimize_multilevel

log = logging.getLogger("plateau_hxr")

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 2, 3


# -- manifest ------------------------------------------------------------------------

def tool_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


@dataclass
class RunManifest:
    command: str
    inputs: list
    params: dict
    seed: int
    outputs: list = field(default_factory=list)
    tool_version: str = field(default_factory=tool_version)
    checksums: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def load(cls, path) -> "RunManifest":
        return cls(**json.loads(Path(path).read_text()))


class Run:
    """Collects artifacts for one invocation and writes the manifest."""

    def __init__(self, args):
        self.out = Path(args.out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        params = {k: v for k, v in vars(args).items() if k not in ("func", "out_dir", "inputs_") and v is not None}
        self.manifest = RunManifest(f"{args.group} {args.command}", list(getattr(args, "inputs_", [])),
                                    params, int(args.seed))

    def _record(self, path: Path) -> str:
        self.manifest.outputs.append(path.name)
        self.manifest.checksums[path.name] = hashlib.sha256(path.read_bytes()).hexdigest()
        return str(path)

    def json(self, name: str, obj) -> str:
        path = self.out / name
        path.write_text(json.dumps(obj, indent=2, default=_json_default) + "\n")
        return self._record(path)

    def csv(self, name: str, header, rows) -> str:
        path = self.out / name
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows([_csv_num(x) for x in row] for row in rows)
        return self._record(path)

    def text(self, name: str, text: str) -> str:
        path = self.out / name
        path.write_text(text)
        return self._record(path)

    def mesh(self, name: str, mesh: SurfaceMesh) -> str:
        path = self.out / name
        mesh.save(path)
        return self._record(path)

    def finish(self, args) -> Path:
        self.manifest.inputs = list(getattr(args, "inputs_", []))
        path = self.out / "manifest.json"
        path.write_text(json.dumps(self.manifest.to_json(), indent=2) + "\n")
        return path


def _json_default(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return _json_float(float(x))
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if hasattr(x, "to_json"):
        return x.to_json()
    raise TypeError(f"cannot serialise {type(x).__name__}")


def _json_float(x: float):
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")


def _csv_num(x):
    return repr(float(x)) if isinstance(x, (float, np.floating)) else x


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get("PLATEAU_HXR_THREADS", "1")))
    except ValueError:
        return 1


def fan_out(fn, items):
    items = list(items)
    workers = min(worker_count(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# -- SVG ---------------------------------------------------------------------------------

def curve_svg(family: bc.BoundaryCurveFamily, title: str = "", scale: float = 60.0) -> str:
    """Cylinder unrolled to [0, 2pi) x t with ruler lines every pi in t."""
    lo, hi = family.t_range()
    lo, hi = math.floor(lo / math.pi) * math.pi, math.ceil(hi / math.pi) * math.pi
    if hi <= lo:
        hi = lo + math.pi
    width, height = 2 * math.pi * scale, (hi - lo) * scale
    px = lambda th: (th % (2 * math.pi)) * scale  # noqa: E731
    py = lambda t: (hi - t) * scale  # noqa: E731
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width + 40:.1f}" height="{height + 40:.1f}">',
             '<g transform="translate(20,20)">',
             f'<rect x="0" y="0" width="{width:.1f}" height="{height:.1f}" fill="none" stroke="#999"/>']
    k = lo
    while k <= hi + 1e-9:
        parts.append(f'<line x1="0" y1="{py(k):.1f}" x2="{width:.1f}" y2="{py(k):.1f}" '
                     'stroke="#ccc" stroke-dasharray="4 4"/>')
        k += math.pi
    for curve in family:
        for kind, a, b in curve.edges():
            x1, x2 = a[0], b[0]
            if kind == "h" and abs(x2 - x1) > 1e-12:
                # split horizontal edges at the seam
                lo_x, hi_x = sorted((x1, x2))
                start = lo_x
                while start < hi_x - 1e-12:
                    seam = (math.floor(start / (2 * math.pi) + 1e-12) + 1) * 2 * math.pi
                    stop = min(hi_x, seam)
                    xa = px(start)
                    xb = xa + (stop - start) * scale
                    parts.append(f'<line x1="{xa:.2f}" y1="{py(a[1]):.2f}" x2="{xb:.2f}" y2="{py(a[1]):.2f}" '
                                 'stroke="black" stroke-width="1.5"/>')
                    start = stop
            else:
                parts.append(f'<line x1="{px(x1):.2f}" y1="{py(a[1]):.2f}" x2="{px(x1):.2f}" y2="{py(b[1]):.2f}" '
                             'stroke="black" stroke-width="1.5"/>')
    if title:
        parts.append(f'<text x="4" y="-6" font-size="12">{title}</text>')
    parts.append("</g></svg>\n")
    return "\n".join(parts)


# -- argument helpers --------------------------------------------------------------------

def float_list(text: str) -> list[float]:
    try:
        return [_parse_float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from exc


def _parse_float(x: str) -> float:
    x = x.strip().lower().replace(" ", "")
    if x.endswith("pi"):
        head = x[:-2].rstrip("*")
        return (float(head) if head else 1.0) * math.pi
    return float(x)


def _solver_config(args) -> SolverConfig:
    return SolverConfig(tol_grad=args.tol, max_iters=args.max_iters, seed=args.seed)


def _load_family(args) -> bc.BoundaryCurveFamily:
    if not args.input:
        raise argparse.ArgumentTypeError("--in is required for this command")
    args.inputs_ = [args.input]
    return bc.load_family(args.input)


def _maybe_mesh(run: Run, args, name: str, mesh: SurfaceMesh | None):
    if args.export_mesh and mesh is not None:
        run.mesh(name, mesh)


# -- curve ---------------------------------------------------------------------------------

def cmd_curve_classify(args, run: Run):
    fam = _load_family(args)
    verdict = bc.classify(fam, args.tol)
    run.json("classify.json", verdict.to_json())
    run.text("curve.svg", curve_svg(fam, f"{verdict.curve_class.value}  h = {verdict.height:.6g}"))
    return f"{verdict.curve_class.value} height {verdict.height:.12g}"


def cmd_curve_height(args, run: Run):
    fam = _load_family(args)
    rep = bc.height_report(fam)
    run.json("height.json", {"height": _json_float(rep.pointwise), "essential_height": _json_float(rep.essential),
                             "theta": rep.theta, "component": rep.component})
    return f"height {rep.pointwise:.12g}"


def cmd_curve_tails(args, run: Run):
    fam = _load_family(args)
    tails = bc.detect_thin_tails(fam)
    run.json("tails.json", [dict(t.to_json(), checked=bc.check_thin_tail(t)) for t in tails])
    return f"{len(tails)} thin tails"


def cmd_curve_decompose(args, run: Run):
    fam = _load_family(args)
    cells = bc.decompose_tall_region(fam, args.side, args.tol)
    run.json("decompose.json", [c.to_json() for c in cells])
    return f"{len(cells)} cells"


# -- catenoid ------------------------------------------------------------------------------

def _table_row(job):
    d, with_iota = job
    return cat.table_row(d, with_iota).as_tuple()


def cmd_catenoid_table(args, run: Run):
    rows = fan_out(_table_row, [(d, not args.no_iota) for d in args.d])
    run.csv("catenoid_table.csv", cat.TableRow.HEADER, rows)
    h = [r[3] for r in rows]
    increasing = all(b > a for a, b in zip(h, h[1:]))
    return f"{len(rows)} rows, h(d) strictly increasing: {increasing}"


def cmd_catenoid_verify(args, run: Run):
    rows, worst = [], 0.0
    for d in args.d:
        for rho in args.rho:
            if rho < cat.neck_radius(d):
                continue
            l1, l2 = cat.lam(d, rho).value, cat.lam_u_route(d, rho).value
            a1, a2 = cat.area_integral(d, rho).value, cat.area_integral_u_route(d, rho).value
            err_l = abs(l1 - l2)
            err_a = abs(a1 - a2) / max(1.0, abs(a1))
            worst = max(worst, err_l, err_a)
            rows.append((d, rho, l1, l2, err_l, a1, a2, err_a))
    run.csv("verify.csv", ("d", "rho", "lam", "lam_u", "lam_err", "I", "I_u", "I_rel_err"), rows)
    if worst > args.tol:
        raise NumericalFailure(f"quadrature routes disagree by {worst:.3g} > {args.tol:.3g}")
    return f"{len(rows)} points, worst disagreement {worst:.3g}"


def cmd_catenoid_iota(args, run: Run):
    out = []
    for d in args.d:
        res = cat.iota(d)
        out.append({"d": d, "iota": res.value, "upper": res.upper, "lower": res.lower, "gap": res.gap,
                    "flagged": res.flagged, "rho_hat": cat.rho_hat(d),
                    "derivative_root": cat.iota_derivative_root(d)})
    run.json("iota.json", out)
    return "; ".join(f"iota({o['d']:g}) = {o['iota']:.9g}" for o in out)


# -- graph -----------------------------------------------------------------------------------

def _graph_result(surf: rg.RectangleGraphSurface) -> dict:
    return {"rect": surf.rect.to_json(), "n": surf.truncation_n, "area": surf.mesh.meta.get("area"),
            "graph": surf.graph.to_json() if surf.graph else None,
            "mid_slice_distance": rg.mid_slice_distance(surf),
            "iterations": surf.mesh.meta.get("iterations")}


def cmd_graph_solve(args, run: Run):
    rect = bc.CylRect(*args.rect)
    surf = rg.solve_rectangle_graph(rect, args.truncation, args.mesh_res, _solver_config(args))
    res = _graph_result(surf)
    run.json("graph.json", res)
    _maybe_mesh(run, args, "graph.mesh", surf.mesh)
    return f"area {res['area']:.6g}, d_h {res['mid_slice_distance']:.6g}"


def cmd_graph_dh(args, run: Run):
    rows = []
    for h in args.heights:
        rect = bc.CylRect(-math.pi / 2, math.pi / 2, -h / 2, h / 2)
        surf = rg.solve_rectangle_graph(rect, args.truncation, args.mesh_res, _solver_config(args))
        rows.append((h, rg.mid_slice_distance(surf), surf.mesh.meta["area"]))
    run.csv("dh.csv", ("height", "mid_slice_distance", "area"), rows)
    dh = [r[1] for r in rows]
    return f"d_h strictly decreasing: {all(b < a for a, b in zip(dh, dh[1:]))}"


def cmd_graph_foliation(args, run: Run):
    fol = rg.build_foliation(args.h0, args.heights, args.truncation, args.mesh_res, _solver_config(args))
    run.json("foliation.json", {"h0": fol.h0, "members": [{"h": h, "rect": r.to_json(), "s": fol.s(h)}
                                                          for h, r, _ in fol.members],
                                "separations": fol.separations, "crossings": fol.crossings,
                                "disjoint": fol.disjoint, "nested": fol.nested()})
    return f"disjoint {fol.disjoint}, nested {fol.nested()}"


# -- solve -------------------------------------------------------------------------------------

def cmd_solve_plateau(args, run: Run):
    fam = _load_family(args)
    cfg = _solver_config(args).with_(refine_levels=args.mesh_res)
    mesh = minimize_multilevel(sc.family_seed(fam, args.truncation), cfg)
    run.json("plateau.json", {"area": mesh.meta["area"], "iterations": mesh.meta["iterations"],
                              "grad_norm": mesh.meta["grad_norm"], "signature": mesh.signature().to_json()})
    _maybe_mesh(run, args, "plateau.mesh", mesh)
    return f"area {mesh.meta['area']:.6g}"


def cmd_solve_escape(args, run: Run):
    fam = _load_family(args)
    rep = sc.solve_sequence(fam, args.n_list, None, _solver_config(args))
    run.json("escape.json", rep.to_json())
    if args.export_mesh:
        for n, m in zip(rep.n_list, rep.meshes):
            if m is not None:
                run.mesh(f"escape_n{n:g}.mesh", m)
    return f"{rep.verdict}, probe areas {[round(v, 4) if v is not None else None for v in rep.occupancy_area]}"


def cmd_solve_sweep(args, run: Run):
    if not args.target:
        raise argparse.ArgumentTypeError("--target mesh file is required")
    args.inputs_ = [args.target]
    target = SurfaceMesh.load(args.target)
    rep = sc.catenoid_sweep(target, args.h0, args.d_param, args.t_grid, args.center)
    run.json("sweep.json", rep.to_json())
    return "clean sweep" if rep.clean else f"first intersection at t = {rep.first_hit:.6g}"


def cmd_solve_minexist(args, run: Run):
    con, free, rep = sc.minexist_scenario(args.h0, args.s, args.t, _solver_config(args), args.truncation)
    run.json("minexist.json", rep.to_json())
    _maybe_mesh(run, args, "minexist_constrained.mesh", con)
    _maybe_mesh(run, args, "minexist_free.mesh", free)
    return (f"constrained area {rep.constrained_area:.6g}, violations {rep.violations}, "
            f"free area {rep.free_area:.6g}, not minimizing {rep.not_minimizing}")


def cmd_solve_bridge(args, run: Run):
    fam = _load_family(args)
    seg = tp.Segment(*args.bridge)
    _, solved, rep = sc.bridge_solve(fam, seg, args.thickness, args.truncation, _solver_config(args), args.seed)
    run.json("bridge.json", rep.to_json())
    _maybe_mesh(run, args, "bridge.mesh", solved)
    return f"signature {rep.signature_after}, matches prediction {rep.matches}"


# -- schedule --------------------------------------------------------------------------------

def _schedule_outputs(run: Run, schedule: tp.BridgeSchedule):
    run.json("schedule.json", schedule.to_json())
    for i, curve in enumerate(schedule.stage_curves):
        run.text(f"stage_{i:02d}.svg", curve_svg(curve, f"stage {i}"))


def cmd_schedule_make(args, run: Run):
    target = tp.SurfaceSignature.compact(args.genus, args.ends)
    schedule = tp.emit_schedule(target, args.epsilon0, max_steps=args.steps)
    _schedule_outputs(run, schedule)
    return f"{len(schedule.steps)} steps, final {schedule.final_signature.to_json()}"


def cmd_schedule_finite(args, run: Run):
    if args.ends < 1:
        raise ValidationError("a finite-type target needs at least one end")
    schedule = tp.finite_type_schedule(args.genus, args.ends - 1)
    _schedule_outputs(run, schedule)
    return (f"{schedule.count(tp.PAIR_OF_PANTS_BRIDGE)} beta bridges, "
            f"{schedule.count(tp.HANDLE_PAIR)} zeta pairs")


def cmd_schedule_validate(args, run: Run):
    if not args.input:
        raise argparse.ArgumentTypeError("--in schedule file is required")
    args.inputs_ = [args.input]
    schedule = tp.BridgeSchedule.from_json(json.loads(Path(args.input).read_text()))
    rep = tp.validate_schedule(schedule)
    run.json("validation.json", rep.to_json())
    if not rep.passed:
        raise ValidationError("schedule failed validation at stages "
                              + ", ".join(str(s.stage) for s in rep.failures()))
    return "schedule valid"


COMMANDS = {
    "curve": {"classify": cmd_curve_classify, "height": cmd_curve_height,
              "tails": cmd_curve_tails, "decompose": cmd_curve_decompose},
    "catenoid": {"table": cmd_catenoid_table, "verify": cmd_catenoid_verify, "iota": cmd_catenoid_iota},
    "graph": {"solve": cmd_graph_solve, "dh": cmd_graph_dh, "foliation": cmd_graph_foliation},
    "solve": {"plateau": cmd_solve_plateau, "escape": cmd_solve_escape, "sweep": cmd_solve_sweep,
              "minexist": cmd_solve_minexist, "bridge": cmd_solve_bridge},
    "schedule": {"make": cmd_schedule_make, "finite": cmd_schedule_finite, "validate": cmd_schedule_validate},
}

# per-command flags on top of the shared ones
EXTRA = {
    ("curve", "decompose"): [("--side", dict(choices=("plus", "minus"), default="plus"))],
    ("catenoid", "table"): [("--d", dict(type=float_list, default=[1.0, 10.0, 100.0])),
                            ("--no-iota", dict(action="store_true"))],
    ("catenoid", "verify"): [("--d", dict(type=float_list, default=[0.5, 1.0, 10.0, 100.0])),
                             ("--rho", dict(type=float_list, default=[3.0, 5.0, 8.0, 12.0, 20.0]))],
    ("catenoid", "iota"): [("--d", dict(type=float_list, default=[10.0, 100.0]))],
    ("graph", "solve"): [("--rect", dict(type=float_list, default=[-math.pi / 2, math.pi / 2, -2.0, 2.0]))],
    ("graph", "dh"): [("--heights", dict(type=float_list,
                                         default=[f * math.pi for f in (1.05, 1.1, 1.5, 2.0, 3.0)]))],
    ("graph", "foliation"): [("--h0", dict(type=_parse_float, default=math.pi)),
                             ("--heights", dict(type=float_list, default=[2.0, 2.5, 3.0]))],
    ("solve", "escape"): [("--n-list", dict(type=float_list, default=[3.0, 4.0, 5.0, 6.0]))],
    ("solve", "sweep"): [("--target", dict()), ("--h0", dict(type=_parse_float, default=0.9 * math.pi)),
                         ("--d-param", dict(type=float, default=None)),
                         ("--center", dict(type=float, default=0.0)),
                         ("--t-grid", dict(type=float_list, default=list(np.geomspace(0.05, 20.0, 15))))],
    ("solve", "minexist"): [("--h0", dict(type=_parse_float, default=0.9 * math.pi)),
                            ("--s", dict(type=float, default=0.2)), ("--t", dict(type=float, default=0.2))],
    ("solve", "bridge"): [("--bridge", dict(type=float_list, required=True)),
                          ("--thickness", dict(type=float, default=0.1))],
    ("schedule", "make"): [("--genus", dict(type=int, default=2)), ("--ends", dict(type=int, default=4)),
                           ("--epsilon0", dict(type=float, default=1.0)),
                           ("--steps", dict(type=int, default=None))],
    ("schedule", "finite"): [("--genus", dict(type=int, default=2)), ("--ends", dict(type=int, default=4))],
}

DEFAULT_TOL = {("curve",): 1e-9, ("catenoid",): 1e-9}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plateau-hxr", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    groups = parser.add_subparsers(dest="group", required=True)
    for group, commands in COMMANDS.items():
        gp = groups.add_parser(group)
        sub = gp.add_subparsers(dest="command", required=True)
        for name, func in commands.items():
            p = sub.add_parser(name)
            p.add_argument("--in", dest="input", default=None, help="input JSON file")
            p.add_argument("--out-dir", default=".", help="directory for artifacts")
            p.add_argument("--tol", type=float, default=DEFAULT_TOL.get((group,), 1e-6))
            p.add_argument("--seed", type=int, default=0)
            p.add_argument("--mesh-res", type=int, default=0, help="refinement levels")
            p.add_argument("--truncation", type=float, default=4.0, help="truncation radius n")
            p.add_argument("--max-iters", type=int, default=4000)
            p.add_argument("--export-mesh", action="store_true")
            for flag, kw in EXTRA.get((group, name), []):
                p.add_argument(flag, **kw)
            p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    args.inputs_ = []
    try:
        run = Run(args)
        summary = args.func(args, run)
        run.finish(args)
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (PlateauError, argparse.ArgumentTypeError, OSError, ValueError, KeyError, TypeError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(summary)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
