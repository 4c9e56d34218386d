"""Solver scenarios: exhaustion sequences, catenoid sweeps, constrained solves
inside a mean convex domain and bridge solves.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .boundary_curves import (BoundaryCurveFamily, CurveClass, CylRect, RectilinearCurve, classify,
                              height, side_of, slab_cells)
from .catenoid import height_limit, lam_grid, neck_radius
from .errors import NonConvergenceError, NumericalFailure, PreconditionError, ValidationError
from .hyperbolic import Isometry, gans_from_halfplane, gans_from_polar, halfplane_from_gans, polar_from_gans
from .intersect import VerticalRayIndex, mesh_pair_intersections
from .mesh import SurfaceMesh, area_and_gradient, grid_faces, merge, triangle_areas
from .minimizer import SolverConfig, descent_direction, minimize
from .rectangle_graphs import solve_rectangle_graph
from .seeds import FermiFrame, TruncatedDomain, region_seed
from .topology import RegionOp, Segment, apply_bridge_signature, lifted_rect, region_boundary

TWO_PI = 2.0 * math.pi


# -- region helpers --------------------------------------------------------------

def region_components(family: BoundaryCurveFamily) -> list[list[tuple]]:
    """Connected groups of slab cells covering the inside (odd parity) of the family.

    Cells are returned as lifted tuples (theta_lo, theta_hi, t_lo, t_hi).
    """
    cells = slab_cells(family, "plus")
    if any(math.isinf(c.t_lo) or math.isinf(c.t_hi) for c in cells):
        raise PreconditionError("the inside of the curve must be bounded")
    boxes = [lifted_rect(c, c.theta_lo + c.width / 2.0) for c in cells]
    parent = list(range(len(boxes)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, a in enumerate(boxes):
        for j in range(i):
            b = boxes[j]
            for shift in (-TWO_PI, 0.0, TWO_PI):
                touch = abs(a[1] - (b[0] + shift)) < 1e-12 or abs(a[0] - (b[1] + shift)) < 1e-12
                if touch and min(a[3], b[3]) > max(a[2], b[2]):
                    parent[find(i)] = find(j)
    groups: dict = {}
    for i, b in enumerate(boxes):
        groups.setdefault(find(i), []).append(b)
    out = []
    for group in groups.values():
        # lift the group into one continuous window
        ref = group[0][0]
        lifted = []
        for a, b, c, d in sorted(group):
            k = round((ref - a) / TWO_PI)
            lifted.append((a + k * TWO_PI, b + k * TWO_PI, c, d))
        out.append(lifted)
    return out


def family_seed(family: BoundaryCurveFamily, n: float, spacing: float = 0.35,
                extra_theta=(), extra_t=()) -> SurfaceMesh:
    """Disjoint disk seeds, one per inside component of the family."""
    meshes = []
    for comp in region_components(family):
        lo = min(r[0] for r in comp)
        hi = max(r[1] for r in comp)
        extra = [x + TWO_PI * round((0.5 * (lo + hi) - x) / TWO_PI) for x in extra_theta]
        extra = [x for x in extra if lo < x < hi]
        meshes.append(region_seed(comp, n, spacing, extra_theta=extra, extra_t=extra_t))
    if len(meshes) == 1:
        return meshes[0]
    out = merge(*meshes)
    for key in ("param_theta", "param_t"):
        out.meta[key] = np.concatenate([m.meta[key] for m in meshes])
    return out


# -- escape study --------------------------------------------------------------------

CONVERGES = "Converges"
ESCAPES = "Escapes"
UNDETERMINED = "Undetermined"


@dataclass
class EscapeReport:
    probe: TruncatedDomain
    n_list: list
    occupancy: list                # vertices inside the probe per truncation
    occupancy_area: list           # surface area inside the probe per truncation
    areas: list
    verdict: str
    failures: dict = field(default_factory=dict)
    meshes: list = field(default_factory=list, repr=False)

    @property
    def trend_monotone(self) -> bool:
        """Escaping sequences never regain probe area; converging ones settle."""
        vals = [v for v in self.occupancy_area if v is not None]
        if self.verdict == ESCAPES:
            return all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))
        if self.verdict == CONVERGES:
            return _stable(vals[-3:])
        return False

    def to_json(self) -> dict:
        return {"probe": self.probe.to_json(), "n_list": list(self.n_list),
                "occupancy": list(self.occupancy), "occupancy_area": list(self.occupancy_area),
                "areas": list(self.areas), "verdict": self.verdict,
                "trend_monotone": self.trend_monotone,
                "failures": {str(k): v for k, v in self.failures.items()}}


def _stable(vals, rel: float = 0.10) -> bool:
    if len(vals) < 3 or min(vals) <= 0:
        return False
    return (max(vals) - min(vals)) <= rel * max(vals)


def escape_verdict(occupancy_area) -> str:
    """Converges if the last three values are nonzero and within 10 percent;
    Escapes if the values reach zero and stay there for at least two truncations."""
    vals = list(occupancy_area)
    if any(v is None for v in vals[-3:]):
        return UNDETERMINED
    if _stable(vals[-3:]):
        return CONVERGES
    trailing = len(vals) - next((i + 1 for i in range(len(vals) - 1, -1, -1) if vals[i] != 0), 0)
    return ESCAPES if trailing >= 2 else UNDETERMINED


def probe_occupancy(mesh: SurfaceMesh, probe: TruncatedDomain) -> tuple[int, float]:
    """(vertex count, area of triangles whose centroid lies in the probe)."""
    rho, _, z = mesh.polar()
    count = int(probe.contains(rho, z).sum())
    cen = mesh.vertices[mesh.faces].mean(axis=1)
    rc, _ = polar_from_gans(cen[:, :2])
    inside = probe.contains(rc, cen[:, 2])
    return count, float(triangle_areas(mesh.vertices, mesh.faces)[inside].sum())


def default_probe(family: BoundaryCurveFamily, radius: float = 1.5) -> TruncatedDomain:
    lo, hi = family.t_range()
    mid, span = 0.5 * (lo + hi), hi - lo
    return TruncatedDomain(radius, mid - span / 4.0, mid + span / 4.0)


def solve_sequence(family: BoundaryCurveFamily, n_list, probe: TruncatedDomain | None = None,
                   cfg: SolverConfig | None = None, spacing: float = 0.35, fine: bool = True) -> EscapeReport:
    """Solve the radially projected curve on growing truncations.

    The first truncation starts from a disk seed; each later one starts from the
    previous solution stretched radially to the new radius. With ``fine`` every
    member is refined once and re-solved before measuring the probe.
    """
    n_list = [float(n) for n in n_list]
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise PreconditionError("n_list must be increasing")
    probe = probe or default_probe(family)
    if probe.n >= n_list[0]:
        raise PreconditionError("probe must lie inside the smallest truncation")
    cfg = cfg or SolverConfig(max_iters=4000)
    occ, occ_area, areas, meshes, failures = [], [], [], [], {}
    prev = None
    for n in n_list:
        try:
            if prev is None:
                seed = family_seed(family, n, spacing)
            else:
                rho, th, z = prev.polar()
                seed = SurfaceMesh.from_polar(rho * n / prev.boundary_rho, th, z, prev.faces, prev.fixed,
                                              boundary_rho=n, meta=dict(prev.meta))
            sol = minimize(seed, cfg, raise_on_failure=False)
            measured = minimize(sol.refine(), cfg, raise_on_failure=False) if fine else sol
        except NumericalFailure as exc:
            failures[n] = f"{type(exc).__name__}: {exc}"
            occ.append(None)
            occ_area.append(None)
            areas.append(None)
            meshes.append(None)
            prev = None
            continue
        if not measured.meta["converged"]:
            failures[n] = f"stopped with gradient norm {measured.meta['grad_norm']:.3g}"
        count, area_in = probe_occupancy(measured, probe)
        occ.append(count)
        occ_area.append(area_in)
        areas.append(measured.meta["area"])
        meshes.append(measured)
        prev = sol
    return EscapeReport(probe, n_list, occ, occ_area, areas, escape_verdict(occ_area), failures, meshes)


# -- catenoid sweep ---------------------------------------------------------------------

def catenoid_parameter(h0: float) -> float:
    """d whose catenoid has asymptotic height h0 (requires 0 < h0 < pi)."""
    if not 0.0 < h0 < math.pi:
        raise PreconditionError("catenoid heights lie in (0, pi)")
    return brentq(lambda d: height_limit(d).value - h0 / 2.0, 1e-6, 1e4, xtol=1e-14, rtol=1e-14)


def catenoid_slice_mesh(d: float, rho_max: float, center: float = 0.0, rings: int = 16,
                        n_theta: int = 32, half_height: float | None = None) -> SurfaceMesh:
    """Compact catenoid piece {rho <= rho_max} as a tube mesh.

    Rings are graded toward the neck; ``half_height`` clips the piece to
    |z - center| <= half_height.
    """
    neck = neck_radius(d)
    if not rho_max > neck:
        raise PreconditionError("rho_max must exceed the neck radius")
    u = np.linspace(0.0, 1.0, rings + 1)[1:]
    rhos = neck + (rho_max - neck) * u * u
    lam = lam_grid(d, rhos)
    if half_height is not None:
        keep = lam <= half_height
        rhos, lam = rhos[keep], lam[keep]
        if len(rhos) < 2:
            raise PreconditionError("half_height leaves too few rings")
    prof_r = np.concatenate([rhos[::-1], [neck], rhos])
    prof_z = center + np.concatenate([-lam[::-1], [0.0], lam])
    th = np.linspace(0.0, TWO_PI, n_theta, endpoint=False)
    T, R = np.meshgrid(th, prof_r)
    Z = np.broadcast_to(prof_z[:, None], T.shape)
    fixed = np.zeros(T.shape, bool)
    fixed[0, :] = fixed[-1, :] = True
    faces = grid_faces(len(prof_r) - 1, n_theta, periodic=True)
    return SurfaceMesh.from_polar(R.ravel(), T.ravel(), Z.ravel(), faces, fixed.ravel(),
                                  boundary_rho=float(prof_r[0]), meta={"d": d, "center": center})


@dataclass
class SweepReport:
    d: float
    h0: float
    t_grid: list
    hits: list                 # intersecting triangle pairs per grid value
    exited: list               # catenoid piece entirely outside the target truncation
    first_hit: float | None
    monotone: bool
    non_monotone_at: list

    @property
    def clean(self) -> bool:
        return self.first_hit is None

    def to_json(self) -> dict:
        return {"d": self.d, "h0": self.h0, "t_grid": list(self.t_grid), "hits": list(self.hits),
                "exited": list(self.exited), "first_hit": self.first_hit, "clean": self.clean,
                "monotone": self.monotone, "non_monotone_at": list(self.non_monotone_at)}


def _chart_edge_median(mesh: SurfaceMesh) -> float:
    e, _ = mesh.edges()
    return float(np.median(np.linalg.norm(mesh.vertices[e[:, 0]] - mesh.vertices[e[:, 1]], axis=1)))


def catenoid_sweep(target_mesh: SurfaceMesh, h0: float, d: float | None = None, t_grid=(),
                   center: float = 0.0, rho_max: float = 4.0, axis=(0.0, math.pi),
                   rings: int = 16, n_theta: int = 32) -> SweepReport:
    """Move a compact catenoid piece by the dilations along ``axis`` and record
    the first grid value where it meets the target mesh.

    ``d`` defaults to the catenoid of asymptotic height h0; otherwise the piece
    is clipped to |z - center| <= h0 / 2.
    """
    if not 0.0 < h0 < math.pi:
        raise PreconditionError("sweep catenoids need height h0 < pi")
    t_grid = [float(t) for t in t_grid]
    if not t_grid or any(t <= 0 for t in t_grid):
        raise PreconditionError("t_grid must be non-empty and positive")
    if d is None:
        d = catenoid_parameter(h0)
        piece = catenoid_slice_mesh(d, rho_max, center, rings, n_theta)
    else:
        piece = catenoid_slice_mesh(d, rho_max, center, rings, n_theta, half_height=h0 / 2.0)
    eps = 0.1 * min(_chart_edge_median(piece), _chart_edge_median(target_mesh))
    limit = target_mesh.boundary_rho if target_mesh.boundary_rho is not None else math.inf
    hits, exited = [], []
    for t in t_grid:
        moved = Isometry.dilation(t, axis).on_gans(piece.vertices)
        pairs = mesh_pair_intersections(moved, piece.faces, target_mesh.vertices, target_mesh.faces, eps)
        hits.append(int(len(pairs)))
        rho, _ = polar_from_gans(moved[:, :2])
        exited.append(bool(rho.min() >= limit))
    first = next((i for i, h in enumerate(hits) if h), None)
    bad = []
    if first is not None:
        for i in range(first + 1, len(t_grid)):
            if exited[i]:
                break
            if not hits[i]:
                bad.append(t_grid[i])
    return SweepReport(float(d), float(h0), t_grid, hits, exited,
                       None if first is None else t_grid[first], not bad, bad)


# -- mean convex domain scenario -------------------------------------------------------------

class SetupError(PreconditionError):
    """The barrier configuration does not enclose the intended region."""


@dataclass
class CatenoidBarrier:
    """Catenoid of asymptotic boundary at heights 0 and h0, moved by the dilation t."""

    h0: float
    t: float
    d: float
    radii: np.ndarray = field(repr=False)
    heights: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, h0: float, t: float, samples: int = 4000) -> "CatenoidBarrier":
        d = catenoid_parameter(h0)
        neck = neck_radius(d)
        rhos = neck + np.geomspace(1e-9, 40.0, samples)
        lam = lam_grid(d, rhos)
        return cls(h0, t, d, np.concatenate([[neck], rhos]), np.concatenate([[0.0], lam]))

    def slice_radius(self, z) -> np.ndarray:
        """Hyperbolic radius of the undilated horizontal slice (inf beyond the ends)."""
        w = np.abs(np.asarray(z, float) - self.h0 / 2.0)
        out = np.full(w.shape, np.inf)
        ok = w < self.heights[-1]
        out[ok] = np.interp(w[ok], self.heights, self.radii)
        return out

    def slice_disk(self, z):
        """Half-plane centre height and radius of the dilated slice disk (centre on x = 0)."""
        r = self.slice_radius(z)
        with np.errstate(over="ignore"):
            return self.t * np.cosh(r), self.t * np.sinh(r)

    def below(self, points) -> np.ndarray:
        """Points between 0 < z < h0 lying under the slice disk within |x| < 1."""
        P = np.asarray(points, float).reshape(-1, 3)
        x, y = halfplane_from_gans(P[:, :2])
        z = P[:, 2]
        c, R = self.slice_disk(z)
        band = (z > 0.0) & (z < self.h0) & np.isfinite(R) & (np.abs(x) < 1.0) & (np.abs(x) < R)
        with np.errstate(invalid="ignore", over="ignore"):
            under = y < c - np.sqrt(np.maximum(R * R - x * x, 0.0))
        return band & under


@dataclass
class MinexistReport:
    h0: float
    s: float
    t: float
    n: float
    curve_height: float
    separation: list               # per sampled height: (z, points in each barrier region)
    seed_pushed: int
    constrained_area: float
    violations: int
    blocked_vertices: int
    touches_constraint: bool
    free_area: float
    free_escaped: bool
    area_drop: float
    probe_area_constrained: float
    probe_area_free: float

    @property
    def not_minimizing(self) -> bool:
        return self.area_drop > 0 or self.free_escaped

    def to_json(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["not_minimizing"] = self.not_minimizing
        return out


def minexist_curve(h0: float, s: float) -> BoundaryCurveFamily:
    """Boundary of two tall side strips joined by the short middle rectangle."""
    a, b = s, math.pi / 2
    return BoundaryCurveFamily.of(RectilinearCurve([
        (-b, -10.0), (-a, -10.0), (-a, 0.0), (a, 0.0), (a, -10.0), (b, -10.0),
        (b, 10.0), (a, 10.0), (a, h0), (-a, h0), (-a, 10.0), (-b, 10.0)]))


class MinexistDomain:
    """Admissible region: outside both barrier regions and below-catenoid pocket."""

    def __init__(self, plus_mesh: SurfaceMesh, minus_mesh: SurfaceMesh, catenoid: CatenoidBarrier):
        self.plus = VerticalRayIndex(plus_mesh.vertices, plus_mesh.faces)
        self.minus = VerticalRayIndex(minus_mesh.vertices, minus_mesh.faces)
        self.catenoid = catenoid

    def in_plus(self, P):
        return self.plus.crossings(P) % 2 == 1

    def in_minus(self, P):
        return self.minus.crossings(P) % 2 == 1

    def forbidden(self, P) -> np.ndarray:
        P = np.asarray(P, float).reshape(-1, 3)
        return self.in_plus(P) | self.in_minus(P) | self.catenoid.below(P)

    def admissible(self, P) -> np.ndarray:
        return ~self.forbidden(P)


def _separation_check(domain: MinexistDomain, n: float, samples: int = 9):
    """At each sampled height the catenoid slice circle must enter both barrier regions."""
    cat = domain.catenoid
    rows = []
    ang = np.linspace(0.0, TWO_PI, 721)
    for z in np.linspace(0.05, 0.95, samples) * cat.h0:
        c, R = cat.slice_disk(np.array([z]))
        x = R[0] * np.cos(ang)
        y = c[0] + R[0] * np.sin(ang)
        X = gans_from_halfplane(x, y)
        P = np.column_stack([X, np.full(len(x), z)])
        rho, _ = polar_from_gans(X)
        P = P[rho < n]
        rows.append((float(z), int(domain.in_plus(P).sum()), int(domain.in_minus(P).sum())))
    return rows


def _push_out(seed: SurfaceMesh, frame: FermiFrame, domain: MinexistDomain, steps: int = 80) -> int:
    """Move forbidden seed vertices toward the spine until they become admissible."""
    V = seed.vertices
    bad = np.nonzero(domain.forbidden(V) & ~seed.fixed)[0]
    if len(bad) == 0:
        return 0
    sigma, s_now = frame.from_gans(V[bad])
    _, rim = frame.boundary_coords(seed.meta["param_theta"][bad])
    best = np.full(len(bad), np.nan)
    for g in np.linspace(0.0, 1.0, steps + 1):
        s_try = s_now - (s_now + rim) * g
        P = np.column_stack([frame.to_gans(sigma, s_try), V[bad, 2]])
        ok = domain.admissible(P) & np.isnan(best)
        best[ok] = s_try[ok]
    if np.isnan(best).any():
        raise SetupError("seed vertices could not be moved out of the barrier regions")
    V[bad, :2] = frame.to_gans(sigma, best)
    return int(len(bad))


def minexist_scenario(h0: float = 0.9 * math.pi, s: float = 0.2, t: float = 0.2, cfg: SolverConfig | None = None,
                      n: float = 5.0, spacing: float = 0.35, free_max_iters: int | None = 600):
    """Constrained solve in the mean convex domain, then a free re-solve.

    The free re-solve only has to show the constrained surface is not area
    minimizing, so it is capped at ``free_max_iters`` (None for no cap).
    Returns (constrained mesh, free mesh, report).
    """
    if not 0.0 < h0 <= math.pi:
        raise PreconditionError("h0 must lie in (0, pi]")
    if not (0.0 < s < math.pi / 2 and t > 0):
        raise PreconditionError("s must lie in (0, pi/2) and t must be positive")
    if h0 >= math.pi:
        raise PreconditionError("the catenoid barrier needs h0 < pi")
    cfg = cfg or SolverConfig(max_iters=3000)
    gamma = minexist_curve(h0, s)
    curve_height = height(gamma)
    bcfg = cfg.with_(max_iters=max(cfg.max_iters, 3000))
    plus = solve_rectangle_graph(CylRect(s, math.pi / 2, -10.0, 10.0), n, 0, bcfg, spacing)
    minus = solve_rectangle_graph(CylRect(-math.pi / 2, -s, -10.0, 10.0), n, 0, bcfg, spacing)
    domain = MinexistDomain(plus.mesh, minus.mesh, CatenoidBarrier.build(h0, t))
    rows = _separation_check(domain, n)
    if any(a == 0 or b == 0 for _, a, b in rows):
        raise SetupError("the catenoid barrier does not reach both side barriers; use smaller s or t")
    rects = [(s, math.pi / 2, -10.0, 10.0), (-math.pi / 2, -s, -10.0, 10.0), (-s, s, 0.0, h0)]
    spine = (-math.pi / 2, math.pi / 2)
    seed = region_seed(rects, n, spacing, spine=spine)
    pushed = _push_out(seed, FermiFrame(*spine, n), domain)
    constrained = minimize(seed, cfg, constraint=domain.admissible, raise_on_failure=False)
    free_verts = ~constrained.fixed
    violations = int((domain.forbidden(constrained.vertices) & free_verts).sum())
    # vertices the constraint is holding back: a free step along the gradient would leave X
    trial = constrained.vertices.copy()
    _, grad = area_and_gradient(constrained.vertices, constrained.faces)
    step = descent_direction(constrained.vertices, constrained.faces, constrained.fixed, grad, cfg.mass_shift)
    scale = np.linalg.norm(step, axis=1).max()
    if scale > 0:
        trial = trial + step * (0.05 / scale)
    blocked = int((domain.forbidden(trial) & free_verts).sum())
    free_cfg = cfg if free_max_iters is None else cfg.with_(max_iters=min(cfg.max_iters, free_max_iters))
    free = minimize(constrained, free_cfg, raise_on_failure=False)
    probe = TruncatedDomain(1.5, 0.0, h0)
    _, pa_con = probe_occupancy(constrained, probe)
    _, pa_free = probe_occupancy(free, probe)
    q_free = (np.abs(free.meta["param_theta"]) < s) & ~free.fixed
    rho_free, _ = polar_from_gans(free.vertices[q_free, :2])
    escaped = bool(len(rho_free)) and float(np.median(rho_free)) > 0.9 * n
    report = MinexistReport(h0, s, t, n, curve_height, rows, pushed, constrained.meta["area"], violations,
                            blocked, bool(blocked or constrained.meta["constraint_stalled"]),
                            free.meta["area"], escaped, constrained.meta["area"] - free.meta["area"],
                            pa_con, pa_free)
    return constrained, free, report


# -- bridge solves ----------------------------------------------------------------------------

@dataclass
class BridgeReport:
    same_component: bool
    curve_components: tuple         # before, after
    signature_before: dict
    signature_after: dict
    predicted: dict
    matches: bool
    area_before: float
    area_after: float

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _curve_of_point(family: BoundaryCurveFamily, theta: float, t: float, tol: float = 1e-9):
    for k, curve in enumerate(family):
        for kind, a, b in curve.edges():
            if kind != "h" or abs(a[1] - t) > tol:
                continue
            lo, hi = min(a[0], b[0]), max(a[0], b[0])
            th = theta + TWO_PI * round((0.5 * (lo + hi) - theta) / TWO_PI)
            if lo - tol <= th <= hi + tol:
                return k
    return None


def bridged_family(family: BoundaryCurveFamily, bridge: Segment, thickness: float):
    """(bridged family, endpoints on the same curve?, bridge runs inside the region?)."""
    if not thickness > 0:
        raise PreconditionError("bridge thickness must be positive")
    k1 = _curve_of_point(family, bridge.theta, bridge.t_lo)
    k2 = _curve_of_point(family, bridge.theta, bridge.t_hi)
    if k1 is None or k2 is None:
        raise PreconditionError("bridge endpoints must lie on horizontal edges of the curve")
    ts = sorted({a[1] for c in family for _, a, _ in c.edges()})
    inner = [x for x in ts if bridge.t_lo < x < bridge.t_hi]
    if inner and any(_curve_of_point(family, bridge.theta, x) is not None for x in inner):
        raise PreconditionError("the bridge meets the curve away from its endpoints")
    inside = side_of(family, bridge.theta, 0.5 * (bridge.t_lo + bridge.t_hi)) == "plus"
    ops = [RegionOp(r, True) for comp in region_components(family) for r in comp]
    slot = bridge.slot(thickness)
    ref = ops[0].rect[0]
    shift = TWO_PI * round((ref - slot[0]) / TWO_PI) if abs(ref - slot[0]) > math.pi else 0.0
    ops.append(RegionOp((slot[0] + shift, slot[1] + shift, slot[2], slot[3]), not inside))
    out = region_boundary(ops)
    verdict = classify(out)
    if verdict.curve_class is not CurveClass.TALL:
        raise PreconditionError(f"bridged curve is {verdict.curve_class.value}, not Tall")
    return out, k1 == k2, inside


def _rim_vertex(mesh: SurfaceMesh, theta: float, t: float, tol: float = 1e-7) -> int:
    rho, th, z = mesh.polar()
    dth = np.abs(np.angle(np.exp(1j * (th - theta))))
    hit = np.nonzero(mesh.fixed & (dth < tol) & (np.abs(z - t) < tol))[0]
    if len(hit) != 1:
        raise ValidationError(f"expected one rim vertex at ({theta:.6g}, {t:.6g}), found {len(hit)}")
    return int(hit[0])


def _edge_direction(faces, a, b) -> int:
    """+1 if some face contains the directed edge a->b, -1 if b->a, 0 if neither."""
    for f in faces:
        for k in range(3):
            if f[k] == a and f[(k + 1) % 3] == b:
                return 1
            if f[k] == b and f[(k + 1) % 3] == a:
                return -1
    return 0


def attach_ribbon(mesh: SurfaceMesh, bridge: Segment, thickness: float, n: float, spacing: float = 0.35,
                  rng=None, inset: float = 0.02) -> SurfaceMesh:
    """Glue a thin strip along the bridge to the rim of ``mesh``.

    The strip has three columns; the outer two are fixed on the truncation
    cylinder and become part of the bridged boundary, the middle one is free.
    """
    half = thickness / 2.0
    cols = (bridge.theta - half, bridge.theta, bridge.theta + half)
    ends = [[_rim_vertex(mesh, c, bridge.t_lo) for c in cols],
            [_rim_vertex(mesh, c, bridge.t_hi) for c in cols]]
    k = max(2, int(math.ceil((bridge.t_hi - bridge.t_lo) / spacing)))
    ts = np.linspace(bridge.t_lo, bridge.t_hi, k + 1)[1:-1]
    jitter = np.zeros(len(ts)) if rng is None else rng.uniform(-0.5, 0.5, len(ts)) * inset
    new_rho = np.column_stack([np.full(len(ts), n), n - inset + jitter, np.full(len(ts), n)])
    new_th = np.broadcast_to(np.array(cols), new_rho.shape)
    new_z = np.broadcast_to(ts[:, None], new_rho.shape)
    X = gans_from_polar(new_rho.ravel(), new_th.ravel())
    base = mesh.n_vertices
    verts = np.vstack([mesh.vertices, np.column_stack([X, new_z.ravel()])])
    rows = [ends[0]] + [[base + 3 * i + j for j in range(3)] for i in range(len(ts))] + [ends[1]]
    faces = []
    for r0, r1 in zip(rows[:-1], rows[1:]):
        for j in range(2):
            faces += [[r0[j], r0[j + 1], r1[j + 1]], [r0[j], r1[j + 1], r1[j]]]
    faces = np.array(faces, np.int64)
    # orient the strip against the rim edges it is glued to
    old = mesh.faces
    bottom = _edge_direction(old, ends[0][0], ends[0][1])
    if bottom == 1:                           # strip must use the edge reversed
        faces = faces[:, ::-1]
    top = _edge_direction(old, ends[1][1], ends[1][0])
    strip_top = _edge_direction(faces, ends[1][1], ends[1][0])
    if top != 0 and strip_top == top:
        # the far end sits on a separately oriented piece: flip that piece
        ncomp, labels = mesh.component_labels()
        if labels[ends[1][0]] == labels[ends[0][0]]:
            raise ValidationError("strip would make the surface non-orientable")
        flip = labels[old[:, 0]] == labels[ends[1][0]]
        old = old.copy()
        old[flip] = old[flip][:, ::-1]
    fixed = np.concatenate([mesh.fixed, np.tile([True, False, True], len(ts))])
    fixed[ends[0][1]] = fixed[ends[1][1]] = False
    out = SurfaceMesh(verts, np.vstack([old, faces]), fixed, mesh.boundary_rho)
    for key in ("param_theta", "param_t"):
        if key in mesh.meta:
            extra = new_th.ravel() if key == "param_theta" else new_z.ravel()
            out.meta[key] = np.concatenate([mesh.meta[key], extra])
    return out


def bridge_solve(family: BoundaryCurveFamily, bridge: Segment, thickness: float, n: float,
                 cfg: SolverConfig | None = None, seed: int = 0, spacing: float = 0.35,
                 base: SurfaceMesh | None = None):
    """Solve the unbridged curve, glue a strip along the bridge and re-solve.

    Returns (unbridged mesh, bridged mesh, report).
    """
    cfg = cfg or SolverConfig(max_iters=3000)
    fam_after, same, _inside = bridged_family(family, bridge, thickness)
    half = thickness / 2.0
    cols = (bridge.theta - half, bridge.theta, bridge.theta + half)
    if base is None:
        start = family_seed(family, n, spacing, extra_theta=cols)
        base = minimize(start, cfg)
    rng = np.random.default_rng(seed)
    glued = attach_ribbon(base, bridge, thickness, n, spacing, rng)
    solved = minimize(glued, cfg.with_(seed=seed))
    before = base.signature()
    after = solved.signature()
    predicted = {"chi": before.chi - 1,
                 "boundary_count": before.boundary_count + (1 if same else -1)}
    matches = (after.chi == predicted["chi"] and after.boundary_count == predicted["boundary_count"]
               and after.boundary_count == len(fam_after))
    report = BridgeReport(same, (len(family), len(fam_after)), before.to_json(), after.to_json(),
                          predicted, matches, base.area(), solved.area())
    return base, solved, report


def bridge_signature_prediction(signature, same_component: bool):
    """Predicted signature of one connected piece after one bridge (compact surfaces)."""
    return apply_bridge_signature(signature, same_component)
