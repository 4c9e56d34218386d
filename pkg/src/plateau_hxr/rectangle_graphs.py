"""Minimal disks spanning tall rectangles, their mid-slices and foliations.

A tall rectangle R = [theta_1, theta_2] x [t_1, t_2] on the cylinder at
infinity bounds a minimal disk whose mid-height slice is an equidistant curve
of the geodesic joining theta_1 and theta_2. Here the disk is computed on a
truncated domain, its mid-slice is cut out of the mesh, and families of such
disks are used as barriers (foliations, mean convex hulls).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .boundary_curves import TWO_PI, BoundaryCurveFamily, CylRect, decompose_tall_region
from .errors import NumericalFailure, PreconditionError, ValidationError
from .hyperbolic import Isometry, gans_distance_to_geodesic, polar_from_gans
from .intersect import mesh_pair_intersections, min_separation, vertical_crossings
from .mesh import SurfaceMesh
from .minimizer import SolverConfig, minimize_multilevel
from .seeds import rectangle_seed


class EscapeSignal(NumericalFailure):
    """The surface no longer meets the region where a quantity is measured."""


@dataclass
class GraphReport:
    passed: bool
    samples: int
    violations: int

    def to_json(self) -> dict:
        return {"passed": self.passed, "samples": self.samples, "violations": self.violations}


@dataclass
class RectangleGraphSurface:
    rect: CylRect
    truncation_n: float
    mesh: SurfaceMesh
    mid_slice: np.ndarray                 # (k, 3) chart points at mid-height, ordered
    graph: GraphReport | None = None
    meta: dict = field(default_factory=dict)

    @property
    def mid_height(self) -> float:
        return 0.5 * (self.rect.t_lo + self.rect.t_hi)

    @property
    def axis(self) -> tuple[float, float]:
        """Boundary angles of the geodesic joining the rectangle's vertical sides."""
        lo = self.rect.theta_lo
        return lo, lo + self.rect.width


# -- mid-slice ------------------------------------------------------------------

def _ordered_chains(segments, keys):
    """Join plane-cut segments that share a cut edge into ordered point chains."""
    nbrs: dict = {}
    for i, (ka, kb) in enumerate(keys):
        nbrs.setdefault(ka, []).append((i, kb))
        nbrs.setdefault(kb, []).append((i, ka))
    point_of = {}
    for (pa, pb), (ka, kb) in zip(segments, keys):
        point_of[ka], point_of[kb] = pa, pb
    used = np.zeros(len(segments), bool)
    chains = []
    ends = [k for k, v in nbrs.items() if len(v) == 1] + list(nbrs)
    for start in ends:
        if all(used[i] for i, _ in nbrs[start]):
            continue
        chain = [start]
        cur = start
        while True:
            nxt = [(i, k) for i, k in nbrs[cur] if not used[i]]
            if not nxt:
                break
            i, k = nxt[0]
            used[i] = True
            chain.append(k)
            cur = k
        chains.append(np.array([point_of[k] for k in chain]))
    return chains


def mesh_slice(mesh: SurfaceMesh, height: float) -> list[np.ndarray]:
    """Polylines where the mesh meets the horizontal plane z = height."""
    V, F = mesh.vertices, mesh.faces
    # nudge exact hits so every cut edge has one vertex on each side
    z = V[:, 2] - height
    z = np.where(z == 0.0, 1e-12, z)
    segments, keys = [], []
    for tri in F:
        s = z[tri] > 0
        if s.all() or not s.any():
            continue
        pts, ks = [], []
        for k in range(3):
            a, b = int(tri[k]), int(tri[(k + 1) % 3])
            if s[k] != s[(k + 1) % 3]:
                u = z[a] / (z[a] - z[b])
                p = V[a] + u * (V[b] - V[a])
                p[2] = height
                pts.append(p)
                ks.append((min(a, b), max(a, b)))
        segments.append(pts)
        keys.append(ks)
    if not segments:
        return []
    return _ordered_chains(segments, keys)


def mid_slice_distance(surface: RectangleGraphSurface, samples_per_segment: int = 4) -> float:
    """Largest hyperbolic distance from the mid-slice to the axis geodesic."""
    pts = surface.mid_slice
    if len(pts) == 0:
        raise EscapeSignal("empty mid-slice: the surface left the truncated domain")
    u = np.linspace(0.0, 1.0, samples_per_segment + 1)[:-1]
    dense = np.vstack([a + u[:, None] * (b - a) for a, b in zip(pts[:-1], pts[1:])] + [pts[-1:]])
    return float(np.max(gans_distance_to_geodesic(dense[:, :2], surface.axis)))


# -- graph test -------------------------------------------------------------------

def graph_test(mesh: SurfaceMesh, mid: float, steep: float = 0.2) -> GraphReport:
    """Check that each half (above and below mid-height) is a vertical graph.

    Sample points are the horizontal positions of non-steep triangles; the
    vertical line through each must meet its half exactly once.
    """
    V, F = mesh.vertices, mesh.faces
    total = bad = 0
    for sign in (1.0, -1.0):
        half = F[np.all(sign * (V[F, 2] - mid) > 0, axis=1)]
        if not len(half):
            continue
        tri = V[half]
        normal = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        flat = np.abs(normal[:, 2]) > steep * np.linalg.norm(normal, axis=1)
        probe = tri[flat].mean(axis=1)
        probe[:, 2] = V[:, 2].min() - 1.0
        hits = vertical_crossings(probe, V, half)
        total += len(probe)
        bad += int(np.count_nonzero(hits != 1))
    return GraphReport(bad == 0, total, bad)


# -- solving ------------------------------------------------------------------------

def _lifted(rect: CylRect) -> tuple[float, float]:
    return rect.theta_lo, rect.theta_lo + rect.width


def solve_rectangle_graph(rect: CylRect, n: float, resolution: int = 0, cfg: SolverConfig | None = None,
                          spacing: float = 0.35, require_tall: bool = True) -> RectangleGraphSurface:
    """Minimal disk spanning the radial projection of a rectangle boundary.

    ``resolution`` is the number of refinement levels after the base solve.
    Raises NonConvergenceError (carrying the best mesh) if descent stalls.
    """
    if require_tall and not rect.is_tall:
        raise PreconditionError(f"rectangle height {rect.height} is not tall")
    if rect.width >= TWO_PI - 1e-12:
        raise PreconditionError("rectangle must not wrap the whole circle")
    if n <= 0:
        raise ValidationError("truncation radius must be positive")
    cfg = (cfg or SolverConfig()).with_(refine_levels=int(resolution))
    seed = rectangle_seed(rect, n, spacing=spacing)
    mesh = minimize_multilevel(seed, cfg)
    return wrap_surface(rect, n, mesh)


def wrap_surface(rect: CylRect, n: float, mesh: SurfaceMesh) -> RectangleGraphSurface:
    mid = 0.5 * (rect.t_lo + rect.t_hi)
    chains = mesh_slice(mesh, mid)
    mid_slice = max(chains, key=len) if chains else np.zeros((0, 3))
    return RectangleGraphSurface(rect, float(n), mesh, mid_slice, graph_test(mesh, mid),
                                 {"slice_chains": len(chains)})


def symmetry_defect(mesh: SurfaceMesh, mid: float) -> float:
    """Largest distance from a mirrored vertex (z -> 2 mid - z) to the nearest vertex."""
    mirrored = mesh.vertices.copy()
    mirrored[:, 2] = 2.0 * mid - mirrored[:, 2]
    d, _ = cKDTree(mesh.vertices).query(mirrored)
    return float(d.max())


# -- foliation -------------------------------------------------------------------------

def s_map(h: float, h0: float) -> float:
    """Monotone map (pi/2, inf) -> (0, 2) with s(h0) = 1."""
    if not (h > math.pi / 2 and h0 > math.pi / 2):
        raise PreconditionError("half-heights must exceed pi/2")
    a, b = h - math.pi / 2, h0 - math.pi / 2
    return 2.0 * a / (a + b)


@dataclass
class FoliationFamily:
    h0: float
    theta1: float
    members: list                  # (h, CylRect, RectangleGraphSurface)
    separations: list              # (h, h', min separation) for consecutive members
    crossings: list                # (h, h', intersecting triangle pairs)

    def s(self, h: float) -> float:
        return s_map(h, self.h0)

    @property
    def disjoint(self) -> bool:
        return all(c == 0 for *_, c in self.crossings) and all(d > 0 for *_, d in self.separations)

    def nested(self) -> bool:
        widths = [rect.width for _, rect, _ in self.members]
        return all(a < b for a, b in zip(widths, widths[1:]))


def foliation_rect(h: float, h0: float, theta1: float = math.pi / 2) -> CylRect:
    """[-theta_s, theta_s] x [-h, h] with theta_s the image of theta1 under z -> s z."""
    t = s_map(h, h0)
    iso = Isometry.dilation(t)
    theta_s = float(iso.on_boundary(theta1))
    return CylRect(-theta_s, theta_s, -h, h)


def build_foliation(h0: float, h_samples, n: float, resolution: int = 0, cfg: SolverConfig | None = None,
                    theta1: float = math.pi / 2, spacing: float = 0.35) -> FoliationFamily:
    """Solve the dilated rectangles for each half-height and check the family.

    Disjointness is checked inside the inner half of the truncation radius.
    """
    hs = sorted(float(h) for h in h_samples)
    if any(h <= math.pi / 2 for h in hs):
        raise PreconditionError("all half-heights must exceed pi/2")
    members = []
    for h in hs:
        rect = foliation_rect(h, h0, theta1)
        surf = solve_rectangle_graph(rect, n, resolution, cfg, spacing)
        members.append((h, rect, surf))
    seps, hits = [], []
    for (h1, _, s1), (h2, _, s2) in zip(members, members[1:]):
        v1, f1 = _inner(s1.mesh, n / 2.0)
        v2, f2 = _inner(s2.mesh, n / 2.0)
        pairs = mesh_pair_intersections(v1, f1, v2, f2)
        seps.append((h1, h2, min_separation(v1[np.unique(f1)], v2[np.unique(f2)])))
        hits.append((h1, h2, len(pairs)))
    return FoliationFamily(float(h0), float(theta1), members, seps, hits)


def _inner(mesh: SurfaceMesh, radius: float):
    rho, _ = polar_from_gans(mesh.vertices[:, :2])
    keep = np.all(rho[mesh.faces] < radius, axis=1)
    return mesh.vertices, mesh.faces[keep]


# -- mean convex hull ------------------------------------------------------------------

@dataclass
class MeanConvexHull:
    gamma: BoundaryCurveFamily
    barriers: list                 # RectangleGraphSurface per decomposition cell
    n: float
    slab: tuple[float, float]

    def contains(self, points) -> np.ndarray:
        return mch_contains(self, points)


def barrier_rects(gamma: BoundaryCurveFamily, pad: float = 1.0) -> list[CylRect]:
    """Tall cells of both complement sides, with unbounded ends cut off.

    A half-infinite cell keeps a height of 2 pi beyond its finite end; a
    fully unbounded cell spans the padded slab plus pi on each side.
    """
    lo, hi = gamma.t_range()
    rects = []
    for side in ("plus", "minus"):
        for cell in decompose_tall_region(gamma, side):
            t_lo, t_hi = cell.t_lo, cell.t_hi
            if math.isinf(t_lo) and math.isinf(t_hi):
                t_lo, t_hi = lo - pad - math.pi, hi + pad + math.pi
            elif math.isinf(t_lo):
                t_lo = t_hi - 2.0 * math.pi
            elif math.isinf(t_hi):
                t_hi = t_lo + 2.0 * math.pi
            if cell.width >= TWO_PI - 1e-12:
                continue
            rects.append(CylRect(cell.theta_lo, cell.theta_hi, t_lo, t_hi))
    return rects


def build_mean_convex_hull(gamma: BoundaryCurveFamily, n: float, resolution: int = 0,
                           cfg: SolverConfig | None = None, spacing: float = 0.35) -> MeanConvexHull:
    rects = barrier_rects(gamma)
    barriers = [solve_rectangle_graph(r, n, resolution, cfg, spacing) for r in rects]
    lo = min(r.t_lo for r in rects)
    hi = max(r.t_hi for r in rects)
    return MeanConvexHull(gamma, barriers, float(n), (lo, hi))


def mch_contains(mch: MeanConvexHull, points) -> np.ndarray:
    """True where a point lies on the curve's side of every barrier.

    A point is cut off by a barrier when the upward vertical ray from it
    crosses that barrier an odd number of times.
    """
    P = np.asarray(points, float).reshape(-1, 3)
    rho, _ = polar_from_gans(P[:, :2])
    if np.any(rho >= mch.n) or np.any((P[:, 2] <= mch.slab[0]) | (P[:, 2] >= mch.slab[1])):
        raise PreconditionError("point outside the truncated region of the barriers")
    inside = np.ones(len(P), bool)
    for b in mch.barriers:
        inside &= vertical_crossings(P, b.mesh.vertices, b.mesh.faces) % 2 == 0
    return inside
