"""Truncated domains, radial projection of boundary curves and initial meshes.

Region seeds live in Fermi coordinates ``(sigma, s)`` about a spine geodesic
joining two points of the truncation circle: ``sigma`` is arclength along the
spine and ``s`` the signed distance from it (positive toward the boundary arc
between the two points). A point ``(theta, t)`` of a cylinder region is sent to
the perpendicular through the foot of the boundary point at angle ``theta``,
at a depth that grows with its distance from the region boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .boundary_curves import TWO_PI, BoundaryCurveFamily, CylRect
from .errors import PreconditionError, ValidationError
from .hyperbolic import Isometry, _sl2, gans_from_halfplane, halfplane_from_gans, halfplane_from_polar
from .mesh import SurfaceMesh


@dataclass(frozen=True)
class TruncatedDomain:
    """Solid cylinder B_n x [c_lo, c_hi]."""

    n: float
    c_lo: float
    c_hi: float

    def __post_init__(self):
        if not self.n > 0:
            raise ValidationError("truncation radius must be positive")
        if not self.c_lo < self.c_hi:
            raise ValidationError("slab bounds must satisfy c_lo < c_hi")

    def contains(self, rho, z):
        rho = np.asarray(rho, float)
        z = np.asarray(z, float)
        return (rho <= self.n) & (z >= self.c_lo) & (z <= self.c_hi)

    def to_json(self) -> dict:
        return {"n": self.n, "c_lo": self.c_lo, "c_hi": self.c_hi}


def radial_project(family: BoundaryCurveFamily, n: float, C: float, samples_per_edge: int = 0):
    """Loops of polar points (rho = n, theta, z) on the truncation cylinder.

    Each loop is an array (k, 3) of (rho, theta, z); with ``samples_per_edge``
    every edge is subdivided for plotting or mesh boundaries.
    """
    lo, hi = family.t_range()
    if lo < -C or hi > C:
        raise PreconditionError(f"curve heights [{lo}, {hi}] exceed the slab [-{C}, {C}]")
    loops = []
    for curve in family:
        pts = curve.lift
        closing = pts[0] + np.array([TWO_PI * curve.winding, 0.0])
        ring = np.vstack([pts, closing])
        if samples_per_edge:
            u = np.linspace(0.0, 1.0, samples_per_edge + 1)[:-1]
            ring = np.vstack([a + u[:, None] * (b - a) for a, b in zip(ring[:-1], ring[1:])])
        else:
            ring = ring[:-1]
        loop = np.column_stack([np.full(len(ring), float(n)), np.mod(ring[:, 0], TWO_PI), ring[:, 1]])
        loops.append(loop)
    return loops


class FermiFrame:
    """Fermi coordinates about the geodesic through (n, theta_a) and (n, theta_b)."""

    def __init__(self, theta_a: float, theta_b: float, n: float):
        if not 0.0 < theta_b - theta_a < TWO_PI:
            raise ValidationError("spine needs 0 < theta_b - theta_a < 2 pi")
        self.theta_a, self.theta_b, self.n = float(theta_a), float(theta_b), float(n)
        mid = 0.5 * (theta_a + theta_b)
        half = 0.5 * (theta_b - theta_a)
        x, y = halfplane_from_polar(n, -half)
        radius = math.hypot(float(x), float(y))
        to_unit = np.array([[1.0, -1.0], [1.0, 1.0]])
        scale = np.diag([math.sqrt(radius), 1.0 / math.sqrt(radius)])
        rot = Isometry.rotation(mid).matrix
        self._iso = Isometry("FermiFrame", (theta_a, theta_b, n), _sl2(rot @ scale @ to_unit))
        self._inv = self._iso.inverse()
        self.sigma_a = float(self.boundary_coords(theta_a)[0])
        self.sigma_b = float(self.boundary_coords(theta_b)[0])

    def to_gans(self, sigma, s):
        sigma = np.asarray(sigma, float)
        s = np.asarray(s, float)
        r = np.exp(sigma)
        x, y = self._iso.on_halfplane(r * np.tanh(s), r / np.cosh(s))
        return gans_from_halfplane(x, y)

    def from_gans(self, X):
        x, y = halfplane_from_gans(np.asarray(X, float)[..., :2])
        u, v = self._inv.on_halfplane(x, y)
        return 0.5 * np.log(u * u + v * v), np.arcsinh(u / v)

    def boundary_coords(self, theta):
        """(sigma, S) of truncation-circle points: foot on the spine and distance to it."""
        x, y = halfplane_from_polar(np.full(np.shape(theta), self.n), np.asarray(theta, float))
        X = gans_from_halfplane(x, y)
        return self.from_gans(X)

    def theta_for_sigma(self, sigma, samples: int = 4001):
        """Boundary angles whose feet sit at the given spine positions."""
        th = np.linspace(self.theta_a, self.theta_b, samples)
        sg, _ = self.boundary_coords(th)
        order = np.argsort(sg)
        return np.interp(sigma, sg[order], th[order])


def _uniform_in_sigma(frame: FermiFrame, breaks, spacing: float) -> np.ndarray:
    """Column angles: uniform in spine arclength between consecutive break angles."""
    cols = []
    sig = frame.boundary_coords(np.asarray(breaks, float))[0]
    for (ta, tb), (sa, sb) in zip(zip(breaks[:-1], breaks[1:]), zip(sig[:-1], sig[1:])):
        k = max(1, int(math.ceil(abs(sb - sa) / spacing)))
        s = np.linspace(sa, sb, k + 1)
        th = frame.theta_for_sigma(s)
        th[0], th[-1] = ta, tb
        cols.append(th[:-1])
    cols.append([breaks[-1]])
    return np.concatenate(cols)


def _graded_rows(a: float, b: float, spacing: float, reach: float, depth: float) -> np.ndarray:
    """Heights in [a, b]; the ramps of width ``depth`` at both ends get enough rows
    to resolve a run of length ``reach`` out to the cylinder."""
    if b - a <= 0:
        raise ValidationError("empty height interval")
    ramp = min(depth, (b - a) / 3.0)
    k_ramp = max(2, int(math.ceil(math.hypot(reach, ramp) / spacing)))
    k_mid = max(1, int(math.ceil((b - a - 2.0 * ramp) / spacing)))
    lower = a + np.linspace(0.0, ramp, k_ramp + 1)
    middle = np.linspace(a + ramp, b - ramp, k_mid + 1)
    upper = b - np.linspace(0.0, ramp, k_ramp + 1)[::-1]
    return np.concatenate([lower, middle[1:-1], upper])


def _segment_distance(points, seg_a, seg_b):
    """Distance from each point to the nearest of the segments (vectorised)."""
    p = points[:, None, :]
    a = seg_a[None, :, :]
    ab = (seg_b - seg_a)[None, :, :]
    denom = np.maximum((ab * ab).sum(-1), 1e-300)
    u = np.clip(((p - a) * ab).sum(-1) / denom, 0.0, 1.0)
    proj = a + u[..., None] * ab
    return np.sqrt(((p - proj) ** 2).sum(-1)).min(axis=1)


def region_seed(rects, n: float, spacing: float = 0.35, depth: float = 1.0,
                spine=None, extra_theta=(), extra_t=(), reach=None) -> SurfaceMesh:
    """Disk-type seed spanning the boundary of a union of cylinder rectangles.

    ``rects`` are tuples (theta_lo, theta_hi, t_lo, t_hi) with lifted angles
    (theta_lo < theta_hi) forming a simply connected region inside an angular
    window shorter than 2 pi. Columns are uniform in spine arclength, rows are
    graded so that vertex spacing is roughly ``spacing`` along each column.
    Interior points sink from the cylinder toward the spine; ``reach`` caps
    how far (hyperbolic distance along the perpendicular) they sink, so a
    small value gives a shallow seed hugging the cylinder.
    """
    rects = [tuple(map(float, r)) for r in rects]
    if not rects:
        raise ValidationError("region seed needs at least one rectangle")
    if any(not (a < b and c < d) for a, b, c, d in rects):
        raise ValidationError("region rectangles need theta_lo < theta_hi and t_lo < t_hi")
    lo_th = min(r[0] for r in rects)
    hi_th = max(r[1] for r in rects)
    spine = (lo_th, hi_th) if spine is None else spine
    frame = FermiFrame(spine[0], spine[1], n)
    theta_breaks = sorted({*[r[0] for r in rects], *[r[1] for r in rects], *extra_theta})
    t_breaks = sorted({*[r[2] for r in rects], *[r[3] for r in rects], *extra_t})
    cols = _uniform_in_sigma(frame, theta_breaks, spacing)
    reach = float(np.max(frame.boundary_coords(cols)[1]))
    rows = [np.array([t_breaks[0]])]
    for a, b in zip(t_breaks[:-1], t_breaks[1:]):
        rows.append(_graded_rows(a, b, spacing, reach, depth)[1:])
    rows = np.concatenate(rows)

    def inside(theta, t):
        hit = np.zeros(np.broadcast(theta, t).shape, bool)
        for a, b, c, d in rects:
            hit |= (theta > a) & (theta < b) & (t > c) & (t < d)
        return hit

    nr, nc = len(rows), len(cols)
    tc = 0.5 * (cols[:-1] + cols[1:])
    zc = 0.5 * (rows[:-1] + rows[1:])
    keep = inside(tc[None, :], zc[:, None])
    if not keep.any():
        raise ValidationError("region seed has no cells")
    idx = lambda i, j: i * nc + j  # noqa: E731
    faces = []
    for i, j in zip(*np.nonzero(keep)):
        a, b, c, d = idx(i, j), idx(i, j + 1), idx(i + 1, j), idx(i + 1, j + 1)
        if (i + j) % 2 == 0:
            faces += [[a, b, d], [a, d, c]]
        else:
            faces += [[a, b, c], [b, d, c]]
    faces = np.array(faces, np.int64)
    used = np.unique(faces)
    remap = -np.ones(nr * nc, np.int64)
    remap[used] = np.arange(len(used))
    faces = remap[faces]
    TH, TT = np.meshgrid(cols, rows)
    th = TH.ravel()[used]
    tt = TT.ravel()[used]
    probe = SurfaceMesh(np.zeros((len(used), 3)), faces, np.zeros(len(used), bool))
    on_rim = np.zeros(len(used), bool)
    on_rim[probe.boundary_edges().ravel()] = True
    sigma, S = frame.boundary_coords(th)
    # distance to the region boundary in (sigma, t) units
    rim_edges = probe.boundary_edges()
    pts = np.column_stack([sigma, tt])
    dist = _segment_distance(pts, pts[rim_edges[:, 0]], pts[rim_edges[:, 1]])
    ramp = np.full(len(tt), float(depth))
    for a, b in zip(t_breaks[:-1], t_breaks[1:]):
        inside_band = (tt >= a) & (tt <= b)
        ramp[inside_band] = np.minimum(ramp[inside_band], (b - a) / 3.0)
    sink = S if reach is None else np.minimum(S, float(reach))
    s = S - sink * np.clip(dist / ramp, 0.0, 1.0)
    X = frame.to_gans(sigma, s)
    X[on_rim] = frame.to_gans(sigma[on_rim], S[on_rim])
    verts = np.column_stack([X, tt])
    # rim points exactly on the truncation cylinder
    r = np.hypot(verts[on_rim, 0], verts[on_rim, 1])
    verts[on_rim, :2] *= (math.sinh(n) / r)[:, None]
    mesh = SurfaceMesh(verts, faces, on_rim, boundary_rho=float(n),
                       meta={"param_theta": th, "param_t": tt, "spine": tuple(spine)})
    return mesh


def rectangle_seed(rect: CylRect, n: float, spacing: float = 0.35, depth: float = 1.0,
                   extra_theta=(), reach=None) -> SurfaceMesh:
    """Seed spanning the radial projection of a rectangle boundary."""
    if rect.wraps and rect.width >= TWO_PI - 1e-12:
        raise ValidationError("full-width rectangles bound no disk seed")
    lo = rect.theta_lo
    return region_seed([(lo, lo + rect.width, rect.t_lo, rect.t_hi)], n, spacing, depth,
                       extra_theta=extra_theta, reach=reach)
