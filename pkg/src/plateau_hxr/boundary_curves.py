"""Rectilinear curves on the boundary cylinder S^1 x R.

Coordinates are (theta, t) with theta an angle and t the height.  Curves are
closed axis-parallel polygons; their vertices are stored as a continuous lift
of theta so that horizontal edges may run across the theta = 0 seam.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import PreconditionError, ValidationError

TWO_PI = 2.0 * math.pi
SNAP = 1e-12  # coordinates closer than this are treated as equal


def wrap_angle(theta: float) -> float:
    """Reduce an angle to [0, 2*pi)."""
    r = math.fmod(theta, TWO_PI)
    if r < 0.0:
        r += TWO_PI
    if r >= TWO_PI - SNAP:
        r = 0.0
    return r


def angle_in_arc(theta, lo, length, closed=True):
    """True where theta lies on the arc starting at lo of the given length."""
    theta, lo, length = np.asarray(theta, float), np.asarray(lo, float), np.asarray(length, float)
    off = np.mod(theta - lo, TWO_PI)
    # an offset just below 2*pi is the arc start seen from the other side
    off = np.where(off > TWO_PI - SNAP, 0.0, off)
    if closed:
        res = off <= length + SNAP
    else:
        res = (off > SNAP) & (off < length - SNAP)
    res = res | (length >= TWO_PI - SNAP)
    return res if res.ndim else bool(res)


def angle_gap(a: float, b: float) -> float:
    """Unsigned circular distance between two angles."""
    d = abs(wrap_angle(a) - wrap_angle(b))
    return min(d, TWO_PI - d)


@dataclass(frozen=True)
class BoundaryPoint:
    theta: float
    t: float

    def __post_init__(self):
        if not (math.isfinite(self.theta) and math.isfinite(self.t)):
            raise ValidationError("boundary point coordinates must be finite")
        object.__setattr__(self, "theta", wrap_angle(self.theta))


class CurveClass(str, Enum):
    TALL = "Tall"
    SHORT = "Short"
    BORDERLINE = "Borderline"
    EXCEPTIONAL = "Exceptional"


@dataclass(frozen=True)
class CylRect:
    """Closed rectangle [theta_lo, theta_hi] x [t_lo, t_hi] on the cylinder.

    theta_hi < theta_lo means the rectangle crosses the theta = 0 seam; the
    full circle is stored as (0, 2*pi).
    """

    theta_lo: float
    theta_hi: float
    t_lo: float
    t_hi: float

    def __post_init__(self):
        if not self.t_lo < self.t_hi:
            raise ValidationError("rectangle needs t_lo < t_hi")
        full = self.theta_hi - self.theta_lo >= TWO_PI - SNAP
        object.__setattr__(self, "theta_lo", 0.0 if full else wrap_angle(self.theta_lo))
        object.__setattr__(self, "theta_hi", TWO_PI if full else wrap_angle(self.theta_hi))

    @property
    def width(self) -> float:
        if self.theta_hi == TWO_PI and self.theta_lo == 0.0:
            return TWO_PI
        w = (self.theta_hi - self.theta_lo) % TWO_PI
        return w

    @property
    def height(self) -> float:
        return self.t_hi - self.t_lo

    @property
    def is_tall(self) -> bool:
        return self.height > math.pi

    @property
    def wraps(self) -> bool:
        return self.theta_hi < self.theta_lo

    def contains(self, theta, t, closed=True):
        th = angle_in_arc(theta, self.theta_lo, self.width, closed)
        t = np.asarray(t, float)
        if closed:
            tt = (t >= self.t_lo) & (t <= self.t_hi)
        else:
            tt = (t > self.t_lo) & (t < self.t_hi)
        res = th & tt
        return res if np.ndim(res) else bool(res)

    def boundary_curve(self) -> "RectilinearCurve":
        if not (math.isfinite(self.t_lo) and math.isfinite(self.t_hi)):
            raise ValidationError("unbounded rectangle has no boundary loop")
        if self.width >= TWO_PI - SNAP:
            raise ValidationError("full-circle rectangle has no single boundary loop")
        a = self.theta_lo
        b = a + self.width
        return RectilinearCurve([(a, self.t_lo), (b, self.t_lo), (b, self.t_hi), (a, self.t_hi)])

    def to_json(self) -> dict:
        return {"theta_lo": self.theta_lo, "theta_hi": self.theta_hi,
                "t_lo": _json_num(self.t_lo), "t_hi": _json_num(self.t_hi)}


def _json_num(x: float):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


class RectilinearCurve:
    """Closed axis-parallel loop.

    ``vertices`` are (theta, t) pairs forming a continuous lift; the closing
    edge runs from the last vertex to the first one shifted by
    ``2*pi*winding``.  Essential loops (winding +-1) wrap once around the
    cylinder; a single vertex with winding +-1 is a horizontal circle.
    """

    def __init__(self, vertices, winding: int = 0):
        pts = np.array(vertices, dtype=float).reshape(-1, 2)
        if not np.all(np.isfinite(pts)):
            raise ValidationError("vertex coordinates must be finite")
        if winding not in (-1, 0, 1):
            raise ValidationError("winding must be -1, 0 or 1")
        self.winding = int(winding)
        self._lift = _simplify(pts, self.winding)
        self._lift.setflags(write=False)
        self._check_self()

    # -- basic data -------------------------------------------------------
    @property
    def lift(self) -> np.ndarray:
        return self._lift

    @property
    def vertices(self) -> list[BoundaryPoint]:
        return [BoundaryPoint(th, t) for th, t in self._lift]

    def __len__(self):
        return len(self._lift)

    def __repr__(self):
        return f"RectilinearCurve({len(self)} vertices, winding={self.winding})"

    def edge_endpoints(self):
        """Lifted (start, end) pairs for every edge, closing edge last."""
        p = self._lift
        nxt = np.roll(p, -1, axis=0).copy()
        nxt[-1, 0] += TWO_PI * self.winding
        return p, nxt

    def edges(self):
        """List of (kind, a, b) with kind 'h' or 'v' and lifted endpoints."""
        a, b = self.edge_endpoints()
        out = []
        for pa, pb in zip(a, b):
            kind = "h" if pb[1] == pa[1] else "v"
            out.append((kind, tuple(pa), tuple(pb)))
        return out

    @property
    def is_essential(self) -> bool:
        return self.winding != 0

    @property
    def t_range(self) -> tuple[float, float]:
        return float(self._lift[:, 1].min()), float(self._lift[:, 1].max())

    def transformed(self, dtheta=0.0, dt=0.0, mirror_theta=False, mirror_t=False) -> "RectilinearCurve":
        p = self._lift.copy()
        w = self.winding
        if mirror_theta:
            p[:, 0] = -p[:, 0]
            w = -w
        if mirror_t:
            p[:, 1] = -p[:, 1]
        p[:, 0] += dtheta
        p[:, 1] += dt
        return RectilinearCurve(p, w)

    def _check_self(self):
        _check_disjoint([self], same_curve_ok=True)

    def to_json(self):
        pts = []
        for th, t in self._lift:
            entry = {"theta": wrap_angle(th), "t": float(t)}
            if abs(entry["theta"] - th) > SNAP:
                entry["theta_lift"] = float(th)
            pts.append(entry)
        if self.winding:
            return {"vertices": pts, "winding": self.winding}
        return pts


def _axis_kind(pa, pb):
    dth = abs(pb[0] - pa[0])
    dt = abs(pb[1] - pa[1])
    if dth <= SNAP and dt <= SNAP:
        return None
    if dth <= SNAP:
        return "v"
    if dt <= SNAP:
        return "h"
    raise ValidationError(f"edge {tuple(pa)} -> {tuple(pb)} is not axis-aligned")


def _simplify(pts: np.ndarray, winding: int) -> np.ndarray:
    """Drop repeated vertices, merge collinear runs, snap coordinates."""
    pts = [list(p) for p in pts]
    shift = TWO_PI * winding

    def nxt(i):
        q = list(pts[(i + 1) % len(pts)])
        if i == len(pts) - 1:
            q[0] += shift
        return q

    changed = True
    while changed and pts:
        changed = False
        n = len(pts)
        if n == 1:
            break
        # repeated points
        for i in range(n):
            if _axis_kind(pts[i], nxt(i)) is None:
                if i == n - 1:
                    if winding:
                        raise ValidationError("zero-length closing edge on an essential loop")
                    pts.pop()
                else:
                    pts.pop(i + 1)
                changed = True
                break
        if changed:
            continue
        for i in range(n):
            prev = list(pts[i - 1])
            if i == 0:
                prev[0] -= shift
            cur, after = pts[i], nxt(i)
            k1, k2 = _axis_kind(prev, cur), _axis_kind(cur, after)
            if k1 == k2:
                ax = 0 if k1 == "h" else 1
                s1 = np.sign(cur[ax] - prev[ax])
                s2 = np.sign(after[ax] - cur[ax])
                if s1 != s2:
                    raise ValidationError("curve doubles back on itself along an edge")
                if i == 0:
                    # keep the lift continuous: the new first vertex is pts[1]
                    pts.pop(0)
                    pts[-1] = list(pts[-1])
                    # closing edge now ends at old pts[1] + shift; the previous
                    # vertex (old last) stays as is
                else:
                    pts.pop(i)
                changed = True
                break
    if not pts:
        raise ValidationError("empty curve")
    if len(pts) == 1 and winding == 0:
        raise ValidationError("a single vertex only defines an essential horizontal circle")
    arr = np.array(pts, float)
    n = len(arr)
    # snap the shared coordinate along each edge
    for i in range(n if n > 1 else 0):
        j = (i + 1) % n
        off = shift if j == 0 else 0.0
        b = arr[j].copy()
        b[0] += off
        if _axis_kind(arr[i], b) == "v":
            arr[j, 0] = arr[i, 0] - off
        else:
            arr[j, 1] = arr[i, 1]
    if n > 1:
        kinds = []
        for i in range(n):
            j = (i + 1) % n
            b = arr[j].copy()
            if j == 0:
                b[0] += shift
            kinds.append(_axis_kind(arr[i], b))
        if winding == 0 and n < 4:
            raise ValidationError("a closed rectilinear loop needs at least 4 vertices")
        if any(kinds[i] == kinds[(i + 1) % n] for i in range(n)):
            raise ValidationError("edge directions must alternate")
    return arr


@dataclass(frozen=True)
class _EdgeTable:
    """Flattened edges of a family for vectorised predicates."""

    h_t: np.ndarray
    h_lo: np.ndarray  # wrapped start angle
    h_len: np.ndarray
    h_owner: np.ndarray
    h_index: np.ndarray
    v_theta: np.ndarray
    v_lo: np.ndarray
    v_hi: np.ndarray
    v_owner: np.ndarray
    v_index: np.ndarray
    n_edges: np.ndarray  # edges per component


def _edge_table(curves: Sequence[RectilinearCurve]) -> _EdgeTable:
    h_t, h_lo, h_len, h_own, h_idx = [], [], [], [], []
    v_th, v_lo, v_hi, v_own, v_idx = [], [], [], [], []
    counts = []
    for ci, c in enumerate(curves):
        a, b = c.edge_endpoints()
        if len(c) == 1:
            h_t.append(a[0, 1]); h_lo.append(wrap_angle(a[0, 0])); h_len.append(TWO_PI)
            h_own.append(ci); h_idx.append(0)
            counts.append(1)
            continue
        counts.append(len(a))
        for k, (pa, pb) in enumerate(zip(a, b)):
            if pa[1] == pb[1]:
                lo, hi = min(pa[0], pb[0]), max(pa[0], pb[0])
                if hi - lo > TWO_PI + SNAP:
                    raise ValidationError("horizontal edge wraps more than once")
                h_t.append(pa[1]); h_lo.append(wrap_angle(lo)); h_len.append(hi - lo)
                h_own.append(ci); h_idx.append(k)
            else:
                v_th.append(wrap_angle(pa[0])); v_lo.append(min(pa[1], pb[1])); v_hi.append(max(pa[1], pb[1]))
                v_own.append(ci); v_idx.append(k)
    f = lambda x: np.asarray(x, float)
    i = lambda x: np.asarray(x, int)
    return _EdgeTable(f(h_t), f(h_lo), f(h_len), i(h_own), i(h_idx),
                      f(v_th), f(v_lo), f(v_hi), i(v_own), i(v_idx), i(counts))


def _adjacent(owner1, idx1, owner2, idx2, counts):
    """Mask of edge pairs that are consecutive on the same component."""
    same = owner1[:, None] == owner2[None, :]
    n = counts[owner1][:, None]
    d = np.mod(idx1[:, None] - idx2[None, :], np.maximum(n, 1))
    return same & ((d == 1) | (d == n - 1))


def _check_disjoint(curves: Sequence[RectilinearCurve], same_curve_ok=False):
    tab = _edge_table(curves)
    # horizontal vs horizontal
    if len(tab.h_t):
        same_t = np.abs(tab.h_t[:, None] - tab.h_t[None, :]) <= SNAP
        ov = angle_in_arc(tab.h_lo[None, :], tab.h_lo[:, None], tab.h_len[:, None]) | \
            angle_in_arc(tab.h_lo[:, None], tab.h_lo[None, :], tab.h_len[None, :])
        hit = same_t & ov
        np.fill_diagonal(hit, False)
        hit &= ~_adjacent(tab.h_owner, tab.h_index, tab.h_owner, tab.h_index, tab.n_edges)
        if hit.any():
            i, j = np.argwhere(hit)[0]
            raise ValidationError(f"horizontal edges overlap at t={tab.h_t[i]:.6g}")
    if len(tab.v_theta):
        dth = np.abs(np.mod(tab.v_theta[:, None] - tab.v_theta[None, :] + math.pi, TWO_PI) - math.pi)
        same_th = dth <= SNAP
        ov = (tab.v_lo[:, None] <= tab.v_hi[None, :] + SNAP) & (tab.v_lo[None, :] <= tab.v_hi[:, None] + SNAP)
        hit = same_th & ov
        np.fill_diagonal(hit, False)
        hit &= ~_adjacent(tab.v_owner, tab.v_index, tab.v_owner, tab.v_index, tab.n_edges)
        if hit.any():
            i, j = np.argwhere(hit)[0]
            raise ValidationError(f"vertical edges overlap at theta={tab.v_theta[i]:.6g}")
    if len(tab.h_t) and len(tab.v_theta):
        on_arc = angle_in_arc(tab.v_theta[None, :], tab.h_lo[:, None], tab.h_len[:, None])
        in_t = (tab.h_t[:, None] >= tab.v_lo[None, :] - SNAP) & (tab.h_t[:, None] <= tab.v_hi[None, :] + SNAP)
        hit = on_arc & in_t
        hit &= ~_adjacent(tab.h_owner, tab.h_index, tab.v_owner, tab.v_index, tab.n_edges)
        if hit.any():
            i, j = np.argwhere(hit)[0]
            raise ValidationError(
                f"edges cross at (theta={tab.v_theta[j]:.6g}, t={tab.h_t[i]:.6g})")


@dataclass(frozen=True, eq=False)
class BoundaryCurveFamily:
    components: tuple = ()

    def __post_init__(self):
        comps = tuple(self.components)
        for c in comps:
            if not isinstance(c, RectilinearCurve):
                raise ValidationError("components must be RectilinearCurve instances")
        object.__setattr__(self, "components", comps)
        if comps:
            _check_disjoint(comps)
        object.__setattr__(self, "_table", _edge_table(comps))

    @classmethod
    def of(cls, *curves: RectilinearCurve) -> "BoundaryCurveFamily":
        return cls(tuple(curves))

    @classmethod
    def from_rects(cls, *rects: CylRect) -> "BoundaryCurveFamily":
        return cls(tuple(r.boundary_curve() for r in rects))

    def __len__(self):
        return len(self.components)

    def __iter__(self):
        return iter(self.components)

    @property
    def table(self) -> _EdgeTable:
        return self._table

    def event_meridians(self) -> np.ndarray:
        """Sorted distinct angles in [0, 2*pi) carrying vertical edges."""
        th = np.sort(self._table.v_theta)
        if th.size == 0:
            return th
        keep = [th[0]]
        for x in th[1:]:
            if x - keep[-1] > SNAP:
                keep.append(x)
        if len(keep) > 1 and keep[0] + TWO_PI - keep[-1] <= SNAP:
            keep.pop()
        return np.array(keep)

    def t_range(self) -> tuple[float, float]:
        if not self.components:
            return (0.0, 0.0)
        lo = min(c.t_range[0] for c in self.components)
        hi = max(c.t_range[1] for c in self.components)
        return lo, hi

    def transformed(self, dtheta=0.0, dt=0.0, mirror_theta=False, mirror_t=False) -> "BoundaryCurveFamily":
        return BoundaryCurveFamily(tuple(c.transformed(dtheta, dt, mirror_theta, mirror_t)
                                         for c in self.components))

    def to_json(self) -> dict:
        return {"components": [c.to_json() for c in self.components]}


# -- JSON -------------------------------------------------------------------

def family_from_json(obj) -> BoundaryCurveFamily:
    if isinstance(obj, (str, bytes)):
        obj = json.loads(obj)
    if not isinstance(obj, dict) or "components" not in obj:
        raise ValidationError('curve JSON needs a "components" list')
    comps = []
    for raw in obj["components"]:
        winding = 0
        if isinstance(raw, dict):
            winding = int(raw.get("winding", 0))
            raw = raw.get("vertices")
        if not isinstance(raw, list):
            raise ValidationError("component must be a list of points")
        try:
            pts = [(float(p.get("theta_lift", p["theta"])), float(p["t"])) for p in raw]
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise ValidationError(f"bad vertex entry: {exc}") from None
        comps.append(RectilinearCurve(pts, winding))
    return BoundaryCurveFamily(tuple(comps))


def load_family(path) -> BoundaryCurveFamily:
    return family_from_json(Path(path).read_text())


def save_family(family: BoundaryCurveFamily, path) -> None:
    Path(path).write_text(json.dumps(family.to_json(), indent=1))


# -- meridian sweep ---------------------------------------------------------

def meridian_cover(family: BoundaryCurveFamily, theta: float) -> list[tuple[float, float]]:
    """Merged closed t-intervals where the meridian at theta meets the family."""
    tab = family.table
    ivs = []
    if tab.h_t.size:
        mask = angle_in_arc(theta, tab.h_lo, tab.h_len)
        ivs.extend((t, t) for t in tab.h_t[mask])
    if tab.v_theta.size:
        d = np.abs(np.mod(tab.v_theta - theta + math.pi, TWO_PI) - math.pi)
        mask = d <= SNAP
        ivs.extend(zip(tab.v_lo[mask], tab.v_hi[mask]))
    ivs.sort()
    merged: list[list[float]] = []
    for a, b in ivs:
        if merged and a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([float(a), float(b)])
    return [(a, b) for a, b in merged]


def meridian_components(family: BoundaryCurveFamily, theta: float):
    """Bounded components of the meridian minus the family, as (t_lo, t_hi)."""
    cover = meridian_cover(family, theta)
    return [(cover[k][1], cover[k + 1][0]) for k in range(len(cover) - 1)]


def meridian_height(family: BoundaryCurveFamily, theta: float) -> float:
    comps = meridian_components(family, theta)
    if not comps:
        return math.inf
    return min(b - a for a, b in comps)


def slab_midpoints(family: BoundaryCurveFamily) -> np.ndarray:
    ev = family.event_meridians()
    if ev.size == 0:
        return np.array([0.0])
    nxt = np.append(ev[1:], ev[0] + TWO_PI)
    return np.mod(0.5 * (ev + nxt), TWO_PI)


@dataclass(frozen=True)
class HeightReport:
    pointwise: float        # infimum over all meridians
    essential: float        # infimum over open slabs only
    theta: float | None     # a meridian attaining the pointwise value
    component: tuple[float, float] | None


def height_report(family: BoundaryCurveFamily) -> HeightReport:
    best = (math.inf, None, None)
    ess = math.inf
    for th in slab_midpoints(family):
        for a, b in meridian_components(family, th):
            if b - a < ess:
                ess = b - a
            if b - a < best[0]:
                best = (b - a, float(th), (a, b))
    for th in family.event_meridians():
        for a, b in meridian_components(family, th):
            if b - a < best[0]:
                best = (b - a, float(th), (a, b))
    return HeightReport(best[0], ess, best[1], best[2])


def height(family: BoundaryCurveFamily) -> float:
    """Infimum over meridians of the bounded component lengths."""
    return height_report(family).pointwise


# -- classification -------------------------------------------------------

@dataclass(frozen=True)
class TallnessVerdict:
    height: float
    curve_class: CurveClass
    witnesses: tuple = ()
    essential_height: float = math.inf

    def to_json(self) -> dict:
        wit = []
        for w in self.witnesses:
            if isinstance(w, CylRect):
                wit.append({"rect": w.to_json()})
            else:
                wit.append(w)
        return {"height": _json_num(self.height), "class": self.curve_class.value,
                "essential_height": _json_num(self.essential_height), "witnesses": wit}


def classify(family: BoundaryCurveFamily, tol: float = 1e-9) -> TallnessVerdict:
    if not tol > 0:
        raise PreconditionError("tol must be positive")
    rep = height_report(family)
    h = rep.pointwise
    if abs(h - math.pi) <= tol:
        return TallnessVerdict(h, CurveClass.BORDERLINE, (), rep.essential)
    if h < math.pi <= rep.essential - tol:
        wit = ({"theta": rep.theta, "t_lo": rep.component[0], "t_hi": rep.component[1]},)
        return TallnessVerdict(h, CurveClass.EXCEPTIONAL, wit, rep.essential)
    if h > math.pi:
        cells = tuple(slab_cells(family, "plus")) + tuple(slab_cells(family, "minus"))
        return TallnessVerdict(h, CurveClass.TALL, cells, rep.essential)
    wit = ({"theta": rep.theta, "t_lo": rep.component[0], "t_hi": rep.component[1]},)
    return TallnessVerdict(h, CurveClass.SHORT, wit, rep.essential)


# -- sides and decomposition ---------------------------------------------

def crossings_below(family: BoundaryCurveFamily, theta, t) -> np.ndarray:
    """Number of horizontal edges strictly below (theta, t) on its meridian.

    Only meaningful off event meridians.
    """
    tab = family.table
    theta = np.atleast_1d(np.asarray(theta, float))
    t = np.atleast_1d(np.asarray(t, float))
    if tab.h_t.size == 0:
        return np.zeros(np.broadcast(theta, t).shape, int)
    on = angle_in_arc(theta[..., None], tab.h_lo, tab.h_len)
    below = tab.h_t < t[..., None]
    return np.sum(on & below, axis=-1)


def side_of(family: BoundaryCurveFamily, theta, t):
    """'plus' (odd crossing parity) or 'minus' for points off the curve."""
    par = crossings_below(family, theta, t) % 2
    res = np.where(par == 1, "plus", "minus")
    return res if res.size > 1 else str(res[0])


def slab_cells(family: BoundaryCurveFamily, side: str) -> list[CylRect]:
    """Cells between consecutive event meridians covering one complement side."""
    ev = family.event_meridians()
    if ev.size == 0:
        bounds = [(0.0, TWO_PI)]
    else:
        bounds = [(ev[i], ev[i + 1]) for i in range(len(ev) - 1)] + [(ev[-1], ev[0] + TWO_PI)]
    want = 1 if side == "plus" else 0
    cells = []
    for lo, hi in bounds:
        mid = wrap_angle(0.5 * (lo + hi))
        ts = [a for a, _ in meridian_cover(family, mid)]
        edges = [-math.inf] + ts + [math.inf]
        for k in range(len(edges) - 1):
            if k % 2 == want:
                cells.append(CylRect(lo, hi if hi - lo < TWO_PI - SNAP else lo + TWO_PI,
                                     edges[k], edges[k + 1]))
    return cells


def decompose_tall_region(family: BoundaryCurveFamily, side: str = "plus", tol: float = 1e-9) -> list[CylRect]:
    """Slab-cell cover of one complement side by tall rectangles."""
    if side not in ("plus", "minus"):
        raise PreconditionError("side must be 'plus' or 'minus'")
    verdict = classify(family, tol)
    if verdict.curve_class is not CurveClass.TALL:
        raise PreconditionError(f"family is {verdict.curve_class.value}, not Tall")
    return slab_cells(family, side)


# -- thin tails -------------------------------------------------------------

@dataclass(frozen=True)
class ThinTail:
    arc: tuple            # lifted (theta, t) points along the curve
    barrier_meridian: float
    side: str             # 'left' or 'right' of the barrier meridian
    strip: tuple          # (c, c + pi)
    component: int = 0

    def to_json(self) -> dict:
        return {"arc": [{"theta": wrap_angle(a), "t": b} for a, b in self.arc],
                "barrier_meridian": self.barrier_meridian, "side": self.side,
                "strip": list(self.strip), "component": self.component}


def _walk(curve: RectilinearCurve, start: int, step: int):
    """Yield lifted edges walking from vertex ``start`` in direction ``step``."""
    a, b = curve.edge_endpoints()
    n = len(a)
    k = start
    offset = TWO_PI * curve.winding * (start // n) if step > 0 else 0.0
    for _ in range(n):
        if step > 0:
            e = k % n
            pa, pb = a[e].copy(), b[e].copy()
            pa[0] += offset; pb[0] += offset
            if e == n - 1:
                offset += TWO_PI * curve.winding
            yield pa, pb
            k += 1
        else:
            e = (k - 1) % n
            if e == n - 1:
                offset -= TWO_PI * curve.winding
            pa, pb = b[e].copy(), a[e].copy()
            pa[0] += offset; pb[0] += offset
            yield pa, pb
            k -= 1


def _extend(curve, start, step, theta0, sgn, tmin, tmax):
    """Grow the tail arc from a vertex until a Def-style condition would fail.

    Returns the added points (excluding the start vertex) and the updated
    t-range.  The last point is placed halfway into the first edge that
    cannot be taken whole.
    """
    pts = []
    for pa, pb in _walk(curve, start, step):
        if pa[1] == pb[1]:
            # horizontal: stays on side while sgn*(theta-theta0) >= 0, never
            # touching the barrier at the free end
            rel_b = sgn * (pb[0] - theta0)
            if rel_b > SNAP and rel_b < TWO_PI - SNAP:
                pts.append((pb[0], pb[1]))
                continue
            rel_a = sgn * (pa[0] - theta0)
            lim = 0.0 if rel_b <= SNAP else TWO_PI
            frac = 0.5 * (lim - rel_a) / (rel_b - rel_a)
            pts.append((pa[0] + frac * (pb[0] - pa[0]), pa[1]))
            return pts, tmin, tmax
        lo, hi = min(pb[1], tmin), max(pb[1], tmax)
        if hi - lo < math.pi:
            pts.append((pb[0], pb[1]))
            tmin, tmax = lo, hi
            continue
        # partial vertical edge: stop halfway to the pi limit
        if pb[1] > pa[1]:
            room = tmin + math.pi - pa[1]
            end = pa[1] + 0.5 * room
            tmax = max(tmax, end)
        else:
            room = pa[1] - (tmax - math.pi)
            end = pa[1] - 0.5 * room
            tmin = min(tmin, end)
        pts.append((pa[0], end))
        return pts, tmin, tmax
    return pts, tmin, tmax


def detect_thin_tails(family: BoundaryCurveFamily) -> list[ThinTail]:
    """Tails at U-turn vertical edges shorter than pi."""
    tails = []
    for ci, curve in enumerate(family.components):
        if len(curve) < 4:
            continue
        a, b = curve.edge_endpoints()
        n = len(a)
        for k in range(n):
            pa, pb = a[k], b[k]
            if pa[1] == pb[1]:
                continue
            length = abs(pb[1] - pa[1])
            if length >= math.pi:
                continue
            prev_a = a[(k - 1) % n].copy()
            if k == 0:
                prev_a[0] -= TWO_PI * curve.winding
            side_prev = np.sign(prev_a[0] - pa[0])
            # end of next edge, in the same lift as pb
            na, nb = a[(k + 1) % n], b[(k + 1) % n]
            side_next = np.sign((nb[0] - na[0]))
            if side_prev != side_next or side_prev == 0:
                continue
            sgn = float(side_prev)
            theta0 = pa[0]
            tmin, tmax = min(pa[1], pb[1]), max(pa[1], pb[1])
            fwd, tmin, tmax = _extend(curve, k + 1, +1, theta0, sgn, tmin, tmax)
            back, tmin, tmax = _extend(curve, k, -1, theta0, sgn, tmin, tmax)
            arc = tuple(back[::-1]) + ((pa[0], pa[1]), (pb[0], pb[1])) + tuple(fwd)
            ts = [p[1] for p in arc]
            c = 0.5 * (min(ts) + max(ts)) - 0.5 * math.pi
            tails.append(ThinTail(arc, wrap_angle(theta0), "right" if sgn > 0 else "left",
                                  (c, c + math.pi), ci))
    return tails


def check_thin_tail(tail: ThinTail) -> bool:
    """Re-check the three tail conditions directly on the arc polyline."""
    pts = np.asarray(tail.arc, float)
    th0 = tail.barrier_meridian
    # unwrap relative to the barrier, starting from any on-barrier point
    rel = pts[:, 0] - th0
    rel = np.mod(rel + math.pi, TWO_PI) - math.pi
    rel = np.unwrap(rel)
    touches = np.any(np.abs(rel) <= SNAP)
    ends_off = abs(rel[0]) > SNAP and abs(rel[-1]) > SNAP
    sgn = 1.0 if tail.side == "right" else -1.0
    one_side = np.all(sgn * rel >= -SNAP) and np.all(sgn * rel < TWO_PI)
    c0, c1 = tail.strip
    in_strip = np.all(pts[:, 1] > c0) and np.all(pts[:, 1] < c1) and c1 - c0 <= math.pi + SNAP
    return bool(touches and ends_off and one_side and in_strip)


# -- fixtures ---------------------------------------------------------------

def rect_curve(theta_lo, theta_hi, t_lo, t_hi) -> RectilinearCurve:
    """Boundary loop of [theta_lo, theta_hi] x [t_lo, t_hi] (lifted angles)."""
    return RectilinearCurve([(theta_lo, t_lo), (theta_hi, t_lo), (theta_hi, t_hi), (theta_lo, t_hi)])


def exceptional_example() -> BoundaryCurveFamily:
    """Two stacked rectangles sharing part of a side, shared part removed."""
    a = math.pi / 3
    b = 2 * math.pi / 3
    return BoundaryCurveFamily.of(RectilinearCurve([
        (0.0, -1.0), (a, -1.0), (a, -5.0), (b, -5.0), (b, 1.0), (a, 1.0), (a, 5.0), (0.0, 5.0)]))
