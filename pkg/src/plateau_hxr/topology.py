"""Bridge schedules that build surfaces of prescribed topology stage by stage.

A stage curve is the boundary of a region of the boundary cylinder made of
axis-parallel rectangles. Bridges are realised as rectilinear slots: a bridge
inside the region removes a thin strip, a bridge through the complement adds
one. Every stage is checked for tallness with the curve classifier.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterator

import numpy as np

from .boundary_curves import (BoundaryCurveFamily, CurveClass, CylRect, RectilinearCurve,
                              classify, family_from_json)
from .errors import PreconditionError, ValidationError

INFINITE = math.inf
RHO_SEP = 0.05
PI = math.pi

PAIR_OF_PANTS = "PairOfPants"
CYLINDER_WITH_HANDLE = "CylinderWithHandle"


# -- signatures ----------------------------------------------------------------

@dataclass(frozen=True)
class SurfaceSignature:
    """Genus, ends and Euler characteristic of a connected orientable surface.

    For compact stages ``ends`` equals ``boundary_count``; infinite values use
    ``math.inf`` and leave ``chi`` as None.
    """

    genus: float
    ends: float
    chi: int | None = None
    boundary_count: int | None = None

    def __post_init__(self):
        if self.genus < 0 or self.ends < 1 and not self.is_compact:
            raise ValidationError("genus must be non-negative and ends positive")
        if self.is_compact:
            if self.chi is None or self.boundary_count is None:
                raise ValidationError("compact signatures need chi and boundary_count")
            if self.boundary_count < 0:
                raise ValidationError("boundary_count must be non-negative")
            if self.chi != 2 - 2 * self.genus - self.boundary_count:
                raise ValidationError("chi must equal 2 - 2 genus - boundary_count")

    @property
    def is_compact(self) -> bool:
        return math.isfinite(self.genus) and math.isfinite(self.ends)

    @classmethod
    def compact(cls, genus: int, boundary_count: int) -> "SurfaceSignature":
        return cls(int(genus), int(boundary_count), 2 - 2 * int(genus) - int(boundary_count),
                   int(boundary_count))

    @classmethod
    def disk(cls) -> "SurfaceSignature":
        return cls.compact(0, 1)

    def to_json(self) -> dict:
        def num(x):
            return "inf" if x is not None and not math.isfinite(x) else x
        return {"genus": num(self.genus), "ends": num(self.ends), "chi": self.chi,
                "boundary_count": self.boundary_count}

    @classmethod
    def from_json(cls, obj) -> "SurfaceSignature":
        def num(x):
            return math.inf if x == "inf" else x
        return cls(num(obj["genus"]), num(obj["ends"]), obj.get("chi"), obj.get("boundary_count"))


def apply_bridge_signature(sig: SurfaceSignature, same_component: bool) -> SurfaceSignature:
    """Signature after attaching one 1-handle along the boundary."""
    if not sig.is_compact:
        raise PreconditionError("bridge bookkeeping needs a compact signature")
    need = 1 if same_component else 2
    if sig.boundary_count < need:
        raise ValidationError(
            f"a {'same' if same_component else 'different'}-component bridge needs "
            f"{need} boundary component(s), the surface has {sig.boundary_count}")
    chi = sig.chi - 1
    b = sig.boundary_count + (1 if same_component else -1)
    twice_genus = 2 - chi - b
    if twice_genus < 0 or twice_genus % 2:
        raise ValidationError("bridge produced an impossible signature")
    return SurfaceSignature(twice_genus // 2, b, chi, b)


_STEP_BRIDGES = {PAIR_OF_PANTS: (True,), CYLINDER_WITH_HANDLE: (True, False)}


def apply_step_signature(sig: SurfaceSignature, kind: str) -> SurfaceSignature:
    for same in _STEP_BRIDGES[kind]:
        sig = apply_bridge_signature(sig, same)
    return sig


# -- simple exhaustions -----------------------------------------------------------

@dataclass(frozen=True)
class InfiniteTypeSpec:
    """Infinite-type target given by a generator: step index -> step kind."""

    kind_at: Callable[[int], str]


def simple_exhaustion(target):
    """Step kinds turning a disk into the target.

    Finite targets give ends - 1 pairs of pants followed by genus cylinders with
    a handle. An ``InfiniteTypeSpec`` gives a lazy iterator.
    """
    if isinstance(target, InfiniteTypeSpec):
        def lazy() -> Iterator[str]:
            for i in itertools.count(1):
                kind = target.kind_at(i)
                if kind not in _STEP_BRIDGES:
                    raise ValidationError(f"unknown step kind {kind!r}")
                yield kind
        return lazy()
    if not isinstance(target, SurfaceSignature) or not target.is_compact:
        raise PreconditionError("finite targets must be compact signatures")
    if target.genus < 0 or target.ends < 1:
        raise PreconditionError("target needs genus >= 0 and at least one end")
    return [PAIR_OF_PANTS] * int(target.ends - 1) + [CYLINDER_WITH_HANDLE] * int(target.genus)


def signature_trace(kinds, start: SurfaceSignature | None = None) -> list[SurfaceSignature]:
    sig = start or SurfaceSignature.disk()
    out = [sig]
    for kind in kinds:
        sig = apply_step_signature(sig, kind)
        out.append(sig)
    return out


# -- regions and stage curves -------------------------------------------------------

@dataclass(frozen=True)
class RegionOp:
    rect: tuple            # (theta_lo, theta_hi, t_lo, t_hi), lifted angles
    add: bool


def region_boundary(ops) -> BoundaryCurveFamily:
    """Boundary loops of the region built by applying the add/remove ops in order."""
    ths = sorted({v for op in ops for v in op.rect[:2]})
    ts = sorted({v for op in ops for v in op.rect[2:]})
    inside = np.zeros((len(ths) - 1, len(ts) - 1), bool)
    tc = 0.5 * (np.array(ths[:-1]) + np.array(ths[1:]))
    zc = 0.5 * (np.array(ts[:-1]) + np.array(ts[1:]))
    for op in ops:
        a, b, c, d = op.rect
        cover = ((tc > a) & (tc < b))[:, None] & ((zc > c) & (zc < d))[None, :]
        inside = inside | cover if op.add else inside & ~cover
    if not inside.any():
        raise ValidationError("region is empty")
    ni, nj = inside.shape

    def cell(i, j):
        return 0 <= i < ni and 0 <= j < nj and inside[i, j]

    # directed edges with the region on the left
    out_edges: dict = {}
    for i, j in zip(*np.nonzero(inside)):
        if not cell(i, j - 1):
            out_edges.setdefault((i, j), []).append((i + 1, j))
        if not cell(i + 1, j):
            out_edges.setdefault((i + 1, j), []).append((i + 1, j + 1))
        if not cell(i, j + 1):
            out_edges.setdefault((i + 1, j + 1), []).append((i, j + 1))
        if not cell(i - 1, j):
            out_edges.setdefault((i, j + 1), []).append((i, j))
    loops = []
    while out_edges:
        start = next(iter(out_edges))
        loop = [start]
        prev, cur = None, start
        while True:
            choices = out_edges[cur]
            if len(choices) == 1 or prev is None:
                nxt = choices[0]
            else:
                # at a pinch vertex turn left so touching cells stay separate
                din = (cur[0] - prev[0], cur[1] - prev[1])
                left = (-din[1], din[0])
                nxt = next((c for c in choices if (c[0] - cur[0], c[1] - cur[1]) == left), choices[0])
            choices.remove(nxt)
            if not choices:
                del out_edges[cur]
            prev, cur = cur, nxt
            if cur == start:
                break
            loop.append(cur)
        pts = [(ths[i], ts[j]) for i, j in loop]
        loops.append(RectilinearCurve(pts))
    return BoundaryCurveFamily.of(*loops)


# -- gadget steps and schedules ---------------------------------------------------------

PAIR_OF_PANTS_BRIDGE = "PairOfPantsBridge"
HANDLE_HANGER = "HandleHanger"
HANDLE_PAIR = "HandlePair"


@dataclass(frozen=True)
class Segment:
    """Vertical segment {theta} x [t_lo, t_hi] of the boundary cylinder."""

    theta: float
    t_lo: float
    t_hi: float

    def slot(self, thickness: float) -> tuple:
        return (self.theta - thickness / 2.0, self.theta + thickness / 2.0, self.t_lo, self.t_hi)

    def to_json(self) -> dict:
        return {"theta": self.theta, "t_lo": self.t_lo, "t_hi": self.t_hi}


def lifted_rect(rect: CylRect, near: float) -> tuple:
    """(theta_lo, theta_hi, t_lo, t_hi) with the angles lifted next to ``near``."""
    lo = rect.theta_lo + 2.0 * PI * round((near - rect.theta_lo - rect.width / 2.0) / (2.0 * PI))
    return (lo, lo + rect.width, rect.t_lo, rect.t_hi)


def _rect_json(r):
    return None if r is None else r.to_json()


@dataclass(frozen=True)
class GadgetStep:
    kind: str
    attach_component: int
    meridian: float
    epsilon: float
    thickness: float
    beta: Segment
    beta_inside: bool = True       # slot cut from the region (same component)
    q_rect: CylRect | None = None
    w_plus: CylRect | None = None
    w_minus: CylRect | None = None
    tau_plus: Segment | None = None
    tau_minus: Segment | None = None
    zeta_prime: Segment | None = None

    def ops(self) -> list[RegionOp]:
        out = [RegionOp(self.beta.slot(self.thickness), not self.beta_inside)]
        if self.q_rect is not None:
            out.append(RegionOp(lifted_rect(self.q_rect, self.meridian), True))
        for seg in (self.tau_plus, self.tau_minus, self.zeta_prime):
            if seg is not None:
                out.append(RegionOp(seg.slot(self.thickness), True))
        return out

    def bridge_flags(self) -> tuple:
        if self.kind == PAIR_OF_PANTS_BRIDGE:
            return (True,)
        return (True, False)

    def to_json(self) -> dict:
        seg = lambda s: None if s is None else s.to_json()  # noqa: E731
        return {"kind": self.kind, "attach_component": self.attach_component,
                "meridian": self.meridian, "epsilon": self.epsilon, "thickness": self.thickness,
                "beta": seg(self.beta), "beta_inside": self.beta_inside,
                "Q": _rect_json(self.q_rect), "W_plus": _rect_json(self.w_plus),
                "W_minus": _rect_json(self.w_minus), "tau_plus": seg(self.tau_plus),
                "tau_minus": seg(self.tau_minus), "zeta_prime": seg(self.zeta_prime)}

    @classmethod
    def from_json(cls, obj) -> "GadgetStep":
        seg = lambda s: None if s is None else Segment(s["theta"], s["t_lo"], s["t_hi"])  # noqa: E731
        rect = lambda r: None if r is None else CylRect(r["theta_lo"], r["theta_hi"], r["t_lo"], r["t_hi"])  # noqa: E731
        return cls(obj["kind"], obj["attach_component"], obj["meridian"], obj["epsilon"],
                   obj["thickness"], seg(obj["beta"]), obj.get("beta_inside", True),
                   rect(obj.get("Q")), rect(obj.get("W_plus")), rect(obj.get("W_minus")),
                   seg(obj.get("tau_plus")), seg(obj.get("tau_minus")), seg(obj.get("zeta_prime")))


@dataclass
class BridgeSchedule:
    initial_ops: list
    steps: list
    stage_curves: list
    stage_signatures: list
    rho_sep: float = RHO_SEP
    notes: dict = field(default_factory=dict)

    @property
    def initial_curve(self) -> BoundaryCurveFamily:
        return self.stage_curves[0]

    @property
    def final_signature(self) -> SurfaceSignature:
        return self.stage_signatures[-1]

    def count(self, kind: str) -> int:
        return sum(1 for s in self.steps if s.kind == kind)

    def to_json(self) -> dict:
        return {"initial_region": [{"rect": list(op.rect), "add": op.add} for op in self.initial_ops],
                "rho_sep": self.rho_sep,
                "steps": [s.to_json() for s in self.steps],
                "stage_curves": [c.to_json() for c in self.stage_curves],
                "stage_signatures": [s.to_json() for s in self.stage_signatures],
                "notes": self.notes}

    @classmethod
    def from_json(cls, obj) -> "BridgeSchedule":
        return cls([RegionOp(tuple(o["rect"]), o["add"]) for o in obj["initial_region"]],
                   [GadgetStep.from_json(s) for s in obj["steps"]],
                   [family_from_json(c) for c in obj["stage_curves"]],
                   [SurfaceSignature.from_json(s) for s in obj["stage_signatures"]],
                   obj.get("rho_sep", RHO_SEP), obj.get("notes", {}))


def stage_ops(schedule: BridgeSchedule, stage: int) -> list[RegionOp]:
    ops = list(schedule.initial_ops)
    for step in schedule.steps[:stage]:
        ops += step.ops()
    return ops


# -- allocation ----------------------------------------------------------------------------

@dataclass
class _Component:
    ident: int
    arcs: list             # free (theta_lo, theta_hi) arcs inside the base strip


class MeridianAllocator:
    """Dyadic allocation: each gadget sits at the midpoint of the widest free arc."""

    def __init__(self, arcs):
        self.components = [_Component(0, [tuple(a) for a in arcs])]
        self._next = 1

    def widest(self) -> tuple[_Component, tuple]:
        best = max(((c, a) for c in self.components for a in c.arcs), key=lambda ca: ca[1][1] - ca[1][0])
        return best

    def split(self, comp: _Component, cut: float, gap: float) -> None:
        """Cut the component's arcs at ``cut``; the left part becomes a new component."""
        left, right = [], []
        for a, b in comp.arcs:
            if b <= cut - gap:
                left.append((a, b))
            elif a >= cut + gap:
                right.append((a, b))
            else:
                if cut - gap > a:
                    left.append((a, cut - gap))
                if cut + gap < b:
                    right.append((cut + gap, b))
        comp.arcs = right
        self.components.append(_Component(self._next, left))
        self._next += 1

    def reserve(self, comp: _Component, lo: float, hi: float) -> None:
        arcs = []
        for a, b in comp.arcs:
            if b <= lo or a >= hi:
                arcs.append((a, b))
                continue
            if a < lo:
                arcs.append((a, lo))
            if hi < b:
                arcs.append((hi, b))
        comp.arcs = arcs


BASE_RECT = (-PI / 2, PI / 2, 0.0, 10.0)


def hanger_geometry(c: float, eps: float, rho_sep: float) -> dict:
    """Frame rectangles and bridge segments of the handle gadget at meridian c."""
    return {"Q": CylRect(c - rho_sep * eps / 2, c + rho_sep * eps / 2, -6 * PI, -4 * PI),
            "W_plus": CylRect(c - eps, c + eps, -9 * PI, -PI),
            "W_minus": CylRect(c - rho_sep * eps, c + rho_sep * eps, -7 * PI, -3 * PI),
            "tau_plus": Segment(c + rho_sep * eps / 4, -4 * PI, 0.0),
            "tau_minus": Segment(c - rho_sep * eps / 4, -4 * PI, 0.0)}


def emit_schedule(target, epsilon0: float = 1.0, rho_sep: float = RHO_SEP,
                  thickness_factor: float = 1.0 / 8.0, max_steps: int | None = None) -> BridgeSchedule:
    """Stage curves realising a simple exhaustion on the base rectangle.

    ``epsilon_n = epsilon0 4^-n`` and ``thickness_n = thickness_factor rho_sep epsilon_n``.
    Infinite targets need ``max_steps`` to cut the lazy exhaustion.
    """
    if not (epsilon0 > 0 and rho_sep > 0 and thickness_factor > 0):
        raise PreconditionError("ladders must be positive")
    kinds = simple_exhaustion(target)
    if not isinstance(kinds, list):
        if max_steps is None:
            raise PreconditionError("infinite targets need max_steps")
        kinds = list(itertools.islice(kinds, max_steps))
    initial = [RegionOp(BASE_RECT, True)]
    alloc = MeridianAllocator([BASE_RECT[:2]])
    steps = []
    for n, kind in enumerate(kinds, start=1):
        eps = epsilon0 * 4.0 ** (-n)
        w = thickness_factor * rho_sep * eps
        comp, (a, b) = alloc.widest()
        c = 0.5 * (a + b)
        beta = Segment(c, BASE_RECT[2], BASE_RECT[3])
        if kind == PAIR_OF_PANTS:
            if b - a <= 4 * w:
                raise ValidationError("meridian allocator exhausted the angular budget")
            steps.append(GadgetStep(PAIR_OF_PANTS_BRIDGE, comp.ident, c, eps, w, beta))
            alloc.split(comp, c, w / 2)
        else:
            if b - a <= 2 * eps:
                raise ValidationError("meridian allocator exhausted the angular budget")
            g = hanger_geometry(c, eps, rho_sep)
            steps.append(GadgetStep(HANDLE_HANGER, comp.ident, c, eps, w, beta, True, g["Q"],
                                    g["W_plus"], g["W_minus"], g["tau_plus"], g["tau_minus"]))
            alloc.reserve(comp, c - eps, c + eps)
    return _assemble(initial, steps, rho_sep, {"epsilon0": epsilon0, "thickness_factor": thickness_factor})


def _assemble(initial, steps, rho_sep, notes) -> BridgeSchedule:
    curves, sigs = [], [SurfaceSignature.disk()]
    ops = list(initial)
    curves.append(region_boundary(ops))
    for step in steps:
        ops += step.ops()
        curves.append(region_boundary(ops))
        sig = sigs[-1]
        for same in step.bridge_flags():
            sig = apply_bridge_signature(sig, same)
        sigs.append(sig)
    return BridgeSchedule(initial, steps, curves, sigs, rho_sep, notes)


SIGMA_TOP = (0.0, PI, 5.0, 10.0)
SIGMA_BOTTOM = (0.0, PI, -10.0, -5.0)


def finite_type_schedule(genus: int, ends_bridges: int, thickness: float = 0.02) -> BridgeSchedule:
    """Two stacked rectangles joined by a central bridge, then ``ends_bridges``
    end-adding bridges through the top rectangle and ``genus`` bridge pairs on
    the bottom one. The final surface has the given genus and ends_bridges + 1 ends.
    """
    if genus < 0 or ends_bridges < 0:
        raise PreconditionError("genus and bridge count must be non-negative")
    mid = PI / 2
    initial = [RegionOp(SIGMA_TOP, True), RegionOp(SIGMA_BOTTOM, True),
               RegionOp(Segment(mid, -5.0, 5.0).slot(thickness), True)]
    steps = []
    for i in range(1, ends_bridges + 1):
        c = mid * (1.0 - 2.0 ** (-i))
        if c - mid * (1.0 - 2.0 ** (1 - i)) <= 2 * thickness:
            raise ValidationError("meridian allocator exhausted the angular budget")
        steps.append(GadgetStep(PAIR_OF_PANTS_BRIDGE, 0, c, 0.0, thickness,
                                Segment(c, SIGMA_TOP[2], SIGMA_TOP[3])))
    for i in range(1, genus + 1):
        c = mid + PI * 2.0 ** (-(i + 1))
        right = mid + PI * 2.0 ** (-i) if i > 1 else PI
        if right - c <= 4 * thickness:
            raise ValidationError("meridian allocator exhausted the angular budget")
        # zeta cuts the bottom rectangle; zeta' joins the detached piece to the top one
        steps.append(GadgetStep(HANDLE_PAIR, 0, c, 0.0, thickness,
                                Segment(c, SIGMA_BOTTOM[2], SIGMA_BOTTOM[3]), True,
                                zeta_prime=Segment(0.5 * (c + right), SIGMA_BOTTOM[3], SIGMA_TOP[2])))
    return _assemble(initial, steps, RHO_SEP, {"thickness": thickness, "layout": "two rectangles plus bridge"})


# -- validation --------------------------------------------------------------------------

@dataclass
class StageCheck:
    stage: int
    tall: bool
    height: float
    components_match: bool
    thickness_ok: bool
    containment_ok: bool
    rectangles_tall: bool
    recurrence_ok: bool
    rebuild_ok: bool
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all((self.tall, self.components_match, self.thickness_ok, self.containment_ok,
                    self.rectangles_tall, self.recurrence_ok, self.rebuild_ok))

    def to_json(self) -> dict:
        out = {k: getattr(self, k) for k in ("stage", "tall", "height", "components_match",
                                              "thickness_ok", "containment_ok", "rectangles_tall",
                                              "recurrence_ok", "rebuild_ok", "notes")}
        out["passed"] = self.passed
        return out


@dataclass
class ScheduleReport:
    stages: list

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.stages)

    def failures(self) -> list:
        return [s for s in self.stages if not s.passed]

    def to_json(self) -> dict:
        return {"passed": self.passed, "stages": [s.to_json() for s in self.stages]}


def _inside(inner: CylRect, outer: CylRect, near: float) -> bool:
    a, b, c, d = lifted_rect(inner, near)
    e, f, g, h = lifted_rect(outer, near)
    return a >= e and b <= f and c >= g and d <= h


def _footprint(step: GadgetStep):
    return (step.meridian - step.epsilon, step.meridian + step.epsilon)


def _check_step(step: GadgetStep, schedule: BridgeSchedule, index: int, notes: list):
    thick_ok = rect_ok = contain_ok = True
    rho_sep = schedule.rho_sep
    if step.kind in (PAIR_OF_PANTS_BRIDGE, HANDLE_HANGER) and step.epsilon > 0:
        bound = rho_sep * step.epsilon / 4.0
        if not step.thickness < bound:
            thick_ok = False
            notes.append(f"thickness {step.thickness:.3g} not below rho_sep*eps/4 = {bound:.3g}")
    if not step.thickness > 0:
        thick_ok = False
        notes.append("thickness must be positive")
    if step.kind != HANDLE_HANGER:
        return thick_ok, rect_ok, contain_ok
    rects = {"Q": step.q_rect, "W+": step.w_plus, "W-": step.w_minus}
    for name, r in rects.items():
        if r is None or not r.is_tall:
            rect_ok = False
            notes.append(f"{name} is not tall")
    if not rect_ok:
        return thick_ok, rect_ok, False
    q, wp, wm = step.q_rect, step.w_plus, step.w_minus
    extents = [(q, -6 * PI, -4 * PI), (wp, -9 * PI, -PI), (wm, -7 * PI, -3 * PI)]
    for r, lo, hi in extents:
        if r.t_lo < lo - 1e-12 or r.t_hi > hi + 1e-12:
            contain_ok = False
            notes.append(f"rectangle heights [{r.t_lo:.4g}, {r.t_hi:.4g}] outside [{lo:.4g}, {hi:.4g}]")
    for tau in (step.tau_plus, step.tau_minus):
        if tau is None or tau.t_lo < -4 * PI - 1e-12 or tau.t_hi > 1e-12:
            contain_ok = False
            notes.append("tau segment outside [-4 pi, 0]")
    if not (_inside(q, wp, step.meridian) and _inside(q, wm, step.meridian)):
        contain_ok = False
        notes.append("Q not inside both separation rectangles")
    if q.t_lo <= wm.t_lo or q.t_hi >= wm.t_hi or q.t_lo <= wp.t_lo or q.t_hi >= wp.t_hi:
        contain_ok = False
        notes.append("separation rectangle boundaries touch Q")
    if wm.width > rho_sep * wp.width + 1e-15:
        contain_ok = False
        notes.append("inner separation rectangle wider than rho_sep times the outer one")
    # the strip around the meridian meets the stage region only inside the base rectangle
    lo, hi = _footprint(step)
    for j, other in enumerate(schedule.steps):
        if j == index or other.kind != HANDLE_HANGER:
            continue
        olo, ohi = _footprint(other)
        if olo < hi and lo < ohi:
            contain_ok = False
            notes.append(f"footprint overlaps gadget {j}")
    base = schedule.initial_ops[0].rect
    if lo < base[0] or hi > base[1]:
        contain_ok = False
        notes.append("footprint leaves the base rectangle")
    for seg in (step.tau_plus, step.tau_minus):
        if seg is not None and abs(seg.theta - step.meridian) <= step.thickness:
            contain_ok = False
            notes.append("tau bridge overlaps the beta slot")
    return thick_ok, rect_ok, contain_ok


def _same_family(a: BoundaryCurveFamily, b: BoundaryCurveFamily) -> bool:
    key = lambda fam: sorted(tuple(map(tuple, np.round(c.lift, 12))) for c in fam)  # noqa: E731
    try:
        return key(a) == key(b)
    except Exception:
        return False


def validate_schedule(schedule: BridgeSchedule) -> ScheduleReport:
    """Per-stage checklist; failures are reported, not raised."""
    stages = []
    for k, curve in enumerate(schedule.stage_curves):
        notes = []
        try:
            verdict = classify(curve)
            tall = verdict.curve_class is CurveClass.TALL
            h = verdict.height
        except Exception as exc:          # malformed stage geometry
            tall, h = False, float("nan")
            notes.append(f"classification failed: {exc}")
        sig = schedule.stage_signatures[k]
        comps = len(curve) == sig.boundary_count
        thick_ok = rect_ok = contain_ok = True
        recurrence = True
        if k > 0:
            step = schedule.steps[k - 1]
            thick_ok, rect_ok, contain_ok = _check_step(step, schedule, k - 1, notes)
            prev = schedule.stage_signatures[k - 1]
            try:
                expect = prev
                for same in step.bridge_flags():
                    expect = apply_bridge_signature(expect, same)
                recurrence = expect == sig
            except ValidationError as exc:
                recurrence = False
                notes.append(str(exc))
        try:
            rebuild = _same_family(region_boundary(stage_ops(schedule, k)), curve)
        except Exception as exc:
            rebuild = False
            notes.append(f"stage rebuild failed: {exc}")
        if not rebuild:
            notes.append("stage curve does not match its steps")
        stages.append(StageCheck(k, tall, h, comps, thick_ok, contain_ok, rect_ok, recurrence,
                                 rebuild, notes))
    return ScheduleReport(stages)


def with_step(schedule: BridgeSchedule, index: int, **changes) -> BridgeSchedule:
    """Copy of the schedule with one step's fields replaced (curves left as emitted)."""
    steps = list(schedule.steps)
    steps[index] = replace(steps[index], **changes)
    return BridgeSchedule(schedule.initial_ops, steps, schedule.stage_curves,
                          schedule.stage_signatures, schedule.rho_sep, dict(schedule.notes))
