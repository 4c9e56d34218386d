import json
import math

import pytest

from plateau_hxr.boundary_curves import CurveClass, classify
from plateau_hxr.errors import PreconditionError, ValidationError
from plateau_hxr.topology import (CYLINDER_WITH_HANDLE, HANDLE_HANGER, HANDLE_PAIR, PAIR_OF_PANTS,
                                  PAIR_OF_PANTS_BRIDGE, BridgeSchedule, InfiniteTypeSpec, RegionOp,
                                  SurfaceSignature, apply_bridge_signature, emit_schedule, finite_type_schedule,
                                  region_boundary, signature_trace, simple_exhaustion, validate_schedule,
                                  with_step)

PI = math.pi


def test_bridge_signature_rules():
    disk = SurfaceSignature.disk()
    annulus = apply_bridge_signature(disk, True)
    assert (annulus.chi, annulus.boundary_count, annulus.genus) == (0, 2, 0)
    torus_hole = apply_bridge_signature(annulus, False)
    assert (torus_hole.chi, torus_hole.boundary_count, torus_hole.genus) == (-1, 1, 1)


def test_different_component_bridge_needs_two_boundaries():
    with pytest.raises(ValidationError):
        apply_bridge_signature(SurfaceSignature.disk(), False)


def test_signature_invariants_checked():
    with pytest.raises(ValidationError):
        SurfaceSignature(1, 2, 0, 2)


def test_simple_exhaustion_counts():
    kinds = simple_exhaustion(SurfaceSignature.compact(2, 4))
    assert kinds.count(PAIR_OF_PANTS) == 3 and kinds.count(CYLINDER_WITH_HANDLE) == 2
    final = signature_trace(kinds)[-1]
    assert (final.genus, final.boundary_count) == (2, 4)


def test_infinite_target_is_lazy():
    spec = InfiniteTypeSpec(lambda i: PAIR_OF_PANTS if i % 2 else CYLINDER_WITH_HANDLE)
    gen = simple_exhaustion(spec)
    first = [next(gen) for _ in range(4)]
    assert first == [PAIR_OF_PANTS, CYLINDER_WITH_HANDLE] * 2
    with pytest.raises(PreconditionError):
        emit_schedule(spec)
    sched = emit_schedule(spec, max_steps=3)
    assert len(sched.steps) == 3


def test_region_boundary_of_union_and_hole():
    fam = region_boundary([RegionOp((0.0, 2.0, 0.0, 6.0), True), RegionOp((0.5, 1.5, 2.0, 4.0), False)])
    assert len(fam) == 2
    assert classify(fam).curve_class is CurveClass.SHORT


def test_finite_type_schedule_layout():
    sched = finite_type_schedule(2, 3)
    assert sched.count(PAIR_OF_PANTS_BRIDGE) == 3 and sched.count(HANDLE_PAIR) == 2
    sig = sched.final_signature
    assert (sig.genus, sig.ends) == (2, 4)
    assert validate_schedule(sched).passed


def test_emit_schedule_validates_and_stays_tall():
    sched = emit_schedule(SurfaceSignature.compact(2, 4))
    rep = validate_schedule(sched)
    assert rep.passed, rep.to_json()
    assert sched.count(HANDLE_HANGER) == 2
    assert all(classify(c).curve_class is CurveClass.TALL for c in sched.stage_curves)


def test_thick_bridge_fails_validation():
    sched = emit_schedule(SurfaceSignature.compact(0, 2))
    step = sched.steps[0]
    bad = with_step(sched, 0, thickness=sched.rho_sep * step.epsilon / 2)
    assert not validate_schedule(bad).passed


def test_schedule_json_round_trip():
    sched = emit_schedule(SurfaceSignature.compact(1, 2))
    again = BridgeSchedule.from_json(json.loads(json.dumps(sched.to_json())))
    assert validate_schedule(again).passed
    assert again.final_signature == sched.final_signature
