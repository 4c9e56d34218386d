import math

import numpy as np
import pytest

from helpers import two_rect_family
from plateau_hxr import catenoid as cat
from plateau_hxr.boundary_curves import BoundaryCurveFamily, height, rect_curve
from plateau_hxr.errors import PreconditionError
from plateau_hxr.hyperbolic import Isometry, gans_from_halfplane, polar_from_gans
from plateau_hxr.mesh import disk_mesh
from plateau_hxr.minimizer import SolverConfig
from plateau_hxr.scenarios import (CONVERGES, ESCAPES, UNDETERMINED, CatenoidBarrier, bridge_solve, bridged_family,
                                   catenoid_parameter, catenoid_slice_mesh, catenoid_sweep, escape_verdict,
                                   family_seed, minexist_curve, probe_occupancy, region_components)
from plateau_hxr.seeds import TruncatedDomain
from plateau_hxr.topology import Segment

PI = math.pi
GRID = list(np.geomspace(0.05, 20.0, 15))


def test_escape_verdict_rules():
    assert escape_verdict([6.3, 6.4, 6.0, 6.2]) == CONVERGES
    assert escape_verdict([3.0, 0.0, 0.0, 0.0]) == ESCAPES
    assert escape_verdict([6.0, 4.0, 2.0, 1.0]) == UNDETERMINED
    assert escape_verdict([0.0, 1.0, 0.0, 0.0]) == ESCAPES
    assert escape_verdict([0.0, 0.0, 1.0, 0.0]) == UNDETERMINED
    assert escape_verdict([6.0, 4.0, 2.0, 0.0]) == UNDETERMINED


def test_catenoid_parameter_inverts_height():
    d = catenoid_parameter(0.9 * PI)
    assert 2 * cat.height_limit(d).value == pytest.approx(0.9 * PI, abs=1e-10)
    with pytest.raises(PreconditionError):
        catenoid_parameter(PI)


def test_catenoid_slice_mesh_lies_on_the_profile():
    d = 2.0
    mesh = catenoid_slice_mesh(d, 3.0, center=1.0)
    rho, _, z = mesh.polar()
    assert np.allclose(np.abs(z - 1.0), cat.lam_grid(d, rho), atol=1e-9)
    assert mesh.signature().boundary_count == 2


def test_sweep_clean_against_disjoint_slab():
    target = disk_mesh(3.0, z=5.0, sectors=12)
    rep = catenoid_sweep(target, 0.9 * PI, None, GRID)
    assert rep.clean and rep.first_hit is None


def test_sweep_aimed_away_from_a_disk():
    # a disk far out toward theta = pi, catenoid dilated toward theta = 0
    disk = disk_mesh(0.5, z=0.0, sectors=12)
    V = Isometry.dilation(50.0).on_gans(disk.vertices)
    rep = catenoid_sweep(disk.with_vertices(V), 0.9 * PI, None, [1.0, 0.5, 0.2, 0.1, 0.05])
    assert rep.clean


def test_sweep_hits_a_crossing_sheet_and_stays_monotone():
    target = disk_mesh(3.0, z=0.0, sectors=12)
    rep = catenoid_sweep(target, 0.9 * PI, None, GRID)
    assert rep.first_hit == GRID[0]
    assert rep.monotone


def test_sweep_preconditions():
    with pytest.raises(PreconditionError):
        catenoid_sweep(disk_mesh(1.0), 3.5, None, GRID)
    with pytest.raises(PreconditionError):
        catenoid_sweep(disk_mesh(1.0), 2.0, None, [])


def test_region_components_split_stacked_rectangles():
    comps = region_components(two_rect_family())
    assert len(comps) == 2


def test_family_seed_has_one_disk_per_component():
    seed = family_seed(two_rect_family(), 3.0)
    sig = seed.signature()
    assert (sig.components, sig.boundary_count, sig.chi) == (2, 2, 2)


def test_probe_occupancy_of_a_flat_disk():
    mesh = disk_mesh(3.0, 0.0, 12).refine().refine()
    count, area = probe_occupancy(mesh, TruncatedDomain(3.5, -1.0, 1.0))
    assert count == mesh.n_vertices and area == pytest.approx(mesh.area())
    assert probe_occupancy(mesh, TruncatedDomain(3.5, 1.0, 2.0)) == (0, 0.0)


def test_minexist_curve_height_is_h0():
    for h0 in (0.5 * PI, 0.9 * PI, 0.99 * PI):
        assert abs(height(minexist_curve(h0, 0.2)) - h0) <= 1e-9


def test_catenoid_barrier_slices_lie_on_the_dilated_catenoid():
    h0, t = 0.9 * PI, 0.2
    bar = CatenoidBarrier.build(h0, t)
    z = np.array([0.3, 1.0, h0 / 2, 2.5])
    c, R = bar.slice_disk(z)
    ang = np.linspace(0, 2 * PI, 7)
    for zi, ci, Ri in zip(z, c, R):
        X = gans_from_halfplane(Ri * np.cos(ang), ci + Ri * np.sin(ang))
        # undo the dilation: the slice is a circle about the origin with the profile radius
        back = Isometry.dilation(1.0 / t).on_gans(X)
        rho, _ = polar_from_gans(back)
        assert np.allclose(np.abs(zi - h0 / 2), cat.lam_grid(bar.d, rho), atol=1e-6)


def test_bridge_must_keep_the_curve_tall():
    fam = BoundaryCurveFamily.of(rect_curve(-1.0, 1.0, 0.0, 2.0))
    with pytest.raises(PreconditionError):
        bridged_family(fam, Segment(0.0, 0.0, 2.0), 0.1)


def test_bridge_endpoints_must_lie_on_the_curve():
    with pytest.raises(PreconditionError):
        bridged_family(two_rect_family(), Segment(0.3, -6.0, -3.0), 0.1)


def test_bridged_family_counts():
    fam = two_rect_family()
    same, flag_same, inside = bridged_family(fam, Segment(0.3, -7.0, -3.0), 0.1)
    assert flag_same and inside and len(same) == 3
    joined, flag_diff, outside = bridged_family(fam, Segment(0.3, -3.0, 3.0), 0.1)
    assert not flag_diff and not outside and len(joined) == 1


def test_bridge_solve_different_components():
    _, solved, rep = bridge_solve(two_rect_family(), Segment(0.3, -3.0, 3.0), 0.1, 3.0,
                                  SolverConfig(max_iters=2000))
    assert rep.matches
    assert rep.signature_after["boundary_count"] == 1 and rep.signature_after["chi"] == 1
