"""Acceptance suite: one test per criterion, each at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v``; a PASS/FAIL line per
criterion is printed in the terminal summary.
"""
import math
import time

import numpy as np
import pytest

from helpers import random_family, two_rect_family
from plateau_hxr import catenoid as cat
from plateau_hxr.boundary_curves import (BoundaryCurveFamily, CurveClass, CylRect, classify, exceptional_example,
                                         height_report, rect_curve)
from plateau_hxr.hyperbolic import disk_area
from plateau_hxr.mesh import area_and_gradient, cylinder_mesh, disk_mesh, triangle_areas
from plateau_hxr.minimizer import SolverConfig, minimize, minimize_multilevel
from plateau_hxr.rectangle_graphs import mid_slice_distance, solve_rectangle_graph
from plateau_hxr.scenarios import CONVERGES, ESCAPES, bridge_solve, minexist_scenario, solve_sequence
from plateau_hxr.topology import (HANDLE_PAIR, PAIR_OF_PANTS_BRIDGE, SurfaceSignature, Segment, emit_schedule,
                                  finite_type_schedule, validate_schedule)

PI = math.pi
TWO_PI = 2 * PI


class Timer:
    def __init__(self, budget: float):
        self.budget = budget

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        print(f"runtime {self.elapsed:.1f} s (budget {self.budget:.0f} s)")
        if exc[0] is None:
            assert self.elapsed < self.budget, f"took {self.elapsed:.1f} s, budget {self.budget} s"


def _fast_grid_height(family: BoundaryCurveFamily, n_meridians: int):
    """Minimum bounded meridian gap over a uniform grid of meridians.

    Works from the horizontal edges alone: for each meridian the gaps are the
    differences of consecutive edge heights crossing it.
    """
    lo, length, ts = [], [], []
    for curve in family:
        for kind, a, b in curve.edges():
            if kind == "h":
                x0, x1 = sorted((a[0], b[0]))
                lo.append(x0 % TWO_PI)
                length.append(x1 - x0)
                ts.append(a[1])
    order = np.argsort(ts)
    lo, length, ts = (np.asarray(v)[order] for v in (lo, length, ts))
    theta = (np.arange(n_meridians) + 0.5) * TWO_PI / n_meridians
    # grid meridians between the same pair of edge endpoints cross the same edges
    cuts = np.unique(np.concatenate([lo, np.mod(lo + length, TWO_PI)]))
    _, first = np.unique(np.searchsorted(cuts, theta), return_index=True)
    theta = theta[first]
    n_meridians = len(theta)
    hits = np.mod(theta[:, None] - lo[None, :], TWO_PI) < length[None, :]
    idx = np.where(hits, np.arange(len(ts))[None, :], -1)
    last = np.maximum.accumulate(idx, axis=1)
    prev = np.concatenate([np.full((n_meridians, 1), -1), last[:, :-1]], axis=1)
    valid = hits & (prev >= 0)
    gaps = np.where(valid, ts[None, :] - ts[np.maximum(prev, 0)], np.inf)
    return float(gaps.min())


def test_criterion_01_exceptional_fixture():
    with Timer(1.0):
        fam = exceptional_example()
        verdict = classify(fam)
    assert abs(verdict.height - 2.0) <= 1e-12
    assert verdict.curve_class is CurveClass.EXCEPTIONAL


def test_criterion_02_tallness_equivalence():
    rng = np.random.default_rng(2024)
    n_grid = 100_000
    step = TWO_PI / n_grid
    classes = {}
    with Timer(30.0):
        for _ in range(500):
            fam = random_family(rng)
            verdict = classify(fam)
            rep = height_report(fam)
            classes[verdict.curve_class] = classes.get(verdict.curve_class, 0) + 1
            assert (verdict.curve_class is CurveClass.TALL) == (rep.pointwise > PI)
            oracle = _fast_grid_height(fam, n_grid)
            # the grid misses only slabs narrower than one grid step
            slabs = np.diff(np.append(fam.event_meridians(), fam.event_meridians()[0] + TWO_PI))
            if slabs.min() > step:
                assert oracle == pytest.approx(rep.essential, abs=1e-9)
            else:
                assert oracle >= rep.essential - 1e-9
    assert classes.get(CurveClass.TALL, 0) > 20 and classes.get(CurveClass.SHORT, 0) > 20


def test_criterion_03_quadrature_cross_validation():
    with Timer(10.0):
        points = [(d, math.asinh(d) + off) for d in (0.1, 1.0, 10.0, 100.0, 1000.0)
                  for off in (1e-3, 0.5, 2.0, 6.0)]
        assert len(points) == 20
        for d, rho in points:
            a, b = cat.lam(d, rho).value, cat.lam_u_route(d, rho).value
            assert abs(a - b) <= 1e-9, (d, rho, a, b)
            ia, ib = cat.area_integral(d, rho).value, cat.area_integral_u_route(d, rho).value
            assert abs(ia - ib) <= 1e-9 * max(1.0, abs(ia)), (d, rho, ia, ib)
        for d in (0.1, 1.0, 10.0, 100.0, 1000.0):
            assert cat.lam(d, math.asinh(d)).value == 0.0


def test_criterion_04_area_margin_at_rho_hat():
    with Timer(30.0):
        for d in (1e2, 1e3, 1e4):
            assert cat.area_margin(d, cat.rho_hat(d)) > 0
            assert cat.rho_star(d) >= cat.rho_hat(d)


def test_criterion_05_h_hat_trend():
    with Timer(30.0):
        hs = [cat.h_hat(d).value for d in (1e2, 1e3, 1e4, 1e5)]
    assert all(b > a for a, b in zip(hs, hs[1:]))
    gaps = [PI / 2 - h for h in hs]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert all(h < PI / 2 for h in hs)


def test_criterion_06_intersections_and_iota():
    rng = np.random.default_rng(6)
    with Timer(60.0):
        for _ in range(10):
            d1 = float(10 ** rng.uniform(-1, 3))
            d2 = d1 * float(rng.uniform(1.05, 3.0))
            assert cat.sign_changes(d1, d2, 10_000) == 1
            r = cat.intersection_rho(d1, d2)
            assert abs(cat.profile_gap(d1, d2, r)) < 1e-8
        for d in (10.0, 100.0):
            res = cat.iota(d)
            assert res.value > cat.rho_hat(d)
            assert res.gap < 1e-3


@pytest.mark.slow
def test_criterion_07_solver_calibration():
    d, rho = 1.0, 2.0
    with Timer(300.0):
        lam = cat.lam(d, rho).value
        seed = cylinder_mesh(rho, -lam, lam, n_theta=12, n_z=4)
        for _ in range(3):
            seed = seed.refine()
        catenoid = minimize(seed, SolverConfig(max_iters=6000))
        disk = minimize_multilevel(disk_mesh(rho, sectors=12), SolverConfig(refine_levels=3))
    target = 4 * PI * cat.area_integral(d, rho).value
    print(f"catenoid area {catenoid.meta['area']:.5f} vs {target:.5f}; "
          f"disk {disk.meta['area']:.5f} vs {disk_area(rho):.5f}")
    assert catenoid.meta["area"] == pytest.approx(target, rel=0.02)
    assert disk.meta["area"] == pytest.approx(2 * PI * (math.cosh(rho) - 1), rel=0.01)
    # analytic gradient against central differences on the solved catenoid mesh
    V, F = catenoid.vertices, catenoid.faces
    _, grad = area_and_gradient(V, F)
    rng = np.random.default_rng(7)
    direction = rng.normal(size=V.shape)
    h = 1e-6
    fd = (triangle_areas(V + h * direction, F).sum() - triangle_areas(V - h * direction, F).sum()) / (2 * h)
    analytic = float((grad * direction).sum())
    assert abs(fd - analytic) <= 1e-5 * abs(analytic)


def _rectangle(height):
    return BoundaryCurveFamily.of(rect_curve(-PI / 2, PI / 2, -height / 2, height / 2))


@pytest.mark.slow
def test_criterion_08_existence_escape_dichotomy():
    with Timer(600.0):
        tall = solve_sequence(_rectangle(1.2 * PI), [3, 4, 5, 6])
        short = solve_sequence(_rectangle(0.8 * PI), [3, 4, 5, 6])
    print("tall probe areas", tall.occupancy_area, "short probe areas", short.occupancy_area)
    assert tall.verdict == CONVERGES and tall.trend_monotone
    assert short.verdict == ESCAPES and short.trend_monotone


@pytest.mark.slow
def test_criterion_09_dh_monotonicity():
    with Timer(600.0):
        dh = []
        for f in (1.05, 1.1, 1.5, 2.0, 3.0):
            h = f * PI
            surf = solve_rectangle_graph(CylRect(-PI / 2, PI / 2, -h / 2, h / 2), 4.0, 0)
            dh.append(mid_slice_distance(surf))
    print("d_h", dh)
    assert all(b < a for a, b in zip(dh, dh[1:]))


@pytest.mark.slow
def test_criterion_10_bridge_topology():
    fam = two_rect_family()
    cfg = SolverConfig(max_iters=3000)
    with Timer(600.0):
        for seed in (0, 1, 2):
            theta = float(np.random.default_rng(seed).uniform(-0.8, 0.8))
            for lo, hi, same in ((-7.0, -3.0, True), (-3.0, 3.0, False)):
                _, solved, rep = bridge_solve(fam, Segment(theta, lo, hi), 0.1, 3.0, cfg, seed=seed)
                before, after = rep.signature_before, rep.signature_after
                assert rep.same_component is same
                assert after["chi"] == before["chi"] - 1
                assert after["boundary_count"] == before["boundary_count"] + (1 if same else -1)


def test_criterion_11_schedule_validation():
    with Timer(10.0):
        finite = finite_type_schedule(2, 3)
        made = emit_schedule(SurfaceSignature.compact(2, 4))
        report = validate_schedule(made)
    assert finite.count(PAIR_OF_PANTS_BRIDGE) == 3 and finite.count(HANDLE_PAIR) == 2
    sig = finite.final_signature
    assert (sig.genus, sig.ends) == (2, 4)
    assert report.passed
    assert all(stage.tall and stage.thickness_ok and stage.containment_ok for stage in report.stages)


@pytest.mark.slow
def test_criterion_12_minimal_not_minimizing():
    h0 = 0.9 * PI
    with Timer(600.0):
        constrained, free, rep = minexist_scenario(h0, 0.2, 0.2)
    print(rep.to_json())
    assert abs(rep.curve_height - h0) <= 1e-9
    assert rep.violations == 0
    assert rep.area_drop > 0 or rep.free_escaped
