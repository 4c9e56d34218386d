import math

import numpy as np
import pytest

from plateau_hxr.errors import MeshTangleError, NonConvergenceError, ValidationError
from plateau_hxr.hyperbolic import disk_area, gans_from_polar
from plateau_hxr.intersect import VerticalRayIndex, mesh_pair_intersections, triangles_intersect
from plateau_hxr.mesh import (SurfaceMesh, area_and_gradient, cylinder_mesh, disk_mesh, grid_faces, merge,
                              triangle_areas)
from plateau_hxr.minimizer import SolverConfig, minimize, minimize_multilevel, tangle_check


def _bumpy_disk(rho=1.0, levels=2, seed=0):
    mesh = disk_mesh(rho, 0.0, sectors=8)
    for _ in range(levels):
        mesh = mesh.refine()
    rng = np.random.default_rng(seed)
    V = mesh.vertices.copy()
    V[~mesh.fixed, 2] += rng.uniform(-0.2, 0.2, (~mesh.fixed).sum())
    return mesh.with_vertices(V)


def test_gradient_matches_finite_differences():
    mesh = _bumpy_disk()
    V, F = mesh.vertices, mesh.faces
    _, grad = area_and_gradient(V, F)
    rng = np.random.default_rng(1)
    for _ in range(5):
        i, k = int(rng.integers(len(V))), int(rng.integers(3))
        h = 1e-6
        Vp, Vm = V.copy(), V.copy()
        Vp[i, k] += h
        Vm[i, k] -= h
        fd = (triangle_areas(Vp, F).sum() - triangle_areas(Vm, F).sum()) / (2 * h)
        assert grad[i, k] == pytest.approx(fd, rel=1e-5, abs=1e-9)


def test_small_flat_triangle_has_euclidean_area_near_origin():
    V = np.array([[0, 0, 0], [1e-4, 0, 0], [0, 1e-4, 0.0]])
    assert triangle_areas(V, np.array([[0, 1, 2]]))[0] == pytest.approx(0.5e-8, rel=1e-4)


def test_vertical_strip_area_is_length_times_height():
    # a vertical rectangle over a radial segment: area = hyperbolic length * height
    rho = np.linspace(0.0, 2.0, 200)
    X = gans_from_polar(rho, np.zeros_like(rho))
    V = np.vstack([np.column_stack([X, np.zeros(len(rho))]), np.column_stack([X, np.ones(len(rho))])])
    F = grid_faces(1, len(rho) - 1)
    # centroid-metric quadrature is second order in the edge length
    assert triangle_areas(V, F).sum() == pytest.approx(2.0, rel=1e-5)


def test_signatures():
    disk = disk_mesh(1.0)
    assert disk.signature().chi == 1 and disk.signature().boundary_count == 1
    cyl = cylinder_mesh(1.0, 0.0, 1.0)
    sig = cyl.signature()
    assert (sig.chi, sig.boundary_count, sig.genus) == (0, 2, (0,))
    both = merge(disk, cyl)
    assert both.signature().components == 2


def test_refine_keeps_boundary_on_cylinder():
    mesh = disk_mesh(2.0, sectors=6).refine().refine()
    rho, _, _ = mesh.polar()
    assert np.allclose(rho[mesh.fixed], 2.0)
    assert mesh.signature().chi == 1


def test_save_load_round_trip(tmp_path):
    mesh = _bumpy_disk()
    mesh.save(tmp_path / "m.mesh")
    back = SurfaceMesh.load(tmp_path / "m.mesh")
    assert np.array_equal(back.faces, mesh.faces) and np.allclose(back.vertices, mesh.vertices)
    assert np.array_equal(back.fixed, mesh.fixed)


def test_bad_faces_rejected():
    with pytest.raises(ValidationError):
        SurfaceMesh(np.zeros((3, 3)), np.array([[0, 1, 5]]), np.zeros(3, bool))


def test_minimize_flattens_a_bumpy_disk():
    rho = 1.0
    out = minimize(_bumpy_disk(rho, 2), SolverConfig(max_iters=3000))
    assert out.meta["converged"]
    assert np.abs(out.vertices[:, 2]).max() < 1e-3
    assert out.meta["area"] == pytest.approx(disk_area(rho), rel=0.03)


def test_multilevel_disk_area_converges_to_closed_form():
    rho = 2.0
    out = minimize_multilevel(disk_mesh(rho, sectors=12), SolverConfig(refine_levels=3))
    assert out.meta["area"] == pytest.approx(disk_area(rho), rel=0.01)


def test_nonconvergence_raises_with_best_mesh():
    with pytest.raises(NonConvergenceError) as info:
        minimize(_bumpy_disk(), SolverConfig(max_iters=1))
    assert info.value.best is not None


def test_constraint_is_respected():
    mesh = _bumpy_disk(seed=2)
    V = mesh.vertices.copy()
    V[~mesh.fixed, 2] = np.abs(V[~mesh.fixed, 2]) + 0.05
    mesh = mesh.with_vertices(V)
    floor = 0.03
    out = minimize(mesh, SolverConfig(max_iters=500), constraint=lambda P: P[:, 2] >= floor,
                   raise_on_failure=False)
    assert np.all(out.vertices[~out.fixed, 2] >= floor)
    assert out.meta["area"] < mesh.area()


def test_triangle_intersection_predicate():
    a = np.array([[[0, 0, 0], [1, 0, 0], [0, 1, 0.0]]])
    b = np.array([[[0.2, 0.2, -1], [0.2, 0.2, 1], [0.3, 0.25, 1.0]]])
    c = b + np.array([0, 0, 5.0])
    assert triangles_intersect(a, b)[0] and not triangles_intersect(a, c)[0]


def test_tangle_check_flags_crossing_sheets():
    d1 = disk_mesh(1.0, 0.0, 8)
    V = d1.vertices.copy()
    V[0, 2] = 1.0
    d2 = disk_mesh(1.0, 0.5, 8)
    both = merge(d1.with_vertices(V), d2)
    assert len(mesh_pair_intersections(V, d1.faces, d2.vertices, d2.faces)) > 0
    with pytest.raises(MeshTangleError):
        tangle_check(both)


def test_vertical_ray_index_parity():
    disk = disk_mesh(1.0, 0.0, 12).refine()
    idx = VerticalRayIndex(disk.vertices, disk.faces)
    P = np.array([[0.1, 0.1, -1.0], [0.1, 0.1, 1.0], [5.0, 5.0, -1.0]])
    assert idx.crossings(P).tolist() == [1, 0, 0]
