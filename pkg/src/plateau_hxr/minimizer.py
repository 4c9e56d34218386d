"""Area descent for triangle meshes in H^2 x R.

Each step moves the free vertices along a Sobolev-smoothed negative area
gradient: the covector gradient is scaled by the inverse square root of the
ambient metric at each vertex and then smoothed by the cotangent Laplacian of
the current surface (taken in its induced metric). A backtracking line search
enforces an Armijo decrease and rejects steps that flip or collapse triangles.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from .errors import MeshTangleError, NonConvergenceError, ValidationError
from .intersect import self_intersections
from .mesh import (DEGENERATE_AREA, SurfaceMesh, area_and_gradient, collapse_short_edges,
                   equiangulate, triangle_areas)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    step: float = 1.0
    tol_grad: float = 1e-6
    max_iters: int = 2000
    refine_levels: int = 0
    armijo: float = 1e-4
    mass_shift: float = 1e-3
    tangle_every: int = 50
    tangle_sample: int = 400
    normal_only: bool = True
    tangential: float = 1.0
    max_move: float = 0.5
    remesh_every: int = 5
    collapse_ratio: float = 0.1
    seed: int = 0

    def __post_init__(self):
        for name in ("step", "tol_grad", "max_iters", "armijo", "mass_shift"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"solver setting {name} must be positive")
        if self.refine_levels < 0:
            raise ValidationError("refine_levels must be non-negative")

    def with_(self, **changes) -> "SolverConfig":
        return replace(self, **changes)


def _inverse_sqrt_metric(V):
    """Per-vertex G^{-1/2} (N, 3, 3); only the radial horizontal direction is stretched."""
    X = V[:, :2]
    r2 = (X * X).sum(1)
    stretch = np.sqrt(1.0 + r2) - 1.0
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = np.where(r2[:, None] > 0, X / np.sqrt(np.where(r2 > 0, r2, 1.0))[:, None], 0.0)
    S = np.zeros((len(V), 3, 3))
    S[:, 0, 0] = S[:, 1, 1] = S[:, 2, 2] = 1.0
    S[:, :2, :2] += stretch[:, None, None] * unit[:, :, None] * unit[:, None, :]
    return S


def induced_stiffness(V, F, mass_shift: float):
    """Cotangent Laplacian in the induced metric plus a lumped mass shift."""
    p = [V[F[:, k]] for k in range(3)]
    m = (p[0] + p[1] + p[2]) / 3.0
    X = m[:, :2]
    w = 1.0 / (1.0 + (X * X).sum(1))

    def dot(a, b):
        return (a * b).sum(1) - w * (a[:, :2] * X).sum(1) * (b[:, :2] * X).sum(1)

    areas = triangle_areas(V, F)
    two_a = np.maximum(2.0 * areas, 1e-300)
    rows, cols, vals = [], [], []
    for k in range(3):
        i, j, l = F[:, k], F[:, (k + 1) % 3], F[:, (k + 2) % 3]
        cot = dot(p[(k + 1) % 3] - p[k], p[(k + 2) % 3] - p[k]) / two_a
        # angle at corner k is opposite edge (j, l)
        c = 0.5 * np.clip(cot, -1e3, 1e3)
        rows += [j, l, j, l]
        cols += [l, j, j, l]
        vals += [-c, -c, c, c]
    n = len(V)
    K = sparse.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(n, n)).tocsr()
    lumped = np.bincount(F.ravel(), weights=np.repeat(areas / 3.0, 3), minlength=n)
    return K + sparse.diags(mass_shift * lumped + 1e-12)


def vertex_normals(V, F):
    """Area-weighted chart normals (covectors) and the matching metric normal vectors."""
    fn = _normals(V, F)
    n_cov = np.zeros_like(V)
    for k in range(3):
        np.add.at(n_cov, F[:, k], fn)
    X = V[:, :2]
    # G^{-1} raises the index; G^{-1} = I + X X^T on the horizontal block
    n_vec = n_cov.copy()
    n_vec[:, :2] += X * (X * n_cov[:, :2]).sum(1)[:, None]
    scale = np.sqrt(np.maximum((n_cov * n_vec).sum(1), 1e-300))
    return n_cov / scale[:, None], n_vec / scale[:, None]


def normal_part(V, F, grad):
    """Component of a gradient covector along the unit surface normals."""
    n_cov, n_vec = vertex_normals(V, F)
    return (grad * n_vec).sum(1)[:, None] * n_cov


def descent_direction(V, F, fixed, grad, mass_shift: float, normal_only: bool = True):
    """Negative Sobolev gradient on free vertices (zero on fixed ones).

    With ``normal_only`` the gradient covector and the resulting step are
    restricted to the surface normal, which removes the tangential drift of
    vertices along the surface.
    """
    free = np.flatnonzero(~fixed)
    S = _inverse_sqrt_metric(V)
    if normal_only:
        n_cov, n_vec = vertex_normals(V, F)
        grad = (grad * n_vec).sum(1)[:, None] * n_cov
    g = np.einsum("nij,nj->ni", S, grad)
    P = induced_stiffness(V, F, mass_shift)[free][:, free].tocsc()
    try:
        lu = splu(P)
        y = lu.solve(g[free])
    except RuntimeError:
        y = g[free] / P.diagonal()[:, None]
    d = np.zeros_like(V)
    d[free] = -np.einsum("nij,nj->ni", S[free], y)
    if not np.all(np.isfinite(d)):
        d = np.zeros_like(V)
        d[free] = -grad[free]
    if normal_only:
        d = (d * n_cov).sum(1)[:, None] * n_vec
    return d


def _normals(V, F):
    return np.cross(V[F[:, 1]] - V[F[:, 0]], V[F[:, 2]] - V[F[:, 0]])


def _acceptable(V_old, V_new, F, n_old):
    n_new = _normals(V_new, F)
    if np.any((n_old * n_new).sum(1) <= 0):
        return False
    return bool(np.all(triangle_areas(V_new, F) > DEGENERATE_AREA))


def gradient_norm(grad, direction) -> float:
    """Dual Sobolev norm sqrt(g . P^{-1} g) of the area gradient."""
    return math.sqrt(max(0.0, -float((grad * direction).sum())))


def tangle_check(mesh: SurfaceMesh, sample: int | None = None, rng=None, eps: float = 0.0):
    """Raise MeshTangleError if (a sample of) triangles hit non-adjacent ones."""
    idx = None
    if sample is not None and sample < mesh.n_faces:
        rng = np.random.default_rng(0) if rng is None else rng
        idx = rng.choice(mesh.n_faces, size=sample, replace=False)
    pairs = self_intersections(mesh.vertices, mesh.faces, eps=eps, sample=idx)
    if len(pairs):
        raise MeshTangleError(f"mesh self-intersection in {len(pairs)} triangle pairs",
                              pairs=[tuple(map(int, p)) for p in pairs[:20]])


def _edge_list(F):
    e = np.concatenate([F[:, [0, 1]], F[:, [1, 2]], F[:, [2, 0]]])
    return np.unique(np.sort(e, axis=1), axis=0)


def tangential_smoothing(V, F, fixed, edges):
    """Tangential part of a weighted umbrella displacement.

    Edge weights are the ratio of metric to chart length, so the rest state
    has roughly equal metric edge lengths rather than equal chart lengths.
    """
    a, b = edges[:, 0], edges[:, 1]
    e = V[b] - V[a]
    X = 0.5 * (V[a, :2] + V[b, :2])
    chart2 = np.maximum((e * e).sum(1), 1e-300)
    metric2 = chart2 - (e[:, :2] * X).sum(1) ** 2 / (1.0 + (X * X).sum(1))
    w = np.sqrt(np.maximum(metric2, 0.0) / chart2)
    n = len(V)
    acc = np.zeros_like(V)
    wsum = np.zeros(n)
    np.add.at(acc, a, w[:, None] * e)
    np.add.at(acc, b, -w[:, None] * e)
    np.add.at(wsum, a, w)
    np.add.at(wsum, b, w)
    disp = acc / np.maximum(wsum, 1e-300)[:, None]
    n_cov, n_vec = vertex_normals(V, F)
    disp -= (disp * n_cov).sum(1)[:, None] * n_vec
    disp[fixed] = 0.0
    return disp


def _metric_norms(V, vec):
    X = V[:, :2]
    sq = (vec * vec).sum(1) - (vec[:, :2] * X).sum(1) ** 2 / (1.0 + (X * X).sum(1))
    return np.sqrt(np.maximum(sq, 0.0))


def local_scale(V, edges):
    """Shortest incident metric edge length at each vertex."""
    a, b = edges[:, 0], edges[:, 1]
    mid = 0.5 * (V[a] + V[b])
    length = _metric_norms(mid, V[b] - V[a])
    scale = np.full(len(V), np.inf)
    np.minimum.at(scale, a, length)
    np.minimum.at(scale, b, length)
    return scale


def _line_search(V, F, fixed, area, grad, d, slope, alpha, n_old, cfg, constraint, smooth,
                 scale=None, max_move=None):
    """Backtracking search; returns (trial vertices, step) or (None, step)."""
    if scale is not None:
        # no vertex may travel more than max_move of its shortest edge
        ratio = float(np.max(_metric_norms(V, d) / scale))
        if ratio * alpha > max_move:
            alpha = max_move / ratio
    free = np.nonzero(~fixed)[0]

    def passes(trial, step_slope):
        if not _acceptable(V, trial, F, n_old):
            return False
        new_area = float(triangle_areas(trial, F).sum())
        return new_area <= area + cfg.armijo * alpha * min(step_slope, 0.0) and new_area <= area

    while alpha > 1e-12:
        trial = V + alpha * d
        if smooth is not None:
            trial += min(alpha, 1.0) * cfg.tangential * smooth
        # the constraint is costly: only consult it for steps that already pass unconstrained
        if passes(trial, slope):
            if constraint is None:
                return trial, alpha
            blocked = free[~np.asarray(constraint(trial[free]), bool)]
            if len(blocked) == 0:
                return trial, alpha
            trial[blocked] = V[blocked]
            if passes(trial, float((grad * (trial - V)).sum()) / alpha):
                return trial, alpha
        alpha *= 0.5
    return None, alpha


def minimize(mesh: SurfaceMesh, cfg: SolverConfig | None = None, constraint=None,
             raise_on_failure: bool = True) -> SurfaceMesh:
    """Descend the discrete area from ``mesh`` until the gradient norm is small.

    ``constraint(points) -> bool mask`` marks admissible vertex positions; free
    vertices whose trial position is inadmissible stay where they are.
    The gradient norm is reported relative to sqrt(area).
    """
    cfg = cfg or SolverConfig()
    mesh.validate()
    rng = np.random.default_rng(cfg.seed)
    V = mesh.vertices.copy()
    F = mesh.faces.copy()
    fixed = mesh.fixed.copy()
    origin = np.arange(len(V))
    edges = _edge_list(F)
    area, grad = area_and_gradient(V, F)
    history = [area]
    alpha = cfg.step
    gnorm = math.inf
    blocked = 0
    converged = False
    remeshes = 0
    remesh_growth = 0.0
    transient = 0
    it = 0

    def remesh(V, F, fixed, origin):
        V, F, fixed, kept = collapse_short_edges(V, F, fixed, cfg.collapse_ratio)
        F, flipped = equiangulate(V, F)
        return V, F, fixed, origin[kept], len(kept) < len(origin) or flipped > 0

    for it in range(1, cfg.max_iters + 1):
        d = descent_direction(V, F, fixed, grad, cfg.mass_shift, cfg.normal_only)
        gnorm = gradient_norm(grad, d) / math.sqrt(area)
        if gnorm <= cfg.tol_grad:
            converged = True
            break
        n_old = _normals(V, F)
        slope = float((grad * d).sum())
        smooth = tangential_smoothing(V, F, fixed, edges) if cfg.tangential > 0 else None
        scale = local_scale(V, edges)
        alpha = min(alpha * 2.0, 4.0 * cfg.step)
        trial, alpha = _line_search(V, F, fixed, area, grad, d, slope, alpha, n_old, cfg,
                                    constraint, smooth, scale, cfg.max_move)
        if trial is None and smooth is not None:
            trial, alpha = _line_search(V, F, fixed, area, grad, d, slope, cfg.step, n_old, cfg,
                                        constraint, None, scale, cfg.max_move)
        changed = False
        F_prev = F
        if trial is None:
            alpha = cfg.step
            if cfg.remesh_every:
                V, F, fixed, origin, changed = remesh(V, F, fixed, origin)
            if not changed:
                if constraint is not None:
                    blocked += 1
                    converged = True
                break
        else:
            V = trial
            if cfg.remesh_every and it % cfg.remesh_every == 0:
                V, F, fixed, origin, changed = remesh(V, F, fixed, origin)
        if changed:
            remeshes += 1
            edges = _edge_list(F)
            before = float(triangle_areas(trial, F_prev).sum()) if trial is not None else area
        area, grad = area_and_gradient(V, F)
        if changed:
            remesh_growth += max(0.0, area - before)
        history.append(area)
        if cfg.tangle_every and it % cfg.tangle_every == 0 and len(self_intersections(V, F)):
            # folds may open up again; only the final mesh must be embedded
            transient += 1
            log.debug("transient self-intersection at iteration %d", it)
    meta = {k: (np.asarray(v)[origin] if isinstance(v, np.ndarray) and len(v) == mesh.n_vertices else v)
            for k, v in mesh.meta.items()}
    out = SurfaceMesh(V, F, fixed, mesh.boundary_rho, meta)
    out.meta.update({"iterations": it, "grad_norm": gnorm, "area": area,
                     "area_history": history, "converged": converged,
                     "constraint_stalled": bool(blocked), "remeshes": remeshes,
                     "remesh_area_growth": remesh_growth,
                     "transient_tangles": transient,
                     "source_vertex": origin})
    tangle_check(out, None if out.n_faces <= 20000 else cfg.tangle_sample, rng)
    if not converged and raise_on_failure:
        raise NonConvergenceError(
            f"area descent stopped after {it} iterations with gradient norm {gnorm:.3g}", best=out)
    return out


def minimize_multilevel(mesh: SurfaceMesh, cfg: SolverConfig | None = None, constraint=None,
                        raise_on_failure: bool = True) -> SurfaceMesh:
    """Solve, then refine and re-solve ``cfg.refine_levels`` times."""
    cfg = cfg or SolverConfig()
    out = minimize(mesh, cfg, constraint, raise_on_failure)
    levels = [out.meta["area"]]
    for _ in range(cfg.refine_levels):
        out = minimize(out.refine(), cfg, constraint, raise_on_failure)
        levels.append(out.meta["area"])
    out.meta["level_areas"] = levels
    return out
