"""Triangle-triangle intersection predicates and mesh proximity queries.

Tests run in the solver chart (Euclidean coordinates): whether two triangles
meet is a topological fact and does not depend on the metric. Separation is
decided with the separating axis theorem over the 11 candidate axes of a
triangle pair; ``eps`` thickens every triangle by that amount along each axis.
"""
from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

_AXIS_TINY = 1e-14
_NUDGE = np.array([3.1e-11 * np.sqrt(2.0), 1.7e-11 * np.sqrt(3.0), 0.0])


def _project(tri, axes):
    # tri (P, 3, 3), axes (P, 3) -> min/max of projections (P,)
    proj = np.einsum("pkj,pj->pk", tri, axes)
    return proj.min(axis=1), proj.max(axis=1)


def triangles_intersect(tri_a, tri_b, eps: float = 0.0) -> np.ndarray:
    """Vectorised SAT test; tri_a, tri_b have shape (P, 3, 3). True = touching."""
    tri_a = np.asarray(tri_a, float).reshape(-1, 3, 3)
    tri_b = np.asarray(tri_b, float).reshape(-1, 3, 3)
    ea = np.roll(tri_a, -1, axis=1) - tri_a
    eb = np.roll(tri_b, -1, axis=1) - tri_b
    axes = [np.cross(ea[:, 0], ea[:, 1]), np.cross(eb[:, 0], eb[:, 1])]
    for i in range(3):
        for j in range(3):
            axes.append(np.cross(ea[:, i], eb[:, j]))
    # coplanar pairs need in-plane edge normals
    na = axes[0]
    for i in range(3):
        axes.append(np.cross(na, ea[:, i]))
        axes.append(np.cross(na, eb[:, i]))
    hit = np.ones(len(tri_a), bool)
    for ax in axes:
        norm = np.linalg.norm(ax, axis=1)
        ok = norm > _AXIS_TINY * (1.0 + np.abs(tri_a).max(axis=(1, 2))) ** 2
        unit = np.where(ok[:, None], ax / np.where(ok, norm, 1.0)[:, None], 0.0)
        lo_a, hi_a = _project(tri_a, unit)
        lo_b, hi_b = _project(tri_b, unit)
        separated = ok & ((hi_a + eps < lo_b - eps) | (hi_b + eps < lo_a - eps))
        hit &= ~separated
    return hit


def _bounding_radius(tris):
    c = tris.mean(axis=1)
    return c, np.linalg.norm(tris - c[:, None, :], axis=2).max(axis=1)


def candidate_pairs(tris_a, tris_b, eps: float = 0.0):
    """Pairs (i, j) whose bounding spheres overlap."""
    ca, ra = _bounding_radius(tris_a)
    cb, rb = _bounding_radius(tris_b)
    if len(ca) == 0 or len(cb) == 0:
        return np.zeros((0, 2), np.int64)
    # bucket by radius so that a few large triangles do not widen every query
    level = np.floor(np.log2(np.maximum(rb, 1e-300))).astype(np.int64)
    chunks = []
    for lv in np.unique(level):
        members = np.nonzero(level == lv)[0]
        tree = cKDTree(cb[members])
        lists = tree.query_ball_point(ca, ra + rb[members].max() + 2.0 * eps)
        counts = np.fromiter((len(js) for js in lists), np.int64, len(lists))
        if counts.sum() == 0:
            continue
        left = np.repeat(np.arange(len(ca)), counts)
        right = members[np.concatenate([np.asarray(js, np.int64) for js in lists if js])]
        chunks.append(np.column_stack([left, right]))
    if not chunks:
        return np.zeros((0, 2), np.int64)
    pairs = np.concatenate(chunks)
    d = np.linalg.norm(ca[pairs[:, 0]] - cb[pairs[:, 1]], axis=1)
    keep = d <= ra[pairs[:, 0]] + rb[pairs[:, 1]] + 2.0 * eps
    pairs = pairs[keep]
    lo_a, hi_a = tris_a.min(axis=1) - eps, tris_a.max(axis=1) + eps
    lo_b, hi_b = tris_b.min(axis=1) - eps, tris_b.max(axis=1) + eps
    boxes = ((lo_a[pairs[:, 0]] <= hi_b[pairs[:, 1]]) & (lo_b[pairs[:, 1]] <= hi_a[pairs[:, 0]])).all(axis=1)
    return pairs[boxes]


def mesh_pair_intersections(vertices_a, faces_a, vertices_b, faces_b, eps: float = 0.0):
    """Index pairs of intersecting triangles between two meshes."""
    ta = np.asarray(vertices_a, float)[np.asarray(faces_a)]
    tb = np.asarray(vertices_b, float)[np.asarray(faces_b)]
    pairs = candidate_pairs(ta, tb, eps)
    if len(pairs) == 0:
        return pairs
    hit = triangles_intersect(ta[pairs[:, 0]], tb[pairs[:, 1]], eps)
    return pairs[hit]


def self_intersections(vertices, faces, eps: float = 0.0, sample=None):
    """Intersecting pairs of non-adjacent triangles within one mesh.

    ``sample`` restricts the left-hand triangles to the given indices (spot check).
    """
    vertices = np.asarray(vertices, float)
    faces = np.asarray(faces, np.int64)
    tris = vertices[faces]
    left = np.arange(len(faces)) if sample is None else np.asarray(sample, np.int64)
    pairs = candidate_pairs(tris[left], tris, eps)
    if len(pairs) == 0:
        return pairs
    pairs[:, 0] = left[pairs[:, 0]]
    pairs = pairs[pairs[:, 0] < pairs[:, 1]] if sample is None else pairs[pairs[:, 0] != pairs[:, 1]]
    fa, fb = faces[pairs[:, 0]], faces[pairs[:, 1]]
    shared = (fa[:, :, None] == fb[:, None, :]).any(axis=(1, 2))
    pairs = pairs[~shared]
    if len(pairs) == 0:
        return pairs
    hit = triangles_intersect(tris[pairs[:, 0]], tris[pairs[:, 1]], eps)
    return pairs[hit]


def min_separation(points_a, points_b) -> float:
    """Smallest Euclidean chart distance between two point clouds."""
    tree = cKDTree(np.asarray(points_b, float))
    d, _ = tree.query(np.asarray(points_a, float))
    return float(d.min())


def segment_triangle_hits(origins, directions, tris):
    """Moller-Trumbore parameters for rays vs triangles (broadcast pairs).

    Returns the ray parameter s (nan where no hit with s > 0).
    """
    e1 = tris[..., 1, :] - tris[..., 0, :]
    e2 = tris[..., 2, :] - tris[..., 0, :]
    p = np.cross(directions, e2)
    det = np.einsum("...j,...j->...", e1, p)
    ok = np.abs(det) > 1e-18
    inv = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    tvec = origins - tris[..., 0, :]
    u = np.einsum("...j,...j->...", tvec, p) * inv
    q = np.cross(tvec, e1)
    v = np.einsum("...j,...j->...", directions, q) * inv
    s = np.einsum("...j,...j->...", e2, q) * inv
    hit = ok & (u >= 0) & (v >= 0) & (u + v <= 1) & (s > 0)
    return np.where(hit, s, np.nan)


class VerticalRayIndex:
    """Reusable index answering how often upward vertical rays cross a mesh.

    Triangles are grouped by footprint size; each group is hashed into a
    uniform grid whose cell matches the group's size, so every triangle
    touches at most nine cells and a query reads one cell per group.
    """

    def __init__(self, vertices, faces):
        self.tris = np.asarray(vertices, float)[np.asarray(faces, np.int64)]
        lo = self.tris[:, :, :2].min(axis=1)
        hi = self.tris[:, :, :2].max(axis=1)
        self.box = np.hstack([lo, hi])
        size = np.maximum((hi - lo).max(axis=1), 1e-12)
        level = np.floor(np.log2(size)).astype(np.int64)
        self.grids = []
        for lv in np.unique(level):
            members = np.nonzero(level == lv)[0]
            cell = 2.0 ** lv
            ilo = np.floor(lo[members] / cell).astype(np.int64)
            ihi = np.floor(hi[members] / cell).astype(np.int64)
            keys, owners = [], []
            for dx in (0, 1, 2):
                for dy in (0, 1, 2):
                    ok = (ilo[:, 0] + dx <= ihi[:, 0]) & (ilo[:, 1] + dy <= ihi[:, 1])
                    keys.append(_cell_key(ilo[ok, 0] + dx, ilo[ok, 1] + dy))
                    owners.append(members[ok])
            keys = np.concatenate(keys)
            owners = np.concatenate(owners)
            order = np.argsort(keys, kind="stable")
            keys, owners = keys[order], owners[order]
            ukeys, starts = np.unique(keys, return_index=True)
            ends = np.append(starts[1:], len(keys))
            self.grids.append((cell, ukeys, starts, ends, owners))

    def _pairs(self, points):
        owner_parts, tri_parts = [], []
        for cell, ukeys, starts, ends, owners in self.grids:
            idx = np.floor(points[:, :2] / cell).astype(np.int64)
            key = _cell_key(idx[:, 0], idx[:, 1])
            pos = np.minimum(np.searchsorted(ukeys, key), len(ukeys) - 1)
            hit = np.nonzero(ukeys[pos] == key)[0]
            if len(hit) == 0:
                continue
            s, e = starts[pos[hit]], ends[pos[hit]]
            counts = e - s
            owner = np.repeat(hit, counts)
            offset = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
            owner_parts.append(owner)
            tri_parts.append(owners[np.repeat(s, counts) + offset])
        if not owner_parts:
            return np.zeros(0, np.int64), np.zeros(0, np.int64)
        return np.concatenate(owner_parts), np.concatenate(tri_parts)

    def crossings(self, points) -> np.ndarray:
        points = np.asarray(points, float).reshape(-1, 3)
        counts = np.zeros(len(points), np.int64)
        if not self.grids or len(points) == 0:
            return counts
        owner, js = self._pairs(points)
        box = self.box[js]
        q = points[owner]
        near = ((q[:, 0] >= box[:, 0]) & (q[:, 0] <= box[:, 2]) & (q[:, 1] >= box[:, 1]) & (q[:, 1] <= box[:, 3]))
        owner, js = owner[near], js[near]
        if len(owner) == 0:
            return counts
        t = self.tris[js]
        # symbolic-perturbation stand-in: nudge off shared edges and vertices
        p = points[owner] + _NUDGE
        a, b, c = t[:, 0, :2], t[:, 1, :2], t[:, 2, :2]
        det = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (c[:, 0] - a[:, 0]) * (b[:, 1] - a[:, 1])
        good = np.abs(det) > 1e-300
        det = np.where(good, det, 1.0)
        l1 = ((b[:, 0] - p[:, 0]) * (c[:, 1] - p[:, 1]) - (c[:, 0] - p[:, 0]) * (b[:, 1] - p[:, 1])) / det
        l2 = ((c[:, 0] - p[:, 0]) * (a[:, 1] - p[:, 1]) - (a[:, 0] - p[:, 0]) * (c[:, 1] - p[:, 1])) / det
        l3 = 1.0 - l1 - l2
        inside = good & (l1 > 0) & (l2 > 0) & (l3 > 0)
        zc = l1 * t[:, 0, 2] + l2 * t[:, 1, 2] + l3 * t[:, 2, 2]
        np.add.at(counts, owner, (inside & (zc > p[:, 2])).astype(np.int64))
        return counts


def _cell_key(ix, iy):
    return (ix + (1 << 30)) * (1 << 31) + (iy + (1 << 30))


def vertical_crossings(points, vertices, faces) -> np.ndarray:
    """Number of mesh triangles crossed by the upward vertical ray from each point."""
    return VerticalRayIndex(vertices, faces).crossings(points)
