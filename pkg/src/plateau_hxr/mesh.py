"""Triangle meshes in H^2 x R and their discrete area.

Vertices are stored in the chart ``X = sinh(rho) (cos theta, sin theta)``
plus the height ``z``. In that chart the base metric is

    g = I - X X^T / (1 + |X|^2),

so a triangle whose metric is frozen at its centroid ``m`` (horizontal part
only) has area ``0.5 * sqrt((|N|^2 + (m.N)^2) / (1 + |m|^2))`` where ``N`` is
the Euclidean cross product of two edges. Area and gradient use that form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from .errors import ValidationError
from .hyperbolic import gans_from_polar, polar_from_gans

DEGENERATE_AREA = 1e-14
CAP_ANGLE = math.radians(170.0)


# -- area functional ----------------------------------------------------------

def _triangle_terms(vertices, faces):
    p0, p1, p2 = (vertices[faces[:, k]] for k in range(3))
    normal = np.cross(p1 - p0, p2 - p0)
    centroid = (p0 + p1 + p2) / 3.0
    m = centroid.copy()
    m[:, 2] = 0.0
    mn = np.einsum("ij,ij->i", m, normal)
    s = np.einsum("ij,ij->i", normal, normal) + mn * mn
    q = 1.0 + np.einsum("ij,ij->i", m, m)
    return p0, p1, p2, normal, m, mn, s, q


def triangle_areas(vertices, faces) -> np.ndarray:
    """Per-triangle area under the product metric frozen at the centroid."""
    vertices = np.asarray(vertices, float)
    faces = np.asarray(faces, np.int64)
    *_, s, q = _triangle_terms(vertices, faces)
    return 0.5 * np.sqrt(s / q)


def area_and_gradient(vertices, faces):
    """Total discrete area and its gradient with respect to every coordinate."""
    vertices = np.asarray(vertices, float)
    faces = np.asarray(faces, np.int64)
    p0, p1, p2, normal, m, mn, s, q = _triangle_terms(vertices, faces)
    root = np.sqrt(np.maximum(s * q, 1e-300))
    areas = 0.5 * np.sqrt(s / q)
    # dA = ds / (4 sqrt(sq)) - sqrt(s) dq / (4 q^1.5)
    ds_coef = 0.25 / root
    v = (2.0 * normal + 2.0 * mn[:, None] * m) * ds_coef[:, None]
    g0 = np.cross(p1 - p2, v)
    g1 = np.cross(p2 - p0, v)
    g2 = np.cross(p0 - p1, v)
    dm = (2.0 * mn * ds_coef)[:, None] * normal - (0.5 * np.sqrt(s) / q ** 1.5)[:, None] * m
    dm[:, 2] = 0.0
    dm /= 3.0
    grad = np.zeros_like(vertices)
    for k, gk in enumerate((g0, g1, g2)):
        np.add.at(grad, faces[:, k], gk + dm)
    return float(areas.sum()), grad


def vertex_metric(vertices) -> np.ndarray:
    """Product metric tensor (N, 3, 3) at each vertex."""
    vertices = np.asarray(vertices, float)
    X = vertices[:, :2]
    G = np.zeros((len(vertices), 3, 3))
    G[:, 0, 0] = G[:, 1, 1] = G[:, 2, 2] = 1.0
    G[:, :2, :2] -= X[:, :, None] * X[:, None, :] / (1.0 + (X * X).sum(1))[:, None, None]
    return G


# -- mesh container -----------------------------------------------------------

@dataclass(frozen=True)
class MeshSignature:
    chi: int
    boundary_count: int
    components: int
    genus: tuple

    def to_json(self) -> dict:
        return {"chi": self.chi, "boundary_count": self.boundary_count,
                "components": self.components, "genus": list(self.genus)}


@dataclass
class SurfaceMesh:
    """Indexed triangle mesh; ``fixed`` marks boundary vertices held in place.

    ``boundary_rho`` is the radius of the truncation cylinder carrying the
    fixed boundary; refinement pushes new boundary midpoints back onto it.
    """

    vertices: np.ndarray
    faces: np.ndarray
    fixed: np.ndarray
    boundary_rho: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, float).reshape(-1, 3)
        self.faces = np.ascontiguousarray(self.faces, np.int64).reshape(-1, 3)
        self.fixed = np.asarray(self.fixed, bool).reshape(-1)
        if len(self.fixed) != len(self.vertices):
            raise ValidationError("fixed flags must match the vertex count")
        if len(self.faces) and (self.faces.min() < 0 or self.faces.max() >= len(self.vertices)):
            raise ValidationError("face index out of range")

    # -- constructors and charts --------------------------------------------
    @classmethod
    def from_polar(cls, rho, theta, z, faces, fixed, boundary_rho=None, meta=None):
        X = gans_from_polar(rho, theta)
        verts = np.column_stack([X, np.asarray(z, float)])
        return cls(verts, faces, fixed, boundary_rho, dict(meta or {}))

    def polar(self):
        """(rho, theta, z) arrays for all vertices."""
        rho, theta = polar_from_gans(self.vertices[:, :2])
        return rho, theta, self.vertices[:, 2].copy()

    def copy(self) -> "SurfaceMesh":
        return SurfaceMesh(self.vertices.copy(), self.faces.copy(), self.fixed.copy(),
                           self.boundary_rho, dict(self.meta))

    def with_vertices(self, vertices) -> "SurfaceMesh":
        return SurfaceMesh(np.array(vertices, float), self.faces, self.fixed,
                           self.boundary_rho, dict(self.meta))

    def transformed(self, iso) -> "SurfaceMesh":
        """Image under an isometry of H^2 x R."""
        return self.with_vertices(iso.on_gans(self.vertices))

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    # -- combinatorics -------------------------------------------------------
    def edges(self):
        """Unique edges (E, 2) and, per face, the index of each of its edges.

        Edge k of face f joins corners k and k+1.
        """
        f = self.faces
        half = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        key = np.sort(half, axis=1)
        uniq, inverse = np.unique(key, axis=0, return_inverse=True)
        face_edges = inverse.reshape(3, -1).T
        return uniq, face_edges

    def edge_face_counts(self):
        uniq, face_edges = self.edges()
        counts = np.bincount(face_edges.ravel(), minlength=len(uniq))
        return uniq, counts

    def boundary_edges(self) -> np.ndarray:
        uniq, counts = self.edge_face_counts()
        return uniq[counts == 1]

    def boundary_loops(self) -> list[list[int]]:
        """Boundary cycles as vertex index lists."""
        be = self.boundary_edges()
        nbrs: dict[int, list[int]] = {}
        for a, b in be:
            nbrs.setdefault(int(a), []).append(int(b))
            nbrs.setdefault(int(b), []).append(int(a))
        if any(len(v) != 2 for v in nbrs.values()):
            raise ValidationError("boundary is not a disjoint union of simple loops")
        seen: set[int] = set()
        loops = []
        for start in sorted(nbrs):
            if start in seen:
                continue
            loop = [start]
            seen.add(start)
            prev, cur = start, nbrs[start][0]
            while cur != start:
                loop.append(cur)
                seen.add(cur)
                a, b = nbrs[cur]
                prev, cur = cur, (b if a == prev else a)
            loops.append(loop)
        return loops

    def component_labels(self):
        n = self.n_vertices
        f = self.faces
        rows = np.concatenate([f[:, 0], f[:, 1], f[:, 2]])
        cols = np.concatenate([f[:, 1], f[:, 2], f[:, 0]])
        adj = sparse.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
        return connected_components(adj, directed=False)

    def euler_characteristic(self) -> int:
        uniq, _ = self.edges()
        used = np.unique(self.faces).size
        return int(used - len(uniq) + self.n_faces)

    def signature(self) -> MeshSignature:
        """chi = V - E + F, boundary loop count and genus per component."""
        ncomp, labels = self.component_labels()
        used = np.unique(self.faces)
        comps = np.unique(labels[used])
        uniq, _ = self.edges()
        loops = self.boundary_loops()
        genus = []
        for c in comps:
            vmask = labels == c
            v = int(vmask[used].sum())
            e = int(vmask[uniq[:, 0]].sum())
            fc = int(vmask[self.faces[:, 0]].sum())
            b = sum(1 for loop in loops if vmask[loop[0]])
            g2 = 2 - (v - e + fc) - b
            genus.append(g2 / 2 if g2 % 2 else g2 // 2)
        return MeshSignature(self.euler_characteristic(), len(loops), len(comps), tuple(genus))

    def validate(self, min_area: float = DEGENERATE_AREA) -> None:
        """Manifold, orientation, degeneracy and boundary-flag checks."""
        uniq, counts = self.edge_face_counts()
        if np.any(counts > 2):
            raise ValidationError("non-manifold edge shared by more than two faces")
        f = self.faces
        directed = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        _, dcount = np.unique(directed, axis=0, return_counts=True)
        if np.any(dcount > 1):
            raise ValidationError("inconsistent face orientation")
        areas = triangle_areas(self.vertices, self.faces)
        if np.any(~(areas > min_area)):
            raise ValidationError(f"degenerate triangle (min area {areas.min():.3g})")
        on_boundary = np.zeros(self.n_vertices, bool)
        on_boundary[self.boundary_edges().ravel()] = True
        if np.any(self.fixed & ~on_boundary):
            raise ValidationError("fixed vertex is not on the mesh boundary")

    # -- geometry ------------------------------------------------------------
    def area(self) -> float:
        return float(triangle_areas(self.vertices, self.faces).sum())

    def edge_lengths(self) -> np.ndarray:
        """Euclidean chart lengths of the unique edges."""
        uniq, _ = self.edges()
        return np.linalg.norm(self.vertices[uniq[:, 1]] - self.vertices[uniq[:, 0]], axis=1)

    # -- refinement ------------------------------------------------------------
    def refine(self) -> "SurfaceMesh":
        """Midpoint 1-to-4 subdivision with boundary midpoints re-projected."""
        uniq, face_edges = self.edges()
        counts = np.bincount(face_edges.ravel(), minlength=len(uniq))
        nv = self.n_vertices
        a, b = uniq[:, 0], uniq[:, 1]
        mid = 0.5 * (self.vertices[a] + self.vertices[b])
        on_rim = (counts == 1) & self.fixed[a] & self.fixed[b]
        if self.boundary_rho is not None and np.any(on_rim):
            rho_a, th_a = polar_from_gans(self.vertices[a[on_rim], :2])
            _, th_b = polar_from_gans(self.vertices[b[on_rim], :2])
            th = th_a + 0.5 * np.angle(np.exp(1j * (th_b - th_a)))
            mid[on_rim, :2] = gans_from_polar(np.full(th.shape, self.boundary_rho), th)
        verts = np.vstack([self.vertices, mid])
        fixed = np.concatenate([self.fixed, on_rim])
        e = face_edges + nv
        f = self.faces
        faces = np.concatenate([
            np.column_stack([f[:, 0], e[:, 0], e[:, 2]]),
            np.column_stack([f[:, 1], e[:, 1], e[:, 0]]),
            np.column_stack([f[:, 2], e[:, 2], e[:, 1]]),
            np.column_stack([e[:, 0], e[:, 1], e[:, 2]]),
        ])
        meta = dict(self.meta)
        meta["refine_level"] = meta.get("refine_level", 0) + 1
        return SurfaceMesh(verts, faces, fixed, self.boundary_rho, meta)

    # -- text format -----------------------------------------------------------
    def to_text(self) -> str:
        rho, theta, z = self.polar()
        lines = [f"# vertices {self.n_vertices} faces {self.n_faces}"]
        if self.boundary_rho is not None:
            lines.append(f"# boundary_rho {self.boundary_rho!r}")
        fixed_idx = np.flatnonzero(self.fixed)
        lines += [f"v {r!r} {t!r} {h!r}" for r, t, h in zip(rho.tolist(), theta.tolist(), z.tolist())]
        lines += [f"f {i} {j} {k}" for i, j, k in self.faces.tolist()]
        lines += [f"b {i}" for i in fixed_idx.tolist()]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SurfaceMesh":
        verts, faces, fixed = [], [], []
        boundary_rho = None
        for lineno, raw in enumerate(text.splitlines(), 1):
            parts = raw.split()
            if not parts:
                continue
            try:
                if parts[0] == "#":
                    if len(parts) == 3 and parts[1] == "boundary_rho":
                        boundary_rho = float(parts[2])
                elif parts[0] == "v":
                    verts.append([float(x) for x in parts[1:4]])
                elif parts[0] == "f":
                    faces.append([int(x) for x in parts[1:4]])
                elif parts[0] == "b":
                    fixed.append(int(parts[1]))
                else:
                    raise ValueError(parts[0])
            except (ValueError, IndexError) as exc:
                raise ValidationError(f"mesh line {lineno}: cannot parse {raw!r}") from exc
        verts = np.array(verts, float).reshape(-1, 3)
        flags = np.zeros(len(verts), bool)
        flags[np.array(fixed, np.int64)] = True
        return cls.from_polar(verts[:, 0], verts[:, 1], verts[:, 2], np.array(faces).reshape(-1, 3),
                              flags, boundary_rho)

    def save(self, path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path) -> "SurfaceMesh":
        return cls.from_text(Path(path).read_text())

def _metric_cos(at, p, q):
    """Cosines of the angles at ``at`` toward ``p`` and ``q`` (metric frozen at ``at``)."""
    u, v = p - at, q - at
    X = at[:, :2]
    w = 1.0 / (1.0 + (X * X).sum(1))

    def dot(a, b):
        return (a * b).sum(1) - w * (a[:, :2] * X).sum(1) * (b[:, :2] * X).sum(1)

    return dot(u, v) / np.sqrt(np.maximum(dot(u, u) * dot(v, v), 1e-300))


def _interior_quads(F):
    """(a, b, c, d, f1, f2) for interior edges: f1 = (a, b, c), f2 = (b, a, d) cyclically."""
    n_f = len(F)
    heads = np.concatenate([F[:, 0], F[:, 1], F[:, 2]])
    tails = np.concatenate([F[:, 1], F[:, 2], F[:, 0]])
    apex = np.concatenate([F[:, 2], F[:, 0], F[:, 1]])
    face = np.tile(np.arange(n_f), 3)
    n_v = int(F.max()) + 1
    key = heads * n_v + tails
    twin = tails * n_v + heads
    order = np.argsort(key)
    pos = np.searchsorted(key[order], twin)
    pos = np.minimum(pos, len(key) - 1)
    found = key[order][pos] == twin
    sel = found & (heads < tails)
    other = order[pos[sel]]
    return heads[sel], tails[sel], apex[sel], apex[other], face[sel], face[other]


def equiangulate(vertices, faces, max_passes: int = 10):
    """Flip interior edges whose opposite angles sum above pi.

    Returns the new face array and the number of flips. Flips that would
    reverse a triangle or duplicate an edge are skipped, and so are flips that
    increase the area unless they remove a cap (an angle above CAP_ANGLE).
    """
    V = np.asarray(vertices, float)
    F = np.array(faces, np.int64, copy=True)
    total = 0
    for _ in range(max_passes):
        a, b, c, d, f1, f2 = _interior_quads(F)
        ang = np.arccos(np.clip(_metric_cos(V[c], V[a], V[b]), -1, 1)) + \
            np.arccos(np.clip(_metric_cos(V[d], V[a], V[b]), -1, 1))
        old = np.cross(V[b] - V[a], V[c] - V[a]) + np.cross(V[a] - V[b], V[d] - V[b])
        new1 = np.cross(V[d] - V[a], V[c] - V[a])
        new2 = np.cross(V[c] - V[b], V[d] - V[b])
        before = triangle_areas(V, np.column_stack([a, b, c])) + triangle_areas(V, np.column_stack([b, a, d]))
        after = triangle_areas(V, np.column_stack([a, d, c])) + triangle_areas(V, np.column_stack([b, c, d]))
        # caps (an angle near pi) are always flipped; otherwise the area may not grow
        cap = np.maximum(np.arccos(np.clip(_metric_cos(V[c], V[a], V[b]), -1, 1)),
                         np.arccos(np.clip(_metric_cos(V[d], V[a], V[b]), -1, 1))) > CAP_ANGLE
        ok = (ang > math.pi + 1e-9) & ((old * new1).sum(1) > 0) & ((old * new2).sum(1) > 0)
        ok &= (after <= before) | cap
        ok &= c != d
        cand = np.flatnonzero(ok)
        if not len(cand):
            break
        cand = cand[np.argsort(-ang[cand])]
        existing = set(map(tuple, np.sort(np.concatenate([F[:, [0, 1]], F[:, [1, 2]], F[:, [2, 0]]]), axis=1).tolist()))
        touched = set()
        flips = 0
        for k in cand:
            e = (min(c[k], d[k]), max(c[k], d[k]))
            if f1[k] in touched or f2[k] in touched or e in existing:
                continue
            F[f1[k]] = (a[k], d[k], c[k])
            F[f2[k]] = (b[k], c[k], d[k])
            touched.update((f1[k], f2[k]))
            existing.add(e)
            flips += 1
        total += flips
        if not flips:
            break
    return F, total


def _metric_edge_lengths(V, a, b):
    e = V[b] - V[a]
    X = 0.5 * (V[a, :2] + V[b, :2])
    sq = (e * e).sum(1) - (e[:, :2] * X).sum(1) ** 2 / (1.0 + (X * X).sum(1))
    return np.sqrt(np.maximum(sq, 0.0))


def collapse_short_edges(vertices, faces, fixed, ratio: float = 0.1):
    """Merge the endpoints of needle edges.

    An edge is a needle when it is shorter than ``ratio`` times the longest
    edge of an adjacent triangle. One endpoint is removed and its triangles
    reattach to the other, which keeps its position (fixed endpoints are
    never removed). Collapses that break the
    link condition, flip a triangle or increase the area are skipped.
    Returns (vertices, faces, fixed, kept_vertex_indices).
    """
    V = np.array(vertices, float)
    F = np.array(faces, np.int64)
    fixed = np.asarray(fixed, bool)
    e = np.concatenate([F[:, [0, 1]], F[:, [1, 2]], F[:, [2, 0]]])
    length = _metric_edge_lengths(V, e[:, 0], e[:, 1]).reshape(3, -1).T
    longest = length.max(1)
    short = np.flatnonzero((length < ratio * longest[:, None]).ravel(order="F"))
    if not len(short):
        return V, F, fixed, np.arange(len(V))
    cand = np.sort(e[short], axis=1)
    cand_len = length.ravel(order="F")[short]
    cand, first = np.unique(cand, axis=0, return_index=True)
    cand = cand[np.argsort(cand_len[first])]
    incident = [[] for _ in range(len(V))]
    for f, tri in enumerate(F):
        for v in tri:
            incident[v].append(f)
    alive = np.ones(len(F), bool)
    merged_into = np.arange(len(V))
    locked = np.zeros(len(V), bool)
    for a, b in cand:
        if locked[a] or locked[b] or (fixed[a] and fixed[b]):
            continue
        keep, drop = (b, a) if fixed[b] else (a, b)
        target = V[keep]
        fa = [f for f in incident[a] if alive[f]]
        fb = [f for f in incident[b] if alive[f]]
        shared = [f for f in fa if f in fb]
        if not shared:
            continue
        na = {int(v) for f in fa for v in F[f]} - {a, b}
        nb = {int(v) for f in fb for v in F[f]} - {a, b}
        apexes = {int(v) for f in shared for v in F[f]} - {a, b}
        if na & nb != apexes:
            continue
        ring = [f for f in set(fa) | set(fb) if f not in shared]
        old_tris = F[ring]
        new_tris = np.where(np.isin(old_tris, [a, b]), keep, old_tris)
        W = V.copy()
        W[keep] = target
        n_old = np.cross(V[old_tris[:, 1]] - V[old_tris[:, 0]], V[old_tris[:, 2]] - V[old_tris[:, 0]])
        n_new = np.cross(W[new_tris[:, 1]] - W[new_tris[:, 0]], W[new_tris[:, 2]] - W[new_tris[:, 0]])
        if np.any((n_old * n_new).sum(1) <= 0):
            continue
        if np.any(triangle_areas(W, new_tris) <= DEGENERATE_AREA):
            continue
        before = triangle_areas(V, F[ring + shared]).sum()
        if triangle_areas(W, new_tris).sum() > before:
            continue
        V[keep] = target
        F[ring] = new_tris
        alive[shared] = False
        for f in ring:
            if f not in incident[keep]:
                incident[keep].append(f)
        merged_into[drop] = keep
        locked[list(na | nb | {a, b})] = True
    if alive.all():
        return V, F, fixed, np.arange(len(V))
    F = F[alive]
    used = np.zeros(len(V), bool)
    used[F.ravel()] = True
    kept = np.flatnonzero(used)
    remap = -np.ones(len(V), np.int64)
    remap[kept] = np.arange(len(kept))
    return V[kept], remap[F], fixed[kept], kept


def discrete_area(mesh: SurfaceMesh) -> float:
    """Sum of centroid-metric triangle areas; rejects degenerate triangles."""
    areas = triangle_areas(mesh.vertices, mesh.faces)
    if np.any(~(areas > DEGENERATE_AREA)):
        raise ValidationError("degenerate triangle in area evaluation")
    return float(areas.sum())


def merge(*meshes: SurfaceMesh) -> SurfaceMesh:
    """Disjoint union of meshes (indices shifted)."""
    verts, faces, fixed = [], [], []
    offset = 0
    for m in meshes:
        verts.append(m.vertices)
        faces.append(m.faces + offset)
        fixed.append(m.fixed)
        offset += m.n_vertices
    rho = {m.boundary_rho for m in meshes}
    return SurfaceMesh(np.vstack(verts), np.vstack(faces), np.concatenate(fixed),
                       rho.pop() if len(rho) == 1 else None)


# -- structured seeds -----------------------------------------------------------

def grid_faces(n_rows: int, n_cols: int, periodic: bool = False) -> np.ndarray:
    """Triangulate an (n_rows+1) x (n_cols+1) vertex grid, row-major indexing.

    With ``periodic`` the last column wraps to column 0 (grid has n_cols columns).
    """
    width = n_cols if periodic else n_cols + 1
    faces = []
    for i in range(n_rows):
        for j in range(n_cols):
            j1 = (j + 1) % width if periodic else j + 1
            a, b = i * width + j, i * width + j1
            c, d = (i + 1) * width + j, (i + 1) * width + j1
            if (i + j) % 2 == 0:
                faces += [[a, b, d], [a, d, c]]
            else:
                faces += [[a, b, c], [b, d, c]]
    return np.array(faces, np.int64)


def cylinder_mesh(rho: float, z_lo: float, z_hi: float, n_theta: int = 12, n_z: int = 4,
                  z_profile=None) -> SurfaceMesh:
    """Vertical cylinder of radius rho between two horizontal circles."""
    th = np.linspace(0.0, 2.0 * math.pi, n_theta, endpoint=False)
    u = np.linspace(0.0, 1.0, n_z + 1)
    z = z_lo + (z_hi - z_lo) * (u if z_profile is None else z_profile(u))
    T, Z = np.meshgrid(th, z)
    rr = np.full(T.shape, float(rho))
    fixed = np.zeros(T.shape, bool)
    fixed[0, :] = fixed[-1, :] = True
    faces = grid_faces(n_z, n_theta, periodic=True)
    return SurfaceMesh.from_polar(rr.ravel(), T.ravel(), Z.ravel(), faces, fixed.ravel(),
                                  boundary_rho=float(rho))


def disk_mesh(rho: float, z: float = 0.0, sectors: int = 6) -> SurfaceMesh:
    """Fan of triangles spanning the horizontal circle of radius rho."""
    th = np.linspace(0.0, 2.0 * math.pi, sectors, endpoint=False)
    r = np.concatenate([[0.0], np.full(sectors, rho)])
    t = np.concatenate([[0.0], th])
    faces = np.array([[0, 1 + k, 1 + (k + 1) % sectors] for k in range(sectors)])
    fixed = np.concatenate([[False], np.ones(sectors, bool)])
    return SurfaceMesh.from_polar(r, t, np.full(sectors + 1, z), faces, fixed, boundary_rho=rho)
