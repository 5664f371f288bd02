"""Mesh simplification by iterative edge collapse with quadric error metrics.

Collapses are ordered by the classic plane-distance quadric cost, with the
replacement vertex solved from the accumulated quadric when it is well
conditioned and otherwise chosen from the edge endpoints and midpoint.
Collapses that would flip a face normal, create a zero-area triangle, or
break the local manifold structure are rejected; non-manifold and boundary
edges are frozen. If the target cannot be reached without degeneracy the
best achievable mesh is returned with ``reached_target`` cleared.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .mesh import DeformableMesh, face_normals_and_areas, recompute_normals

_AREA_EPS = 1e-12
_NORMAL_FLIP_DOT = 1e-3


@dataclass
class DecimationResult:
    mesh: DeformableMesh
    reached_target: bool
    triangles_before: int
    triangles_after: int


def _face_quadrics(positions: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    normals, areas = face_normals_and_areas(positions, triangles)
    d = -np.einsum("ij,ij->i", normals, positions[triangles[:, 0]])
    planes = np.concatenate([normals, d[:, None]], axis=1)      # (M, 4)
    quadrics = planes[:, :, None] * planes[:, None, :]          # (M, 4, 4)
    return quadrics * areas[:, None, None]


def _batched_costs(quadrics: np.ndarray, positions: np.ndarray,
                   us: np.ndarray, vs: np.ndarray):
    """Collapse cost and replacement position for each edge (us[i], vs[i]).

    Solves the quadric system where well conditioned, otherwise picks the
    cheapest of the two endpoints and the midpoint.
    """
    q = quadrics[us] + quadrics[vs]                  # (E, 4, 4)
    a = q[:, :3, :3]
    b = -q[:, :3, 3]
    det = np.linalg.det(a)
    scale = np.abs(a).reshape(len(q), -1).max(axis=1)
    solvable = np.abs(det) > 1e-9 * np.maximum(scale, 1e-30) ** 3

    pbar = np.empty((len(q), 3))
    if solvable.any():
        pbar[solvable] = np.linalg.solve(a[solvable], b[solvable][..., None])[..., 0]
    fallback = np.nonzero(~solvable)[0]
    if fallback.size:
        pu = positions[us[fallback]]
        pv = positions[vs[fallback]]
        cands = np.stack([pu, pv, 0.5 * (pu + pv)], axis=1)          # (k, 3 cand, 3)
        h = np.concatenate([cands, np.ones((len(fallback), 3, 1))], axis=2)
        costs = np.einsum("kci,kij,kcj->kc", h, q[fallback], h)
        pick = costs.argmin(axis=1)
        pbar[fallback] = cands[np.arange(len(fallback)), pick]

    h = np.concatenate([pbar, np.ones((len(q), 1))], axis=1)
    cost = np.einsum("ki,kij,kj->k", h, q, h)
    return cost, pbar


def decimate(mesh: DeformableMesh, target_triangles: int) -> DecimationResult:
    """Reduce the mesh to at most ``target_triangles`` triangles."""
    if target_triangles < 4:
        raise ValueError("target_triangles must be at least 4")

    before = mesh.triangle_count
    if before <= target_triangles:
        out = mesh.copy()
        out.reset_current()
        return DecimationResult(out, True, before, before)

    positions = mesh.rest_positions.copy()
    faces = [list(t) for t in mesh.triangles]
    alive_face = [True] * len(faces)
    vertex_faces: list[set[int]] = [set() for _ in range(len(positions))]
    for fi, (a, b, c) in enumerate(faces):
        vertex_faces[a].add(fi)
        vertex_faces[b].add(fi)
        vertex_faces[c].add(fi)

    quadrics = np.zeros((len(positions), 4, 4))
    face_q = _face_quadrics(positions, mesh.triangles)
    for fi, (a, b, c) in enumerate(faces):
        quadrics[a] += face_q[fi]
        quadrics[b] += face_q[fi]
        quadrics[c] += face_q[fi]

    version = [0] * len(positions)
    alive_vertex = [True] * len(positions)
    heap: list[tuple[float, int, int, int, int, tuple]] = []

    def push_edges(pairs: list[tuple[int, int]]) -> None:
        if not pairs:
            return
        us = np.fromiter((p[0] for p in pairs), dtype=np.int64, count=len(pairs))
        vs = np.fromiter((p[1] for p in pairs), dtype=np.int64, count=len(pairs))
        costs, pbars = _batched_costs(quadrics, positions, us, vs)
        for k, (u, v) in enumerate(pairs):
            heapq.heappush(
                heap, (costs[k], u, v, version[u], version[v], tuple(pbars[k])))

    initial_edges: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    for a, b, c in faces:
        for u, v in ((a, b), (b, c), (c, a)):
            key = (u, v) if u < v else (v, u)
            if key not in seen:
                seen.add(key)
                initial_edges.append(key)
    push_edges(initial_edges)
    del seen, initial_edges

    tri_count = before

    def ring(u: int) -> set[int]:
        out: set[int] = set()
        for fi in vertex_faces[u]:
            out.update(faces[fi])
        out.discard(u)
        return out

    while tri_count > target_triangles and heap:
        cost, u, v, vu, vv, pbar_t = heapq.heappop(heap)
        if not (alive_vertex[u] and alive_vertex[v]):
            continue
        if version[u] != vu or version[v] != vv:
            continue
        shared = vertex_faces[u] & vertex_faces[v]
        if len(shared) != 2:
            # boundary or non-manifold edge: frozen
            continue
        # link condition: collapsing may only merge the two shared faces
        if len(ring(u) & ring(v)) != 2:
            continue

        pbar = np.array(pbar_t)

        # geometric validity of every surviving incident face, batched
        affected = list((vertex_faces[u] | vertex_faces[v]) - shared)
        tri_idx = np.array([faces[fi] for fi in affected])
        old = positions[tri_idx]                                   # (F, 3, 3)
        new = old.copy()
        new[(tri_idx == u) | (tri_idx == v)] = pbar
        old_n = np.cross(old[:, 1] - old[:, 0], old[:, 2] - old[:, 0])
        new_n = np.cross(new[:, 1] - new[:, 0], new[:, 2] - new[:, 0])
        new_norm = np.linalg.norm(new_n, axis=1)
        old_norm = np.linalg.norm(old_n, axis=1)
        if (new_norm <= 2.0 * _AREA_EPS).any():
            continue
        dots = np.einsum("ij,ij->i", old_n, new_n) / (np.maximum(old_norm, 1e-300) * new_norm)
        if (dots[old_norm > 0] <= _NORMAL_FLIP_DOT).any():
            continue

        # commit: v merges into u placed at pbar
        positions[u] = pbar
        quadrics[u] = quadrics[u] + quadrics[v]
        for fi in shared:
            alive_face[fi] = False
            for w in faces[fi]:
                vertex_faces[w].discard(fi)
        tri_count -= len(shared)
        for fi in list(vertex_faces[v]):
            faces[fi] = [u if w == v else w for w in faces[fi]]
            vertex_faces[v].discard(fi)
            vertex_faces[u].add(fi)
        alive_vertex[v] = False
        version[u] += 1
        version[v] += 1
        push_edges([(u, w) if u < w else (w, u) for w in ring(u)])

    # compact surviving vertices and faces
    used = sorted({w for fi, f in enumerate(faces) if alive_face[fi] for w in f})
    remap = {old: new for new, old in enumerate(used)}
    new_pos = positions[used]
    new_tris = np.array(
        [[remap[a], remap[b], remap[c]]
         for fi, (a, b, c) in enumerate(faces) if alive_face[fi]],
        dtype=np.int64,
    )
    out = DeformableMesh(new_pos, new_pos.copy(), new_tris, id=f"{mesh.id}-decimated")
    recompute_normals(out)

    _, areas = face_normals_and_areas(out.rest_positions, out.triangles)
    assert (areas > _AREA_EPS).all(), "decimation produced a degenerate triangle"
    after = out.triangle_count
    return DecimationResult(out, after <= target_triangles, before, after)


def sampled_hausdorff(mesh_a: DeformableMesh, mesh_b: DeformableMesh,
                      samples: int = 10_000, seed: int = 0) -> float:
    """Symmetric point-sampled Hausdorff distance between two surfaces.

    Samples area-uniform points on each mesh and takes the worst closest-point
    distance to the other, in both directions.
    """
    from .bvh import build_bvh, min_distances

    rng = np.random.default_rng(seed)

    def surface_samples(mesh: DeformableMesh, n: int) -> np.ndarray:
        _, areas = face_normals_and_areas(mesh.rest_positions, mesh.triangles)
        probs = areas / areas.sum()
        tri = rng.choice(len(areas), size=n, p=probs)
        r1 = rng.random(n)
        r2 = rng.random(n)
        flip = r1 + r2 > 1.0
        r1[flip] = 1.0 - r1[flip]
        r2[flip] = 1.0 - r2[flip]
        corners = mesh.rest_positions[mesh.triangles[tri]]
        return (corners[:, 0]
                + r1[:, None] * (corners[:, 1] - corners[:, 0])
                + r2[:, None] * (corners[:, 2] - corners[:, 0]))

    worst = 0.0
    for src, dst in ((mesh_a, mesh_b), (mesh_b, mesh_a)):
        bvh = build_bvh(dst)
        pts = surface_samples(src, samples)
        worst = max(worst, float(min_distances(bvh, pts).max()))
    return worst
