"""Bounding volume hierarchy for closest-point and inside/outside queries.

Queries run against either the rest or the current vertex set, chosen at
build time. Results are bit-identical to a brute-force scan over all
triangles: traversal never prunes a box closer than or equal to the current
best, and ties in squared distance resolve to the lowest triangle id.

Inside/outside is decided by the sign of the offset vector against the
angle-weighted pseudo-normal of the closest surface feature (face, edge,
or vertex), which is robust for points closest to edges and corners.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mesh import DeformableMesh, angle_weighted_vertex_normals, face_normals_and_areas

# feature codes for the closest point on a triangle
FEAT_FACE = 0
FEAT_VERT_A, FEAT_VERT_B, FEAT_VERT_C = 1, 2, 3
FEAT_EDGE_AB, FEAT_EDGE_AC, FEAT_EDGE_BC = 4, 5, 6

_EDGE_CORNERS = {FEAT_EDGE_AB: (0, 1), FEAT_EDGE_AC: (0, 2), FEAT_EDGE_BC: (1, 2)}
_VERT_CORNERS = {FEAT_VERT_A: 0, FEAT_VERT_B: 1, FEAT_VERT_C: 2}


@dataclass
class SurfacePoint:
    position: np.ndarray        # (3,) mm
    triangle_id: int
    barycentric: np.ndarray     # (3,) weights, sum to 1
    pseudo_normal: np.ndarray   # (3,) unit, outward


def closest_points_on_triangles(a: np.ndarray, b: np.ndarray, c: np.ndarray, p: np.ndarray):
    """Closest point to ``p`` on each triangle (a[i], b[i], c[i]).

    Vectorized Voronoi-region walk. Returns (points (M,3), barycentric
    (M,3), feature codes (M,)). Barycentric weights are exact zeros on
    edge and vertex features so callers can trust the feature code.
    """
    ab = b - a
    ac = c - a
    abab = np.einsum("ij,ij->i", ab, ab)
    abac = np.einsum("ij,ij->i", ab, ac)
    acac = np.einsum("ij,ij->i", ac, ac)
    return _kernel(a, ab, ac, abab, abac, acac, np.asarray(p, dtype=np.float64))


def _kernel(a, ab, ac, abab, abac, acac, p):
    """Region-classified closest point; precomputed edge dot products."""
    ap = p - a
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    d3 = d1 - abab
    d4 = d2 - abac
    d5 = d1 - abac
    d6 = d2 - acac

    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2

    m = len(a)
    bary_v = np.zeros(m)
    bary_w = np.zeros(m)
    feature = np.full(m, FEAT_FACE, dtype=np.int8)
    remaining = np.ones(m, dtype=bool)

    # vertex A: v = w = 0
    r = remaining & (d1 <= 0.0) & (d2 <= 0.0)
    feature[r] = FEAT_VERT_A
    remaining &= ~r
    # vertex B: v = 1, w = 0
    r = remaining & (d3 >= 0.0) & (d4 <= d3)
    bary_v[r] = 1.0
    feature[r] = FEAT_VERT_B
    remaining &= ~r
    # edge AB
    r = remaining & (vc <= 0.0) & (d1 >= 0.0) & (d3 <= 0.0)
    if r.any():
        denom = np.where(r, d1 - d3, 1.0)
        denom[denom == 0.0] = 1.0
        bary_v[r] = (d1 / denom)[r]
        feature[r] = FEAT_EDGE_AB
        remaining &= ~r
    # vertex C: w = 1
    r = remaining & (d6 >= 0.0) & (d5 <= d6)
    bary_w[r] = 1.0
    feature[r] = FEAT_VERT_C
    remaining &= ~r
    # edge AC
    r = remaining & (vb <= 0.0) & (d2 >= 0.0) & (d6 <= 0.0)
    if r.any():
        denom = np.where(r, d2 - d6, 1.0)
        denom[denom == 0.0] = 1.0
        bary_w[r] = (d2 / denom)[r]
        feature[r] = FEAT_EDGE_AC
        remaining &= ~r
    # edge BC
    r = remaining & (va <= 0.0) & (d4 - d3 >= 0.0) & (d5 - d6 >= 0.0)
    if r.any():
        num = d4 - d3
        denom = np.where(r, num + (d5 - d6), 1.0)
        denom[denom == 0.0] = 1.0
        w = (num / denom)
        bary_w[r] = w[r]
        bary_v[r] = 1.0 - w[r]
        feature[r] = FEAT_EDGE_BC
        remaining &= ~r
    # interior
    if remaining.any():
        denom = np.where(remaining, va + vb + vc, 1.0)
        denom[denom == 0.0] = 1.0
        bary_v[remaining] = (vb / denom)[remaining]
        bary_w[remaining] = (vc / denom)[remaining]

    points = a + bary_v[:, None] * ab + bary_w[:, None] * ac
    bary = np.column_stack([1.0 - bary_v - bary_w, bary_v, bary_w])
    return points, bary, feature


@dataclass
class Bvh:
    leaf_size: int
    triangles: np.ndarray          # (M, 3) vertex ids, original order
    tri_order: np.ndarray          # (M,) original id of the i-th stored triangle
    # triangle data gathered in tri_order so leaves are contiguous slices
    corner_a: np.ndarray
    edge_ab: np.ndarray
    edge_ac: np.ndarray
    dot_abab: np.ndarray
    dot_abac: np.ndarray
    dot_acac: np.ndarray
    node_bounds: np.ndarray        # (K, 2, 3) min/max
    node_children: np.ndarray      # (K, 2) child ids, -1 -1 for leaves
    node_range: np.ndarray         # (K, 2) start/count into tri_order (leaves)
    leaf_lo: np.ndarray            # (L, 3) leaf boxes, dense
    leaf_hi: np.ndarray            # (L, 3)
    row_leaf: np.ndarray           # (M,) dense leaf index of each stored row
    max_edge_length: float         # longest triangle edge, bounds bulk searches
    face_normals: np.ndarray       # (M, 3) unit, original order
    vertex_pseudo_normals: np.ndarray
    edge_pseudo_normals: dict[tuple[int, int], np.ndarray]
    # plain-python mirrors of the node arrays for the traversal hot loop
    _flat: dict = field(default_factory=dict, repr=False)

    def node_count(self) -> int:
        return len(self.node_bounds)

    def leaf_triangle_ids(self) -> list[np.ndarray]:
        out = []
        for k in range(self.node_count()):
            if self.node_children[k, 0] < 0:
                s, n = self.node_range[k]
                out.append(self.tri_order[s:s + n])
        return out


def build_bvh(mesh: DeformableMesh, use_rest: bool = True, leaf_size: int = 4) -> Bvh:
    """Build the hierarchy by median split along the widest centroid axis."""
    positions = mesh.rest_positions if use_rest else mesh.current_positions
    tris = mesh.triangles
    m = len(tris)
    corners = positions[tris]                       # (M, 3, 3)
    tri_min = corners.min(axis=1)
    tri_max = corners.max(axis=1)
    centroids = corners.mean(axis=1)

    order = np.arange(m)
    bounds_list: list[tuple[np.ndarray, np.ndarray]] = [(tri_min.min(axis=0), tri_max.max(axis=0))]
    children_list: list[list[int]] = [[-1, -1]]
    range_list: list[list[int]] = [[0, m]]

    stack = [(0, 0, m)]
    while stack:
        node, start, count = stack.pop()
        idx = order[start:start + count]
        lo = tri_min[idx].min(axis=0)
        hi = tri_max[idx].max(axis=0)
        bounds_list[node] = (lo, hi)
        if count <= leaf_size:
            children_list[node] = [-1, -1]
            range_list[node] = [start, count]
            continue
        cent = centroids[idx]
        spread = cent.max(axis=0) - cent.min(axis=0)
        axis = int(np.argmax(spread))
        half = count // 2
        # argpartition gives a median split without a full sort
        part = np.argpartition(cent[:, axis], half)
        order[start:start + count] = idx[part]

        left = len(bounds_list)
        right = left + 1
        for _ in range(2):
            bounds_list.append((lo, hi))
            children_list.append([-1, -1])
            range_list.append([0, 0])
        children_list[node] = [left, right]
        range_list[node] = [start, count]
        stack.append((left, start, half))
        stack.append((right, start + half, count - half))

    face_n, _ = face_normals_and_areas(positions, tris)
    vert_n, _ = angle_weighted_vertex_normals(positions, tris)

    edge_accum: dict[tuple[int, int], np.ndarray] = {}
    for fi, (a, b, c) in enumerate(tris):
        for u, v in ((a, b), (b, c), (c, a)):
            key = (u, v) if u < v else (v, u)
            if key in edge_accum:
                edge_accum[key] = edge_accum[key] + face_n[fi]
            else:
                edge_accum[key] = face_n[fi].copy()
    edge_n: dict[tuple[int, int], np.ndarray] = {}
    for key, vec in edge_accum.items():
        n = np.linalg.norm(vec)
        edge_n[key] = vec / n if n > 0 else np.array([0.0, 0.0, 1.0])

    a = np.ascontiguousarray(corners[order, 0])
    b = np.ascontiguousarray(corners[order, 1])
    c = np.ascontiguousarray(corners[order, 2])
    ab = b - a
    ac = c - a
    node_bounds = np.stack([np.stack(pair) for pair in bounds_list])
    node_children = np.asarray(children_list, dtype=np.int64)
    node_range = np.asarray(range_list, dtype=np.int64)

    # dense per-leaf boxes and a row -> leaf map for the vectorized filter
    leaf_nodes = np.where(node_children[:, 0] < 0)[0]
    leaf_lo = node_bounds[leaf_nodes, 0]
    leaf_hi = node_bounds[leaf_nodes, 1]
    row_leaf = np.empty(m, dtype=np.int64)
    for li, node in enumerate(leaf_nodes):
        s, n = node_range[node]
        row_leaf[s:s + n] = li

    dot_abab = np.einsum("ij,ij->i", ab, ab)
    dot_acac = np.einsum("ij,ij->i", ac, ac)
    bc = ac - ab
    max_edge = float(np.sqrt(max(
        dot_abab.max(), dot_acac.max(), np.einsum("ij,ij->i", bc, bc).max())))
    bvh = Bvh(
        leaf_size=leaf_size,
        triangles=tris,
        tri_order=order,
        corner_a=a,
        edge_ab=ab,
        edge_ac=ac,
        dot_abab=dot_abab,
        dot_abac=np.einsum("ij,ij->i", ab, ac),
        dot_acac=dot_acac,
        node_bounds=node_bounds,
        node_children=node_children,
        node_range=node_range,
        leaf_lo=leaf_lo,
        leaf_hi=leaf_hi,
        row_leaf=row_leaf,
        max_edge_length=max_edge,
        face_normals=face_n,
        vertex_pseudo_normals=vert_n,
        edge_pseudo_normals=edge_n,
    )
    bvh._flat = {
        "lo": node_bounds[:, 0, :].tolist(),
        "hi": node_bounds[:, 1, :].tolist(),
        "children": bvh.node_children.tolist(),
        "range": bvh.node_range.tolist(),
    }
    return bvh


def _pseudo_normal_for(bvh: Bvh, tri_id: int, feature: int) -> np.ndarray:
    if feature == FEAT_FACE:
        return bvh.face_normals[tri_id]
    tri = bvh.triangles[tri_id]
    if feature in _VERT_CORNERS:
        return bvh.vertex_pseudo_normals[tri[_VERT_CORNERS[feature]]]
    i, j = _EDGE_CORNERS[feature]
    u, v = int(tri[i]), int(tri[j])
    key = (u, v) if u < v else (v, u)
    return bvh.edge_pseudo_normals[key]


def _evaluate_rows(bvh: Bvh, rows: np.ndarray, p: np.ndarray):
    """Best (d2, original tri id, point, bary, feature) over stored rows."""
    pts, bary, feat = _kernel(
        bvh.corner_a[rows], bvh.edge_ab[rows], bvh.edge_ac[rows],
        bvh.dot_abab[rows], bvh.dot_abac[rows], bvh.dot_acac[rows], p)
    diff = pts - p
    d2 = np.einsum("ij,ij->i", diff, diff)
    dmin = d2.min()
    ties = np.where(d2 == dmin)[0]
    ids = bvh.tri_order[rows[ties]]
    pick = int(ties[np.argmin(ids)])
    tid = int(bvh.tri_order[rows[pick]])
    return float(dmin), tid, pts[pick], bary[pick], int(feat[pick])


def _box_d2(lo, hi, px, py, pz):
    dx = lo[0] - px if px < lo[0] else (px - hi[0] if px > hi[0] else 0.0)
    dy = lo[1] - py if py < lo[1] else (py - hi[1] if py > hi[1] else 0.0)
    dz = lo[2] - pz if pz < lo[2] else (pz - hi[2] if pz > hi[2] else 0.0)
    return dx * dx + dy * dy + dz * dz


def closest_point(bvh: Bvh, mesh: DeformableMesh, p) -> tuple[SurfacePoint, float]:
    """Closest surface point to ``p``; ties broken toward the lowest triangle id.

    The ``mesh`` argument is accepted for symmetry with the rest of the query
    API; the hierarchy already carries the vertex data it was built from.

    Two phases: descend greedily to one nearby leaf and bound the answer by
    its corner distances, then keep every triangle whose leaf box could
    still contain a closer (or equally close) point and resolve those in a
    single vectorized pass.
    """
    del mesh
    p = np.asarray(p, dtype=np.float64)
    px, py, pz = float(p[0]), float(p[1]), float(p[2])
    flat = bvh._flat
    lo_all, hi_all = flat["lo"], flat["hi"]
    children, ranges = flat["children"], flat["range"]

    # phase 1: greedy descent; corner distances of that leaf bound the answer
    node = 0
    while True:
        left, right = children[node]
        if left < 0:
            break
        dl = _box_d2(lo_all[left], hi_all[left], px, py, pz)
        dr = _box_d2(lo_all[right], hi_all[right], px, py, pz)
        node = left if dl <= dr else right
    start, count = ranges[node]
    sl = slice(start, start + count)
    ca = bvh.corner_a[sl]
    da = ca - p
    db = da + bvh.edge_ab[sl]
    dc = da + bvh.edge_ac[sl]
    bound = min(
        np.einsum("ij,ij->i", da, da).min(),
        np.einsum("ij,ij->i", db, db).min(),
        np.einsum("ij,ij->i", dc, dc).min(),
    )

    # phase 2: vectorized filter over all leaf boxes (ties included)
    d = np.maximum(np.maximum(bvh.leaf_lo - p, p - bvh.leaf_hi), 0.0)
    leaf_d2 = np.einsum("ij,ij->i", d, d)
    rows = np.nonzero(leaf_d2[bvh.row_leaf] <= bound)[0]
    d2, tid, pt, bc, feat = _evaluate_rows(bvh, rows, p)
    sp = SurfacePoint(
        position=pt,
        triangle_id=tid,
        barycentric=bc,
        pseudo_normal=_pseudo_normal_for(bvh, tid, feat),
    )
    return sp, float(np.sqrt(d2))


def closest_point_brute(bvh: Bvh, p) -> tuple[SurfacePoint, float]:
    """Reference scan over every triangle; used to validate traversal pruning."""
    p = np.asarray(p, dtype=np.float64)
    d2, tid, pt, bc, feat = _evaluate_rows(bvh, np.arange(len(bvh.tri_order)), p)
    sp = SurfacePoint(pt, tid, bc, _pseudo_normal_for(bvh, tid, feat))
    return sp, float(np.sqrt(d2))


def min_distances(bvh: Bvh, points: np.ndarray) -> np.ndarray:
    """Distance from each query point to the surface, in bulk.

    The nearest triangle corner (via KD-tree) bounds the answer; every
    triangle owning a corner within that bound plus one triangle diameter is
    a candidate, and all candidates for all points resolve in one kernel
    call. Distances match :func:`closest_point` to float precision.
    """
    from scipy.spatial import cKDTree

    points = np.asarray(points, dtype=np.float64)
    m = len(bvh.tri_order)
    corners = np.concatenate([
        bvh.corner_a,
        bvh.corner_a + bvh.edge_ab,
        bvh.corner_a + bvh.edge_ac,
    ])
    tree = cKDTree(corners)
    bound, _ = tree.query(points)
    # a triangle can be closer than its corners by at most its own diameter
    radius = bound + bvh.max_edge_length + 1e-9
    neighborhoods = tree.query_ball_point(points, radius)

    rows_per_point = [np.unique(np.asarray(lst, dtype=np.int64) % m) for lst in neighborhoods]
    counts = np.array([len(r) for r in rows_per_point])
    all_rows = np.concatenate(rows_per_point)
    all_p = np.repeat(points, counts, axis=0)

    pts, _, _ = _kernel(
        bvh.corner_a[all_rows], bvh.edge_ab[all_rows], bvh.edge_ac[all_rows],
        bvh.dot_abab[all_rows], bvh.dot_abac[all_rows], bvh.dot_acac[all_rows], all_p)
    diff = pts - all_p
    d2 = np.einsum("ij,ij->i", diff, diff)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    return np.sqrt(np.minimum.reduceat(d2, starts))


def is_inside(bvh: Bvh, mesh: DeformableMesh, p) -> bool:
    """True when ``p`` lies inside the closed surface (surface points count as inside).

    Only meaningful for watertight meshes; callers validate watertightness
    at scenario load.
    """
    p = np.asarray(p, dtype=np.float64)
    sp, _ = closest_point(bvh, mesh, p)
    return bool(np.dot(p - sp.position, sp.pseudo_normal) <= 0.0)
