"""Procedural watertight meshes used by demos, tests, and asset generation."""

from __future__ import annotations

import numpy as np

from .mesh import DeformableMesh, recompute_normals


def _mesh_from(positions, triangles, mesh_id) -> DeformableMesh:
    pos = np.asarray(positions, dtype=np.float64)
    mesh = DeformableMesh(pos, pos.copy(), np.asarray(triangles, dtype=np.int64), id=mesh_id)
    recompute_normals(mesh)
    return mesh


def tetrahedron(scale: float = 1.0) -> DeformableMesh:
    p = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=np.float64) * scale
    t = [[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]]
    return _mesh_from(p, t, "tetrahedron")


def box(half_extents=(0.5, 0.5, 0.5), center=(0.0, 0.0, 0.0)) -> DeformableMesh:
    hx, hy, hz = half_extents
    cx, cy, cz = center
    corners = np.array(
        [[sx * hx + cx, sy * hy + cy, sz * hz + cz]
         for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)],
        dtype=np.float64,
    )
    # two triangles per face, outward winding
    quads = [
        (0, 1, 3, 2),  # -x
        (4, 6, 7, 5),  # +x
        (0, 4, 5, 1),  # -y
        (2, 3, 7, 6),  # +y
        (0, 2, 6, 4),  # -z
        (1, 5, 7, 3),  # +z
    ]
    tris = []
    for a, b, c, d in quads:
        tris.append([a, b, c])
        tris.append([a, c, d])
    return _mesh_from(corners, tris, "box")


def uv_sphere(radius: float = 1.0, rings: int = 16, segments: int = 32,
              center=(0.0, 0.0, 0.0)) -> DeformableMesh:
    """Latitude/longitude sphere with 2*segments*(rings-1) triangles."""
    if rings < 2 or segments < 3:
        raise ValueError("uv_sphere needs rings >= 2 and segments >= 3")
    center = np.asarray(center, dtype=np.float64)
    verts = [np.array([0.0, 0.0, radius])]
    for r in range(1, rings):
        theta = np.pi * r / rings
        for s in range(segments):
            phi = 2.0 * np.pi * s / segments
            verts.append(radius * np.array([
                np.sin(theta) * np.cos(phi),
                np.sin(theta) * np.sin(phi),
                np.cos(theta),
            ]))
    verts.append(np.array([0.0, 0.0, -radius]))
    verts = np.asarray(verts) + center

    def ring_vertex(r, s):
        return 1 + (r - 1) * segments + (s % segments)

    tris = []
    for s in range(segments):
        tris.append([0, ring_vertex(1, s), ring_vertex(1, s + 1)])
    for r in range(1, rings - 1):
        for s in range(segments):
            a = ring_vertex(r, s)
            b = ring_vertex(r, s + 1)
            c = ring_vertex(r + 1, s)
            d = ring_vertex(r + 1, s + 1)
            tris.append([a, c, b])
            tris.append([b, c, d])
    bottom = len(verts) - 1
    for s in range(segments):
        tris.append([bottom, ring_vertex(rings - 1, s + 1), ring_vertex(rings - 1, s)])
    return _mesh_from(verts, tris, "uv_sphere")


def ellipsoid(semi_axes=(1.0, 1.0, 1.0), rings: int = 16, segments: int = 32,
              center=(0.0, 0.0, 0.0)) -> DeformableMesh:
    mesh = uv_sphere(1.0, rings, segments)
    mesh.rest_positions *= np.asarray(semi_axes, dtype=np.float64)
    mesh.rest_positions += np.asarray(center, dtype=np.float64)
    mesh.current_positions[:] = mesh.rest_positions
    mesh.id = "ellipsoid"
    recompute_normals(mesh)
    return mesh


def icosphere(subdivisions: int = 3, radius: float = 1.0) -> DeformableMesh:
    """Icosahedron subdivided ``subdivisions`` times: 20 * 4^n triangles."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array([
        [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
        [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
        [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
    ], dtype=np.float64)
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [v for v in verts]
    for _ in range(subdivisions):
        midpoint_cache: dict[tuple[int, int], int] = {}

        def midpoint(a, b):
            key = (a, b) if a < b else (b, a)
            if key not in midpoint_cache:
                m = verts[a] + verts[b]
                m /= np.linalg.norm(m)
                midpoint_cache[key] = len(verts)
                verts.append(m)
            return midpoint_cache[key]

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    pos = np.asarray(verts) * radius
    return _mesh_from(pos, faces, "icosphere")


def liver_like(subdivisions: int = 4, seed: int = 20) -> DeformableMesh:
    """A smooth, asymmetric, liver-sized closed surface (~150 mm across).

    Built from an icosphere, scaled to organ proportions, with a wedge taper
    toward the left lobe and a gentle dome/flattening so palpation has
    recognisable anatomy-like landmarks. No randomness beyond the fixed
    low-frequency bumps derived from ``seed``.
    """
    mesh = icosphere(subdivisions=subdivisions, radius=1.0)
    p = mesh.rest_positions
    x, y, z = p[:, 0], p[:, 1], p[:, 2]

    # taper: right lobe (x > 0) thick, left lobe thin
    taper = 1.0 - 0.45 / (1.0 + np.exp(4.0 * (x + 0.25)))
    # dome on top, flatter visceral underside
    dome = np.where(z > 0, 1.0, 0.72)

    rng = np.random.default_rng(seed)
    freqs = rng.uniform(1.0, 2.5, size=(3, 3))
    phases = rng.uniform(0.0, 2 * np.pi, size=3)
    bump = np.zeros_like(x)
    for k in range(3):
        bump += 0.035 * np.sin(freqs[k, 0] * x + freqs[k, 1] * y + freqs[k, 2] * z + phases[k])

    radial = (1.0 + bump)
    q = np.empty_like(p)
    q[:, 0] = x * 75.0 * radial
    q[:, 1] = y * 50.0 * taper * radial
    q[:, 2] = z * 32.0 * dome * taper * radial
    mesh.rest_positions = q
    mesh.current_positions = q.copy()
    mesh.id = "liver"
    recompute_normals(mesh)
    return mesh
