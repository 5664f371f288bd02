"""Triangle mesh representation and file I/O.

Positions are millimetres throughout. A mesh keeps two copies of its
vertices: ``rest_positions`` (the undeformed tissue, used for all contact
queries) and ``current_positions`` (the visually deformed state).
"""

from __future__ import annotations

import io
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError, MeshLoadError

DEGENERATE_AREA_MM2 = 1e-12


@dataclass
class DeformableMesh:
    rest_positions: np.ndarray       # (N, 3) float64
    current_positions: np.ndarray    # (N, 3) float64
    triangles: np.ndarray            # (M, 3) int64
    vertex_normals: np.ndarray | None = None
    id: str = "mesh"
    isolated_vertices: list[int] = field(default_factory=list)

    def __post_init__(self):
        self.rest_positions = np.ascontiguousarray(self.rest_positions, dtype=np.float64)
        self.current_positions = np.ascontiguousarray(self.current_positions, dtype=np.float64)
        self.triangles = np.ascontiguousarray(self.triangles, dtype=np.int64)
        if self.rest_positions.shape != self.current_positions.shape:
            raise ValueError("rest and current positions must have identical shape")
        if self.triangles.size and self.triangles.max() >= len(self.rest_positions):
            raise ValueError("triangle index out of range")

    @property
    def vertex_count(self) -> int:
        return len(self.rest_positions)

    @property
    def triangle_count(self) -> int:
        return len(self.triangles)

    def normals(self) -> np.ndarray:
        """Vertex normals, recomputed from rest positions on first access."""
        if self.vertex_normals is None:
            recompute_normals(self)
        return self.vertex_normals

    def copy(self, mesh_id: str | None = None) -> "DeformableMesh":
        return DeformableMesh(
            rest_positions=self.rest_positions.copy(),
            current_positions=self.current_positions.copy(),
            triangles=self.triangles.copy(),
            vertex_normals=None if self.vertex_normals is None else self.vertex_normals.copy(),
            id=self.id if mesh_id is None else mesh_id,
            isolated_vertices=list(self.isolated_vertices),
        )

    def reset_current(self) -> None:
        self.current_positions[:] = self.rest_positions


def triangle_vertices(mesh: DeformableMesh, use_rest: bool = True) -> np.ndarray:
    """Gather triangle corner positions into an (M, 3, 3) array."""
    pos = mesh.rest_positions if use_rest else mesh.current_positions
    return pos[mesh.triangles]


def face_normals_and_areas(positions: np.ndarray, triangles: np.ndarray):
    """Unit face normals and face areas from a position/triangle pair."""
    v = positions[triangles]
    cross = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
    double_area = np.linalg.norm(cross, axis=1)
    areas = 0.5 * double_area
    safe = np.where(double_area > 0, double_area, 1.0)
    normals = cross / safe[:, None]
    return normals, areas


def angle_weighted_vertex_normals(positions: np.ndarray, triangles: np.ndarray):
    """Per-vertex normals weighted by the incident angle of each face corner.

    Returns (unit normals, list of vertex ids with no usable incident face);
    those vertices get a +z normal.
    """
    normals = np.zeros_like(positions)
    face_n, _ = face_normals_and_areas(positions, triangles)

    v = positions[triangles]  # (M, 3, 3)
    for corner in range(3):
        a = v[:, corner]
        b = v[:, (corner + 1) % 3]
        c = v[:, (corner + 2) % 3]
        e1 = b - a
        e2 = c - a
        n1 = np.linalg.norm(e1, axis=1)
        n2 = np.linalg.norm(e2, axis=1)
        safe = np.where((n1 > 0) & (n2 > 0), n1 * n2, 1.0)
        cosang = np.clip(np.einsum("ij,ij->i", e1, e2) / safe, -1.0, 1.0)
        angle = np.arccos(cosang)
        np.add.at(normals, triangles[:, corner], angle[:, None] * face_n)

    lengths = np.linalg.norm(normals, axis=1)
    degenerate = lengths < 1e-30
    isolated = np.where(degenerate)[0].tolist()
    normals[degenerate] = (0.0, 0.0, 1.0)
    lengths[degenerate] = 1.0
    return normals / lengths[:, None], isolated


def recompute_normals(mesh: DeformableMesh) -> list[int]:
    """Refresh vertex normals as the angle-weighted average of incident faces.

    Vertices not referenced by any triangle get a +z normal and are returned
    so callers can surface them in a validation report.
    """
    normals, isolated = angle_weighted_vertex_normals(mesh.rest_positions, mesh.triangles)
    mesh.vertex_normals = normals
    mesh.isolated_vertices = isolated
    return isolated


def edge_counts(triangles: np.ndarray) -> dict[tuple[int, int], int]:
    counts: dict[tuple[int, int], int] = {}
    for a, b, c in triangles:
        for u, v in ((a, b), (b, c), (c, a)):
            key = (u, v) if u < v else (v, u)
            counts[key] = counts.get(key, 0) + 1
    return counts


def is_watertight(mesh: DeformableMesh) -> bool:
    """True when every edge is shared by exactly two triangles."""
    if mesh.triangle_count == 0:
        return False
    return all(c == 2 for c in edge_counts(mesh.triangles).values())


def require_watertight(mesh: DeformableMesh, context: str = "scenario") -> None:
    if not is_watertight(mesh):
        raise ConfigurationError(
            f"{context}: mesh '{mesh.id}' is not watertight "
            "(an edge is not shared by exactly two triangles)"
        )


def _validate_loaded(positions: np.ndarray, triangles: np.ndarray, source: str) -> None:
    if len(positions) == 0:
        raise MeshLoadError(f"{source}: no vertices")
    if len(triangles) == 0:
        raise MeshLoadError(f"{source}: no triangles")
    _, areas = face_normals_and_areas(positions, triangles)
    bad = np.where(areas <= DEGENERATE_AREA_MM2)[0]
    if bad.size:
        raise MeshLoadError(f"{source}: degenerate (zero-area) triangle at face {bad[0]}")


def _parse_obj(text: str) -> tuple[np.ndarray, np.ndarray]:
    positions: list[list[float]] = []
    faces: list[list[int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        rec = parts[0]
        if rec == "v":
            if len(parts) < 4:
                raise MeshLoadError(f"OBJ line {lineno}: vertex needs 3 coordinates")
            try:
                positions.append([float(parts[1]), float(parts[2]), float(parts[3])])
            except ValueError as exc:
                raise MeshLoadError(f"OBJ line {lineno}: malformed coordinate ({exc})") from exc
        elif rec == "f":
            if len(parts) != 4:
                raise MeshLoadError(
                    f"OBJ line {lineno}: face must reference exactly 3 vertices, got {len(parts) - 1}"
                )
            idx = []
            for token in parts[1:]:
                head = token.split("/")[0]
                try:
                    i = int(head)
                except ValueError as exc:
                    raise MeshLoadError(f"OBJ line {lineno}: malformed face index '{token}'") from exc
                if i < 1:
                    raise MeshLoadError(f"OBJ line {lineno}: face index {i} is not 1-based")
                idx.append(i - 1)
            faces.append(idx)
        # all other record types (vn, vt, o, g, usemtl, ...) are ignored
    pos = np.asarray(positions, dtype=np.float64)
    tris = np.asarray(faces, dtype=np.int64) if faces else np.zeros((0, 3), dtype=np.int64)
    for fi, tri in enumerate(tris):
        if tri.max() >= len(pos):
            raise MeshLoadError(
                f"OBJ face {fi}: vertex index {tri.max() + 1} out of range (file has {len(pos)} vertices)"
            )
    return pos, tris


def _local_name(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _parse_x3d_triangleset(text: str) -> tuple[np.ndarray, np.ndarray]:
    """Parse the restricted X3D subset: one IndexedTriangleSet with a Coordinate child."""
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise MeshLoadError(f"X3D: XML parse failure ({exc})") from exc

    its = None
    for elem in root.iter():
        if _local_name(elem.tag) == "IndexedTriangleSet":
            its = elem
            break
    if its is None and _local_name(root.tag) == "IndexedTriangleSet":
        its = root
    if its is None:
        raise MeshLoadError("X3D: no IndexedTriangleSet element found")

    index_attr = its.get("index")
    if index_attr is None:
        raise MeshLoadError("X3D: IndexedTriangleSet is missing its 'index' attribute")
    try:
        index = [int(tok) for tok in index_attr.replace(",", " ").split()]
    except ValueError as exc:
        raise MeshLoadError(f"X3D: malformed index token in IndexedTriangleSet ({exc})") from exc
    if len(index) % 3 != 0:
        raise MeshLoadError("X3D: IndexedTriangleSet index count is not a multiple of 3")

    coord = None
    for child in its.iter():
        if _local_name(child.tag) == "Coordinate":
            coord = child
            break
    if coord is None:
        raise MeshLoadError("X3D: IndexedTriangleSet has no Coordinate child")
    point_attr = coord.get("point")
    if point_attr is None:
        raise MeshLoadError("X3D: Coordinate is missing its 'point' attribute")
    try:
        values = [float(tok) for tok in point_attr.replace(",", " ").split()]
    except ValueError as exc:
        raise MeshLoadError(f"X3D: malformed coordinate token in Coordinate ({exc})") from exc
    if len(values) % 3 != 0:
        raise MeshLoadError("X3D: Coordinate point count is not a multiple of 3")

    pos = np.asarray(values, dtype=np.float64).reshape(-1, 3)
    tris = np.asarray(index, dtype=np.int64).reshape(-1, 3)
    for fi, tri in enumerate(tris):
        if tri.min() < 0 or tri.max() >= len(pos):
            raise MeshLoadError(
                f"X3D triangle {fi}: vertex index out of range (file has {len(pos)} points)"
            )
    return pos, tris


def load_mesh(data: bytes | str, fmt: str = "obj", mesh_id: str = "mesh") -> DeformableMesh:
    """Load a triangle mesh from OBJ or the restricted X3D IndexedTriangleSet subset.

    On success rest and current positions are identical and vertex normals
    are computed. Parse failures raise :class:`MeshLoadError` naming the
    offending line or element.
    """
    text = data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data
    if fmt == "obj":
        pos, tris = _parse_obj(text)
        source = "OBJ"
    elif fmt in ("x3d", "x3d-triangleset"):
        pos, tris = _parse_x3d_triangleset(text)
        source = "X3D"
    else:
        raise MeshLoadError(f"unsupported mesh format '{fmt}'")
    _validate_loaded(pos, tris, source)
    mesh = DeformableMesh(pos, pos.copy(), tris, id=mesh_id)
    recompute_normals(mesh)
    return mesh


def load_mesh_file(path, mesh_id: str | None = None) -> DeformableMesh:
    path = str(path)
    fmt = "x3d-triangleset" if path.lower().endswith((".x3d", ".xml")) else "obj"
    with open(path, "rb") as fh:
        data = fh.read()
    return load_mesh(data, fmt, mesh_id=mesh_id or path)


def save_obj(mesh: DeformableMesh, use_rest: bool = True) -> str:
    """Serialize to OBJ text with 9-significant-digit coordinates.

    The formatting is idempotent: loading the output and saving again
    reproduces the text byte for byte.
    """
    pos = mesh.rest_positions if use_rest else mesh.current_positions
    out = io.StringIO()
    for p in pos:
        out.write(f"v {p[0]:.9g} {p[1]:.9g} {p[2]:.9g}\n")
    for t in mesh.triangles:
        out.write(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}\n")
    return out.getvalue()


def save_obj_file(mesh: DeformableMesh, path, use_rest: bool = True) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(save_obj(mesh, use_rest=use_rest))
