"""Mesh loading, saving, normals, and watertightness."""

import numpy as np
import pytest

from palpsim.errors import MeshLoadError
from palpsim.geometry import (
    is_watertight,
    load_mesh,
    recompute_normals,
    save_obj,
)
from palpsim.geometry.shapes import box, icosphere, tetrahedron, uv_sphere

TETRA_OBJ = """\
v 1 1 1
v 1 -1 -1
v -1 1 -1
v -1 -1 1
f 1 3 2
f 1 2 4
f 1 4 3
f 2 3 4
"""

ICOSAHEDRON_X3D_TEMPLATE = """\
<X3D version="3.2">
  <Scene>
    <Shape>
      <IndexedTriangleSet index="{index}">
        <Coordinate point="{points}"/>
      </IndexedTriangleSet>
    </Shape>
  </Scene>
</X3D>
"""


def icosahedron_x3d() -> str:
    mesh = icosphere(0)
    points = " ".join(f"{v:.9g}" for v in mesh.rest_positions.ravel())
    index = " ".join(str(i) for i in mesh.triangles.ravel())
    return ICOSAHEDRON_X3D_TEMPLATE.format(index=index, points=points)


class TestLoadObj:
    def test_tetrahedron_counts(self):
        mesh = load_mesh(TETRA_OBJ.encode(), "obj")
        assert mesh.vertex_count == 4
        assert mesh.triangle_count == 4
        assert np.array_equal(mesh.rest_positions, mesh.current_positions)

    def test_out_of_range_index(self):
        bad = TETRA_OBJ + "f 1 2 9\n"
        with pytest.raises(MeshLoadError, match="out of range"):
            load_mesh(bad.encode(), "obj")

    def test_malformed_coordinate_names_line(self):
        bad = "v 0 0 zero\nv 1 0 0\nv 0 1 0\nf 1 2 3\n"
        with pytest.raises(MeshLoadError, match="line 1"):
            load_mesh(bad.encode(), "obj")

    def test_quad_face_rejected(self):
        bad = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n"
        with pytest.raises(MeshLoadError, match="exactly 3"):
            load_mesh(bad.encode(), "obj")

    def test_degenerate_triangle_rejected(self):
        bad = "v 0 0 0\nv 1 0 0\nv 2 0 0\nf 1 2 3\n"
        with pytest.raises(MeshLoadError, match="degenerate"):
            load_mesh(bad.encode(), "obj")

    def test_ignores_other_records(self):
        text = "# comment\nvn 0 0 1\no thing\n" + TETRA_OBJ
        mesh = load_mesh(text.encode(), "obj")
        assert mesh.triangle_count == 4


class TestLoadX3d:
    def test_unit_icosahedron(self):
        mesh = load_mesh(icosahedron_x3d().encode(), "x3d-triangleset")
        assert mesh.vertex_count == 12
        assert mesh.triangle_count == 20
        lengths = np.linalg.norm(mesh.normals(), axis=1)
        assert np.abs(lengths - 1.0).max() < 1e-9

    def test_missing_index_attribute(self):
        text = '<IndexedTriangleSet><Coordinate point="0 0 0 1 0 0 0 1 0"/></IndexedTriangleSet>'
        with pytest.raises(MeshLoadError, match="index"):
            load_mesh(text, "x3d-triangleset")

    def test_index_out_of_range(self):
        text = '<IndexedTriangleSet index="0 1 5"><Coordinate point="0 0 0 1 0 0 0 1 0"/></IndexedTriangleSet>'
        with pytest.raises(MeshLoadError, match="out of range"):
            load_mesh(text, "x3d-triangleset")

    def test_no_triangleset_element(self):
        with pytest.raises(MeshLoadError, match="IndexedTriangleSet"):
            load_mesh("<X3D><Scene/></X3D>", "x3d-triangleset")


class TestObjRoundTrip:
    def test_round_trip_is_exact(self):
        mesh = icosphere(2, radius=37.5)
        text1 = save_obj(mesh)
        mesh2 = load_mesh(text1, "obj")
        text2 = save_obj(mesh2)
        assert text1 == text2
        assert np.array_equal(mesh.triangles, mesh2.triangles)

    def test_round_trip_random_coordinates(self):
        rng = np.random.default_rng(3)
        mesh = tetrahedron()
        mesh.rest_positions = rng.uniform(-100, 100, size=(4, 3))
        mesh.current_positions[:] = mesh.rest_positions
        text1 = save_obj(mesh)
        text2 = save_obj(load_mesh(text1, "obj"))
        assert text1 == text2


class TestNormals:
    def test_flat_fan_shares_face_normal(self):
        # fan of coplanar triangles around a hub in the z=0 plane
        hub = np.array([0.0, 0.0, 0.0])
        ring = [np.array([np.cos(t), np.sin(t), 0.0]) for t in np.linspace(0, np.pi, 5)]
        pos = np.array([hub] + ring)
        tris = np.array([[0, i, i + 1] for i in range(1, 5)])
        from palpsim.geometry import DeformableMesh
        mesh = DeformableMesh(pos, pos.copy(), tris)
        recompute_normals(mesh)
        assert np.allclose(mesh.vertex_normals[0], [0, 0, 1], atol=1e-12)

    def test_cube_corner_diagonal(self):
        mesh = box()
        recompute_normals(mesh)
        for vid, p in enumerate(mesh.rest_positions):
            expected = np.sign(p) / np.sqrt(3.0)
            assert np.allclose(mesh.vertex_normals[vid], expected, atol=1e-9)

    def test_sphere_normals_near_radial(self):
        # ~3k-triangle sphere: vertex normals within 2 degrees of radial
        mesh = uv_sphere(radius=50.0, rings=39, segments=40)  # 2*40*38 = 3040
        recompute_normals(mesh)
        radial = mesh.rest_positions / np.linalg.norm(mesh.rest_positions, axis=1)[:, None]
        cos = np.einsum("ij,ij->i", mesh.vertex_normals, radial)
        worst_deg = np.degrees(np.arccos(np.clip(cos.min(), -1, 1)))
        assert worst_deg < 2.0

    def test_isolated_vertex_flagged(self):
        from palpsim.geometry import DeformableMesh
        pos = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [5, 5, 5]], dtype=float)
        tris = np.array([[0, 1, 2]])
        mesh = DeformableMesh(pos, pos.copy(), tris)
        isolated = recompute_normals(mesh)
        assert isolated == [3]
        assert np.allclose(mesh.vertex_normals[3], [0, 0, 1])


class TestWatertight:
    def test_closed_shapes(self):
        assert is_watertight(tetrahedron())
        assert is_watertight(box())
        assert is_watertight(icosphere(2))
        assert is_watertight(uv_sphere(rings=7, segments=9))

    def test_open_fan_is_not(self):
        from palpsim.geometry import DeformableMesh
        pos = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=float)
        mesh = DeformableMesh(pos, pos.copy(), np.array([[0, 1, 2]]))
        assert not is_watertight(mesh)
