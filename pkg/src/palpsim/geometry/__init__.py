"""Mesh representation, I/O, decimation, and spatial queries."""

from .bvh import (
    Bvh,
    SurfacePoint,
    build_bvh,
    closest_point,
    closest_point_brute,
    closest_points_on_triangles,
    is_inside,
)
from .decimate import DecimationResult, decimate, sampled_hausdorff
from .mesh import (
    DeformableMesh,
    angle_weighted_vertex_normals,
    face_normals_and_areas,
    is_watertight,
    load_mesh,
    load_mesh_file,
    recompute_normals,
    require_watertight,
    save_obj,
    save_obj_file,
    triangle_vertices,
)

__all__ = [
    "Bvh",
    "SurfacePoint",
    "build_bvh",
    "closest_point",
    "closest_point_brute",
    "closest_points_on_triangles",
    "is_inside",
    "DecimationResult",
    "decimate",
    "sampled_hausdorff",
    "DeformableMesh",
    "angle_weighted_vertex_normals",
    "face_normals_and_areas",
    "is_watertight",
    "load_mesh",
    "load_mesh_file",
    "recompute_normals",
    "require_watertight",
    "save_obj",
    "save_obj_file",
    "triangle_vertices",
]
