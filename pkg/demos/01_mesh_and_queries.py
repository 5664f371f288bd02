"""Load the bundled liver model and poke at the geometry layer.

Walks through mesh I/O, the spatial index, and the two queries everything
else is built on: closest surface point and inside/outside.
"""

import numpy as np

from palpsim import build_bvh, closest_point, is_inside, load_mesh_file, save_obj
from palpsim.gateway.cli import bundled_asset_path
from palpsim.geometry import is_watertight, load_mesh

mesh = load_mesh_file(bundled_asset_path("liver.obj"), mesh_id="liver")
print(f"liver model: {mesh.vertex_count} vertices, {mesh.triangle_count} triangles")
print(f"watertight: {is_watertight(mesh)}")
extents = mesh.rest_positions.max(axis=0) - mesh.rest_positions.min(axis=0)
print(f"extents: {extents[0]:.1f} x {extents[1]:.1f} x {extents[2]:.1f} mm")

bvh = build_bvh(mesh)
print(f"\nspatial index: {bvh.node_count()} nodes, leaf size {bvh.leaf_size}")

apex = mesh.rest_positions[np.argmax(mesh.rest_positions[:, 2])]
probe = apex + np.array([1.0, -2.0, 6.0])
sp, dist = closest_point(bvh, mesh, probe)
print(f"\nprobe {np.round(probe, 1)} mm:")
print(f"  closest surface point {np.round(sp.position, 2)} on triangle {sp.triangle_id}")
print(f"  distance {dist:.3f} mm, inside: {is_inside(bvh, mesh, probe)}")

pressed = apex - np.array([0.0, 0.0, 2.0])
sp2, depth = closest_point(bvh, mesh, pressed)
print(f"\nprobe pressed 2 mm under the apex:")
print(f"  penetration depth {depth:.3f} mm, inside: {is_inside(bvh, mesh, pressed)}")

text = save_obj(mesh)
again = load_mesh(text, "obj")
print(f"\nOBJ round trip: {again.vertex_count} vertices, "
      f"byte-stable: {save_obj(again) == text}")
