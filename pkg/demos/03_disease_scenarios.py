"""Build every disease scenario and inspect what palpation would feel.

Each preset transforms the base mesh (enlargement, surface nodularity) and
plants lesions with their own stiffness. Sampling the stiffness field along
a line through a lesion shows the smooth blend a trainee's instrument
renders as changing resistance.
"""

import numpy as np

from palpsim import ScenarioKind, load_mesh_file, make_scenario, stiffness_at
from palpsim.gateway.cli import bundled_asset_path

mesh = load_mesh_file(bundled_asset_path("liver.obj"), mesh_id="liver")
span = (mesh.rest_positions.max(axis=0) - mesh.rest_positions.min(axis=0)).max()
print(f"base liver span: {span / 10:.1f} cm\n")

for kind in ScenarioKind:
    tissue, shaped = make_scenario(kind, mesh, seed=7)
    new_span = (shaped.rest_positions.max(axis=0) - shaped.rest_positions.min(axis=0)).max()
    lesions = tissue.lesions
    ks = sorted({round(l.material.stiffness_k, 3) for l in lesions})
    print(f"{kind.value:>12}: scale x{tissue.mesh_scale:.3f} "
          f"(span {new_span / 10:.1f} cm), base k {tissue.base.stiffness_k:.2f} N/mm, "
          f"tenderness {tissue.base.tenderness:.1f}, "
          f"{len(lesions)} lesions{' k=' + str(ks) if ks else ''}")

print("\nstiffness profile through a cirrhosis nodule:")
tissue, shaped = make_scenario(ScenarioKind.CIRRHOSIS, mesh, seed=7)
nodule = tissue.lesions[0]
center = np.asarray(nodule.center)
direction = np.array([1.0, 0.0, 0.0])
for offset in np.linspace(-3 * nodule.falloff_sigma - nodule.radius,
                          3 * nodule.falloff_sigma + nodule.radius, 13):
    p = center + offset * direction
    k = stiffness_at(tissue, p).stiffness_k
    bar = "#" * int(40 * k / (5.5 * tissue.base.stiffness_k))
    print(f"  {offset:+7.1f} mm  k = {k:5.2f} N/mm  {bar}")
