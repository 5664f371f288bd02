"""Press the virtual instrument into the liver and watch the force channel.

A scripted press-hold-release at the apex runs through the 1 kHz step loop;
the spring-damper reaction, the warn/fail classification bands, the visual
dent, and the trace peaks all fall out of the same frames.
"""

import numpy as np

from palpsim import HapticConfig, Simulation, TissueModel, load_mesh_file
from palpsim.gateway.cli import bundled_asset_path
from palpsim.session import ForceTrace, detect_peaks, record_step

mesh = load_mesh_file(bundled_asset_path("liver.obj"), mesh_id="liver")
config = HapticConfig()
sim = Simulation(mesh, TissueModel(), config)
print(f"fail threshold {config.fail_threshold_n} N, "
      f"warn band starts at {config.warn_fraction * config.fail_threshold_n} N")

apex_vid = int(np.argmax(mesh.rest_positions[:, 2]))
apex = mesh.rest_positions[apex_vid]
normal = mesh.normals()[apex_vid]

depths = np.concatenate([
    np.linspace(-4.0, 3.5, 500),   # approach and press to 3.5 mm
    np.full(300, 3.5),             # hold
    np.linspace(3.5, -4.0, 500),   # release
])
trace = ForceTrace()
worst = None
deepest_dent = 0.0
for depth in depths:
    frame = sim.step(apex - depth * normal)
    record_step(trace, frame)
    deepest_dent = max(deepest_dent, sim.deformation.max_displacement())
    if worst is None or frame.force_magnitude > worst.force_magnitude:
        worst = frame

print(f"\n{len(trace)} steps, peak |F| = {worst.force_magnitude:.2f} N "
      f"({worst.classification.value}) at t = {worst.t:.3f} s")
print(f"deepest visual dent: {deepest_dent:.2f} mm "
      f"(residual after release: {sim.deformation.max_displacement():.4f} mm)")

peaks = detect_peaks(trace)
print(f"\ntrace peaks ({len(peaks)}):")
for p in peaks:
    print(f"  t = {p.t:.3f} s, {p.magnitude:.2f} N (prominence {p.prominence:.2f} N)")

print("\nforce profile (every 50th step):")
mags = trace.magnitudes
for i in range(0, len(mags), 50):
    bar = "#" * int(24 * mags[i] / config.fail_threshold_n)
    print(f"  t = {trace.times[i]:.2f} s  {mags[i]:5.2f} N  {bar}")
