"""Regenerate the bundled assets: liver mesh, demo probe tapes, CT stack.

Run from the repository root:

    python3 tools/make_assets.py

The tapes are authored against the spring-damper force law on the bundled
mesh: the gentle tape stays inside the ok band and produces two clean force
peaks; the overpress tape ramps through the warn band into a fail.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from palpsim.ctplane import SectionPlane, plane_mesh_contour  # noqa: E402
from palpsim.geometry import build_bvh, decimate, is_watertight, load_mesh_file, save_obj_file  # noqa: E402
from palpsim.geometry.bvh import closest_point  # noqa: E402
from palpsim.geometry.shapes import liver_like  # noqa: E402
from palpsim.haptics import HapticConfig, Simulation, ToolKind  # noqa: E402
from palpsim.session import TapeRecord, write_tape  # noqa: E402
from palpsim.tissue import TissueModel  # noqa: E402

ASSETS = Path(__file__).resolve().parents[1] / "src" / "palpsim" / "assets"
DT = 0.001


def build_liver() -> None:
    mesh = liver_like(subdivisions=4)
    result = decimate(mesh, 3000)
    assert result.reached_target
    assert is_watertight(result.mesh)
    save_obj_file(result.mesh, ASSETS / "liver.obj")
    print(f"liver.obj: {result.mesh.triangle_count} triangles "
          f"({mesh.triangle_count} before decimation)")


def _apex_press_profile(mesh, depths: np.ndarray) -> list[TapeRecord]:
    """Positions along the inward apex normal at each commanded depth.

    Negative depths are clearance above the surface.
    """
    apex_vid = int(np.argmax(mesh.rest_positions[:, 2]))
    apex = mesh.rest_positions[apex_vid]
    normal = mesh.normals()[apex_vid]
    records = []
    for i, depth in enumerate(depths):
        pos = apex - depth * normal
        records.append(TapeRecord(i * DT, (float(pos[0]), float(pos[1]), float(pos[2]))))
    return records


def _ramp(a: float, b: float, steps: int) -> np.ndarray:
    return np.linspace(a, b, steps, endpoint=False)


def build_tapes() -> None:
    mesh = load_mesh_file(ASSETS / "liver.obj", mesh_id="liver")

    # gentle: two slow presses to ~2 mm, well below the 2.0 N warn band
    gentle_depths = np.concatenate([
        _ramp(-5.0, 2.0, 700),    # approach and press (10 mm/s)
        np.full(300, 2.0),        # hold
        _ramp(2.0, -3.0, 500),    # release
        np.full(200, -3.0),
        _ramp(-3.0, 1.8, 480),
        np.full(300, 1.8),
        _ramp(1.8, -5.0, 500),
    ])
    gentle = _apex_press_profile(mesh, gentle_depths)
    write_tape(ASSETS / "tapes" / "gentle.jsonl", gentle)

    # overpress: a steady 20 mm/s push straight through the fail threshold
    over_depths = np.concatenate([
        _ramp(-5.0, 8.0, 650),
        np.full(100, 8.0),
    ])
    overpress = _apex_press_profile(mesh, over_depths)
    write_tape(ASSETS / "tapes" / "overpress.jsonl", overpress)

    # sanity: run both against the actual simulation
    from palpsim.session import read_tape
    for name, expect_fail in (("gentle.jsonl", False), ("overpress.jsonl", True)):
        records = read_tape(ASSETS / "tapes" / name)
        sim = Simulation(mesh.copy(), TissueModel(), HapticConfig(), ToolKind.BABCOCK)
        classes = []
        for rec in records:
            if sim.halted:
                break
            frame = sim.step(rec.pos)
            classes.append(frame.classification.value)
        failed = "fail" in classes
        warned = "warn" in classes
        print(f"{name}: steps={len(classes)} warn={warned} fail={failed}")
        assert failed == expect_fail, name
        if expect_fail:
            assert warned, "overpress must warn before failing"
            assert classes.index("warn") < classes.index("fail")
        else:
            assert not warned


def build_ct_stack(count: int = 16, size: int = 96) -> None:
    mesh = load_mesh_file(ASSETS / "liver.obj", mesh_id="liver")
    lo = mesh.rest_positions.min(axis=0)
    hi = mesh.rest_positions.max(axis=0)
    spacing = (hi[2] - lo[2]) / (count - 1)
    cx, cy = mesh.rest_positions[:, 0].mean(), mesh.rest_positions[:, 1].mean()
    registration = np.eye(4)
    registration[:3, 3] = [cx, cy, lo[2]]

    ct_dir = ASSETS / "ct"
    ct_dir.mkdir(exist_ok=True)
    extent = max(hi[0] - lo[0], hi[1] - lo[1]) * 0.65
    rng = np.random.default_rng(4)
    noise = rng.integers(0, 24, size=(size, size)).astype(np.uint8)
    for i in range(count):
        z = lo[2] + i * spacing
        plane = SectionPlane.from_origin_normal([0.0, 0.0, z], [0.0, 0.0, 1.0])
        img = Image.fromarray(noise + 16, mode="L")
        draw = ImageDraw.Draw(img)
        for polyline in plane_mesh_contour(mesh, plane):
            pts = []
            for p in polyline.points:
                u = (p[0] - cx) / extent * (size / 2) + size / 2
                v = (p[1] - cy) / extent * (size / 2) + size / 2
                pts.append((u, v))
            if len(pts) >= 2:
                draw.polygon(pts, outline=200, fill=90)
        img.save(ct_dir / f"slice_{i:02d}.png")

    manifest = {
        "spacing_mm": round(float(spacing), 6),
        "axis": [0.0, 0.0, 1.0],
        "registration": registration.tolist(),
        "slices": [f"slice_{i:02d}.png" for i in range(count)],
    }
    (ct_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"ct stack: {count} slices, spacing {spacing:.2f} mm")


if __name__ == "__main__":
    (ASSETS / "tapes").mkdir(parents=True, exist_ok=True)
    build_liver()
    build_tapes()
    build_ct_stack()
