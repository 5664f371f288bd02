"""Contact resolution, force law, classification bands, deformation, stepping."""

import math

import numpy as np
import pytest

from palpsim.errors import SequencingError
from palpsim.geometry import build_bvh
from palpsim.geometry.bvh import SurfacePoint, closest_point
from palpsim.geometry.shapes import icosphere, uv_sphere
from palpsim.haptics import (
    DT,
    ContactResult,
    ForceClassification,
    HapticConfig,
    ProbeState,
    Simulation,
    ToolKind,
    classify_force,
    compute_force,
    resolve_contact,
)
from palpsim.tissue import Material, TissueModel


def make_contact(depth, k=0.5, b=0.0, tenderness=0.0, normal=(0, 0, 1.0)):
    n = np.asarray(normal, dtype=float)
    proxy = SurfacePoint(np.zeros(3), 0, np.array([1.0, 0, 0]), n)
    return ContactResult(
        in_contact=depth > 0,
        proxy=proxy,
        penetration_depth=depth,
        direction=n,
        effective_material=Material(k, b, tenderness),
        force=np.zeros(3),
    )


def static_probe(tool=ToolKind.BABCOCK):
    return ProbeState(np.zeros(3), np.zeros(3), tool, 0.0)


@pytest.fixture(scope="module")
def sphere():
    mesh = uv_sphere(radius=50.0, rings=39, segments=40)  # 3040 triangles
    return mesh, build_bvh(mesh)


class TestResolveContact:
    def test_probe_outside_no_contact(self, sphere):
        mesh, bvh = sphere
        tissue = TissueModel()
        probe = ProbeState(np.array([0.0, 0.0, 55.0]), np.zeros(3), ToolKind.BABCOCK, 0.0)
        contact = resolve_contact(bvh, mesh, tissue, probe)
        assert not contact.in_contact
        assert contact.penetration_depth == 0.0
        cfg = HapticConfig()
        assert np.array_equal(compute_force(contact, probe, cfg), np.zeros(3))

    def test_depth_under_flat_region(self):
        # large triangle in the z=0 plane, probed from below following a box
        from palpsim.geometry.shapes import box
        mesh = box(half_extents=(50, 50, 10))
        bvh = build_bvh(mesh)
        tissue = TissueModel()
        probe = ProbeState(np.array([3.0, 2.0, 8.0]), np.zeros(3), ToolKind.BABCOCK, 0.0)
        contact = resolve_contact(bvh, mesh, tissue, probe)
        assert contact.in_contact
        assert contact.penetration_depth == pytest.approx(2.0, abs=1e-9)
        assert np.allclose(contact.proxy.position, [3.0, 2.0, 10.0], atol=1e-9)

    def test_interior_depth_matches_brute_force(self, sphere):
        mesh, bvh = sphere
        tissue = TissueModel()
        rng = np.random.default_rng(4)
        # random interior points
        dirs = rng.normal(size=(500, 3))
        dirs /= np.linalg.norm(dirs, axis=1)[:, None]
        radii = rng.uniform(5.0, 49.0, size=500)
        tri = mesh.rest_positions[mesh.triangles]
        for d, r in zip(dirs, radii):
            p = d * r
            probe = ProbeState(p, np.zeros(3), ToolKind.BABCOCK, 0.0)
            contact = resolve_contact(bvh, mesh, tissue, probe)
            assert contact.in_contact
            # brute force: min distance over all triangles via the oracle kernel
            from palpsim.geometry import closest_points_on_triangles
            pts, _, _ = closest_points_on_triangles(tri[:, 0], tri[:, 1], tri[:, 2], p)
            ref = np.linalg.norm(pts - p, axis=1).min()
            assert contact.penetration_depth == pytest.approx(ref, abs=1e-9)


class TestComputeForce:
    def test_zero_depth_zero_force(self):
        cfg = HapticConfig()
        f = compute_force(make_contact(0.0), static_probe(), cfg)
        assert np.array_equal(f, np.zeros(3))

    def test_pure_spring(self):
        cfg = HapticConfig()
        f = compute_force(make_contact(2.0, k=0.5, b=0.0), static_probe(), cfg)
        assert np.linalg.norm(f) == pytest.approx(1.0, rel=1e-12)

    def test_linearity_in_depth(self):
        cfg = HapticConfig()
        f2 = compute_force(make_contact(2.0, k=0.5), static_probe(), cfg)
        f4 = compute_force(make_contact(4.0, k=0.5), static_probe(), cfg)
        assert np.array_equal(f4, 2.0 * f2)

    def test_spring_damper_inward_motion(self):
        cfg = HapticConfig()
        contact = make_contact(2.0, k=0.5, b=0.02)
        probe = ProbeState(np.zeros(3), np.array([0.0, 0.0, -50.0]),
                           ToolKind.BABCOCK, 0.0)  # 50 mm/s into the surface
        f = compute_force(contact, probe, cfg)
        assert np.linalg.norm(f) == pytest.approx(2.0, rel=1e-12)

    def test_tissue_never_pulls(self):
        cfg = HapticConfig()
        contact = make_contact(0.5, k=0.5, b=0.1)
        # retracting fast: damping would make the force negative
        probe = ProbeState(np.zeros(3), np.array([0.0, 0.0, 500.0]), ToolKind.BABCOCK, 0.0)
        f = compute_force(contact, probe, cfg)
        assert np.array_equal(f, np.zeros(3))

    def test_clamp(self):
        cfg = HapticConfig(force_clamp_n=3.3)
        f = compute_force(make_contact(100.0, k=0.5), static_probe(), cfg)
        assert np.linalg.norm(f) == pytest.approx(3.3, rel=1e-12)

    def test_random_spring_law_exact(self):
        cfg = HapticConfig(force_clamp_n=math.inf)
        rng = np.random.default_rng(0)
        for _ in range(500):
            k = rng.uniform(0.05, 5.0)
            d = rng.uniform(0.0, 20.0)
            f = compute_force(make_contact(d, k=k), static_probe(), cfg)
            expected = k * d
            if expected == 0.0:
                assert np.linalg.norm(f) == 0.0
            else:
                assert abs(np.linalg.norm(f) - expected) / expected < 1e-12

    def test_continuous_across_contact_boundary(self):
        # |F| -> 0 as the penetration depth vanishes
        cfg = HapticConfig()
        for d in np.geomspace(1.0, 1e-12, 13):
            f = np.linalg.norm(compute_force(make_contact(float(d), k=2.0),
                                             static_probe(), cfg))
            assert f <= 2.0 * d + 1e-30
        assert np.linalg.norm(
            compute_force(make_contact(0.0, k=2.0), static_probe(), cfg)) == 0.0


class TestClassifyForce:
    def test_zero_is_ok(self):
        cfg = HapticConfig()
        assert classify_force(np.zeros(3), Material(0.5), cfg) is ForceClassification.OK

    def test_warn_band(self):
        cfg = HapticConfig(fail_threshold_n=2.5, warn_fraction=0.8)
        f = np.array([0.0, 0.0, 2.2])
        assert classify_force(f, Material(0.5), cfg) is ForceClassification.WARN

    def test_boundary_is_fail(self):
        cfg = HapticConfig(fail_threshold_n=2.5)
        f = np.array([0.0, 0.0, 2.5])
        assert classify_force(f, Material(0.5), cfg) is ForceClassification.FAIL

    def test_tenderness_halves_threshold(self):
        cfg = HapticConfig(fail_threshold_n=2.5)
        tender = Material(0.5, tenderness=1.0)
        f = np.array([0.0, 0.0, 1.3])  # above 1.25 = 2.5 * 0.5
        assert classify_force(f, tender, cfg) is ForceClassification.FAIL
        assert classify_force(f, Material(0.5), cfg) is ForceClassification.OK

    def test_monotone_in_magnitude(self):
        cfg = HapticConfig()
        order = {ForceClassification.OK: 0, ForceClassification.WARN: 1,
                 ForceClassification.FAIL: 2}
        prev = 0
        for mag in np.linspace(0, 4, 200):
            cls = order[classify_force(np.array([mag, 0, 0]), Material(0.5), cfg)]
            assert cls >= prev
            prev = cls


class TestDeformation:
    def test_no_contact_no_motion(self, sphere):
        mesh, bvh = sphere
        sim = Simulation(mesh.copy(), TissueModel(), HapticConfig())
        before = sim.mesh.current_positions.copy()
        sim.step(np.array([0.0, 0.0, 80.0]))
        assert np.array_equal(sim.mesh.current_positions, before)

    def test_steady_contact_reaches_depth(self):
        mesh = uv_sphere(radius=50.0, rings=39, segments=40)
        sim = Simulation(mesh, TissueModel(), HapticConfig())
        p = np.array([0.0, 0.0, 48.0])  # 2 mm deep
        tau = sim.config.relaxation_tau_s
        steps = int(10 * tau / DT)  # 10 tau >> settled
        for _ in range(steps):
            frame = sim.step(p)
        depth = frame.contact.penetration_depth
        _, closest_vid = min(
            (np.linalg.norm(mesh.rest_positions[v] - frame.contact.proxy.position), v)
            for v in range(mesh.vertex_count))
        disp = np.linalg.norm(sim.deformation.displacements[closest_vid])
        weight = math.exp(-np.linalg.norm(
            mesh.rest_positions[closest_vid] - frame.contact.proxy.position) ** 2
            / sim.deformation.rho_mm ** 2)
        assert disp == pytest.approx(depth * weight, rel=0.01)

    def test_release_decays_to_zero(self):
        mesh = uv_sphere(radius=50.0, rings=39, segments=40)
        sim = Simulation(mesh, TissueModel(), HapticConfig())
        inside = np.array([0.0, 0.0, 45.0])
        outside = np.array([0.0, 0.0, 70.0])
        for _ in range(300):
            sim.step(inside)
        assert sim.deformation.max_displacement() > 1.0
        tau = sim.config.relaxation_tau_s
        for _ in range(int(20 * tau / DT)):
            sim.step(outside)
        assert sim.deformation.max_displacement() < 1e-6

    def test_locality_beyond_four_rho(self):
        mesh = uv_sphere(radius=50.0, rings=39, segments=40)
        sim = Simulation(mesh, TissueModel(), HapticConfig(), tool=ToolKind.BABCOCK)
        contact_point = np.array([0.0, 0.0, 46.0])
        for _ in range(200):
            frame = sim.step(contact_point)
        proxy = frame.contact.proxy.position
        rho = sim.deformation.rho_mm
        far = np.linalg.norm(mesh.rest_positions - proxy, axis=1) > 4.0 * rho
        assert np.array_equal(mesh.current_positions[far], mesh.rest_positions[far])


class TestStep:
    def test_replay_determinism(self):
        mesh = uv_sphere(radius=50.0, rings=19, segments=20)
        rng = np.random.default_rng(9)
        tape = np.array([0.0, 0.0, 52.0]) + np.cumsum(
            rng.normal(0, 0.3, size=(400, 3)), axis=0) * np.array([1, 1, -1])

        def run():
            sim = Simulation(mesh.copy(), TissueModel(),
                             HapticConfig(fail_threshold_n=1e9))
            return [sim.step(p) for p in tape]

        frames1, frames2 = run(), run()
        for f1, f2 in zip(frames1, frames2):
            assert f1.force_magnitude == f2.force_magnitude
            assert f1.classification == f2.classification
            assert np.array_equal(f1.contact.force, f2.contact.force)

    def test_halts_on_fail_at_predicted_step(self):
        mesh = uv_sphere(radius=50.0, rings=39, segments=40)
        cfg = HapticConfig(fail_threshold_n=2.5)
        tissue = TissueModel()
        # press straight in at constant speed; predict the crossing offline
        speed = 20.0  # mm/s inward
        n_steps = 600
        zs = 50.0 - speed * DT * np.arange(n_steps)
        positions = np.column_stack([np.zeros(n_steps), np.zeros(n_steps), zs])

        bvh = build_bvh(mesh)
        expected_fail = None
        prev_diff = np.zeros(3)
        prev_pos = None
        for i, p in enumerate(positions):
            sp, dist = closest_point(bvh, mesh, p)
            inside = np.dot(p - sp.position, sp.pseudo_normal) <= 0
            diff = np.zeros(3) if prev_pos is None else (p - prev_pos) / DT
            vel = 0.5 * (diff + prev_diff)
            prev_pos, prev_diff = p, diff
            if not inside:
                continue
            d_dot = -float(vel @ sp.pseudo_normal)
            mag = tissue.base.stiffness_k * dist + tissue.base.damping_b * d_dot
            mag = min(max(mag, 0.0), cfg.force_clamp_n)
            if mag >= cfg.fail_threshold_n:
                expected_fail = i
                break
        assert expected_fail is not None

        sim = Simulation(mesh.copy(), tissue, cfg)
        fail_at = None
        for i, p in enumerate(positions):
            frame = sim.step(p)
            if frame.classification is ForceClassification.FAIL:
                fail_at = i
                break
        assert fail_at == expected_fail
        with pytest.raises(SequencingError):
            sim.step(positions[-1])

    def test_out_of_order_timestamp_rejected(self):
        mesh = uv_sphere(radius=50.0, rings=9, segments=12)
        sim = Simulation(mesh, TissueModel(), HapticConfig())
        sim.step(np.array([0, 0, 60.0]), timestamp=0.0)
        with pytest.raises(SequencingError):
            sim.step(np.array([0, 0, 60.0]), timestamp=0.0)

    def test_off_grid_timestamp_rejected(self):
        mesh = uv_sphere(radius=50.0, rings=9, segments=12)
        sim = Simulation(mesh, TissueModel(), HapticConfig())
        with pytest.raises(SequencingError):
            sim.step(np.array([0, 0, 60.0]), timestamp=0.0005)

    def test_thousand_steps_under_one_second(self, sphere):
        import time
        mesh, bvh = sphere
        sim = Simulation(mesh.copy(), TissueModel(), HapticConfig(fail_threshold_n=1e9),
                         bvh=bvh)
        rng = np.random.default_rng(1)
        walk = np.cumsum(rng.normal(0, 0.2, size=(1000, 3)), axis=0)
        positions = np.array([0.0, 0.0, 49.0]) + walk
        t0 = time.perf_counter()
        for p in positions:
            sim.step(p)
        elapsed = time.perf_counter() - t0
        assert elapsed < 1.0, f"1000 steps took {elapsed:.2f} s"
