"""Acceptance suite: one test per release criterion, each at its stated
tolerance, printing one pass/fail line. Run with ``pytest -s`` to watch the
lines live; any assertion failure marks the criterion failed."""

import math
import time

import numpy as np
import pytest
from scipy import stats

from palpsim.gateway.cli import bundled_asset_path, main
from palpsim.gateway.replay import run_replay
from palpsim.geometry import (
    build_bvh,
    closest_point,
    closest_point_brute,
    decimate,
    load_mesh_file,
    sampled_hausdorff,
)
from palpsim.geometry.bvh import SurfacePoint
from palpsim.geometry.shapes import ellipsoid, uv_sphere
from palpsim.haptics import (
    DT,
    ContactResult,
    HapticConfig,
    ProbeState,
    Simulation,
    ToolKind,
    compute_force,
)
from palpsim.session import read_tape, scenario_order, trace_from_arrays
from palpsim.session.trace import constant_rate_times, detect_peaks
from palpsim.tissue import Material, ScenarioKind, TissueModel
from palpsim.validity import RaterRole, ValidityScoreSheet, aggregate_validity, inter_rater
from palpsim.validity import test_retest as retest_stats

PASS_LINE = "[PASS] {name}"


def announce(name: str):
    print(PASS_LINE.format(name=name))


@pytest.fixture(scope="module")
def liver():
    mesh = load_mesh_file(bundled_asset_path("liver.obj"), mesh_id="liver")
    return mesh, build_bvh(mesh)


def _static_contact(depth: float, k: float) -> tuple[ContactResult, ProbeState]:
    n = np.array([0.0, 0.0, 1.0])
    proxy = SurfacePoint(np.zeros(3), 0, np.array([1.0, 0.0, 0.0]), n)
    contact = ContactResult(
        in_contact=depth > 0.0, proxy=proxy, penetration_depth=depth,
        direction=n, effective_material=Material(k), force=np.zeros(3))
    probe = ProbeState(np.zeros(3), np.zeros(3), ToolKind.BABCOCK, 0.0)
    return contact, probe


def test_force_law_proportionality():
    """|F| = k*d to <1e-12 relative for 1000 random (k, d); doubling is exact."""
    cfg = HapticConfig(force_clamp_n=math.inf)
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    for _ in range(1000):
        k = float(rng.uniform(0.01, 8.0))
        d = float(rng.uniform(1e-6, 25.0))
        contact, probe = _static_contact(d, k)
        f1 = np.linalg.norm(compute_force(contact, probe, cfg))
        assert abs(f1 - k * d) / (k * d) < 1e-12
        contact2, _ = _static_contact(2.0 * d, k)
        f2 = np.linalg.norm(compute_force(contact2, probe, cfg))
        assert f2 == 2.0 * f1
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0, f"force-law check took {elapsed:.2f} s"
    announce("force law: |F| = k*d (rel err < 1e-12), exact doubling, < 1 s")


def test_geometry_oracle_bvh_vs_brute(liver):
    """BVH closest point equals the all-triangles scan on 1000 queries, < 5 s."""
    mesh, bvh = liver
    assert mesh.triangle_count == 3000
    rng = np.random.default_rng(7)
    lo = mesh.rest_positions.min(axis=0) - 25
    hi = mesh.rest_positions.max(axis=0) + 25
    points = rng.uniform(lo, hi, size=(1000, 3))
    t0 = time.perf_counter()
    for p in points:
        sp1, d1 = closest_point(bvh, mesh, p)
        sp2, d2 = closest_point_brute(bvh, p)
        assert abs(d1 - d2) <= 1e-9
        assert sp1.triangle_id == sp2.triangle_id
        assert np.linalg.norm(sp1.position - sp2.position) <= 1e-9
    elapsed = time.perf_counter() - t0
    assert elapsed < 5.0, f"1000 dual queries took {elapsed:.2f} s"
    announce("geometry oracle: BVH == brute force on 1000 queries (1e-9 mm), < 5 s")


def test_decimation_40k_to_3k():
    """40k-triangle ellipsoid reduces to <= 3000 with Hausdorff < 2% of radius, < 30 s."""
    t0 = time.perf_counter()
    mesh = ellipsoid((60.0, 45.0, 30.0), rings=201, segments=100)
    assert mesh.triangle_count == 40_000
    result = decimate(mesh, 3000)
    assert result.mesh.triangle_count <= 3000
    bounding_radius = float(np.linalg.norm(mesh.rest_positions, axis=1).max())
    err = sampled_hausdorff(mesh, result.mesh, samples=10_000, seed=3)
    elapsed = time.perf_counter() - t0
    assert err < 0.02 * bounding_radius, f"Hausdorff {err:.3f} mm"
    assert elapsed < 30.0, f"decimation pipeline took {elapsed:.1f} s"
    announce("decimation: 40k -> <=3k triangles, Hausdorff < 2% of radius, < 30 s")


def test_performance_budget_1khz(liver):
    """1000 full simulation steps on the 3k mesh complete in < 1 s."""
    mesh, bvh = liver
    sim = Simulation(mesh.copy(), TissueModel(),
                     HapticConfig(fail_threshold_n=1e9), bvh=bvh)
    apex = mesh.rest_positions[np.argmax(mesh.rest_positions[:, 2])]
    rng = np.random.default_rng(5)
    wander = np.cumsum(rng.normal(0.0, 0.15, size=(1000, 3)), axis=0)
    positions = apex + np.array([0.0, 0.0, -1.5]) + wander
    t0 = time.perf_counter()
    for p in positions:
        sim.step(p)
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0, f"1000 steps took {elapsed:.3f} s"
    announce(f"performance: 1000 steps in {elapsed * 1000:.0f} ms (< 1 s, 1 kHz feasible)")


def test_threshold_lifecycle_overpress(liver):
    """Overpress tape: warn strictly before fail, fail at the precomputed step +-1,
    scenario marked failed with score 0."""
    mesh, bvh = liver
    tape = read_tape(bundled_asset_path("tapes", "overpress.jsonl"))

    # offline oracle: evaluate the tape against the force law directly
    cfg = HapticConfig()
    tissue = TissueModel()
    expected_fail = None
    prev_pos, prev_diff = None, np.zeros(3)
    for i, rec in enumerate(tape):
        p = np.asarray(rec.pos)
        diff = np.zeros(3) if prev_pos is None else (p - prev_pos) / DT
        vel = 0.5 * (diff + prev_diff)
        prev_pos, prev_diff = p, diff
        sp, dist = closest_point(bvh, mesh, p)
        if np.dot(p - sp.position, sp.pseudo_normal) > 0:
            continue
        magnitude = tissue.base.stiffness_k * dist - tissue.base.damping_b * float(
            vel @ sp.pseudo_normal)
        magnitude = min(max(magnitude, 0.0), cfg.force_clamp_n)
        if magnitude >= cfg.fail_threshold_n:
            expected_fail = i
            break
    assert expected_fail is not None

    result = run_replay(mesh, tape, ScenarioKind.HEALTHY, seed=42, collect_frames=True)
    warn_idx = [f.index for f in result.frames if f.classification.value == "warn"]
    fail_idx = [f.index for f in result.frames if f.classification.value == "fail"]
    assert len(fail_idx) == 1
    assert warn_idx and max(warn_idx) < fail_idx[0]
    assert abs(fail_idx[0] - expected_fail) <= 1
    record = result.report["scenarios"][0]
    assert record["failed"] is True
    assert record["score"] == 0.0
    announce("threshold lifecycle: warn before fail, crossing at oracle step +-1, "
             "failed scenario scored 0")


def test_peak_reporting_two_gaussians():
    """Peak detector matches the brute-force windowed-maximum oracle exactly."""
    rng = np.random.default_rng(99)
    for _ in range(10):
        n = 1500
        t = constant_rate_times(n)
        c1 = rng.uniform(0.2, 0.5)
        c2 = c1 + 0.5
        a1, a2 = 1.0, 0.8
        sigma = 0.1
        values = (a1 * np.exp(-((t - c1) ** 2) / (2 * sigma ** 2))
                  + a2 * np.exp(-((t - c2) ** 2) / (2 * sigma ** 2)))
        peaks = detect_peaks(trace_from_arrays(t, values))
        # oracle: a sample is a peak iff it is the strict maximum of every
        # window of half-width min_separation centred on it
        oracle = []
        sep_steps = 50
        for i in range(1, n - 1):
            lo, hi = max(0, i - sep_steps), min(n, i + sep_steps + 1)
            window = values[lo:hi]
            if values[i] == window.max() and (window < values[i]).sum() == len(window) - 1:
                oracle.append(i)
        assert [p.t for p in peaks] == [t[i] for i in oracle]
        assert len(peaks) == 2
        assert abs(peaks[0].t - c1) <= 0.002
        assert abs(peaks[1].t - c2) <= 0.002
    announce("peak reporting: two-Gaussian traces match the windowed-maximum oracle exactly")


def test_determinism_replay_and_shuffle(tmp_path):
    """cli replay twice is byte-identical; 10k seeds cover all 120 orderings of 5
    scenarios with chi-square p > 0.001."""
    out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
    for out in (out1, out2):
        assert main(["replay", "--tape", "gentle", "--scenario", "healthy",
                     "--seed", "42", "--report", str(out)]) == 0
    assert out1.read_bytes() == out2.read_bytes()

    kinds = [ScenarioKind.HEALTHY, ScenarioKind.CIRRHOSIS, ScenarioKind.TUMORS_CYSTS,
             ScenarioKind.HEPATITIS, ScenarioKind.ENLARGED]
    counts: dict = {}
    for seed in range(10_000):
        key = tuple(k.value for k in scenario_order(seed, kinds))
        counts[key] = counts.get(key, 0) + 1
    assert len(counts) == 120
    chi = stats.chisquare(list(counts.values()))
    assert chi.pvalue > 0.001, f"chi-square p = {chi.pvalue:.5f}"
    announce("determinism: byte-identical replays; 10k-seed shuffle covers all 120 "
             f"permutations (chi-square p = {chi.pvalue:.3f})")


def test_validity_numbers_and_reliability_properties():
    """One expert + two residents scoring face 8 / content 9 aggregate to 8.0 / 9.0;
    reliability statistics keep their degenerate and permutation properties."""
    sheets = [
        ValidityScoreSheet("expert-1", RaterRole.EXPERT, {"face": 8, "content": 9}),
        ValidityScoreSheet("resident-1", RaterRole.RESIDENT, {"face": 8, "content": 9}),
        ValidityScoreSheet("resident-2", RaterRole.RESIDENT, {"face": 8, "content": 9}),
    ]
    result = aggregate_validity(sheets)
    assert result["means"]["face"] == 8.0
    assert result["means"]["content"] == 9.0

    identical = inter_rater([[8, 9, 7], [8, 9, 7]])
    assert identical["mean_pairwise_abs_diff"] == 0.0
    assert identical["exact_agreement_fraction"] == 1.0

    rng = np.random.default_rng(3)
    matrix = rng.integers(1, 11, size=(4, 6))
    baseline = inter_rater(matrix)
    from itertools import permutations
    for perm in list(permutations(range(4)))[:12]:
        assert inter_rater(matrix[list(perm)]) == baseline

    repeat = retest_stats([(8, 8), (9, 9), (7, 7)])
    assert repeat["mean_abs_diff"] == 0.0
    assert repeat["pearson_r"] == pytest.approx(1.0)
    degenerate = retest_stats([(8, 8), (8, 9)])
    assert degenerate["pearson_defined"] is False
    assert degenerate["mean_abs_diff"] == 0.5
    announce("validity numbers: expert + 2 residents reproduce face 8.0 / content 9.0; "
             "reliability properties hold")


def test_contour_accuracy_sphere_center_cut():
    """Center cut of a ~3k-triangle radius-50 sphere: one closed polyline within
    1% of the true circumference."""
    from palpsim.ctplane import SectionPlane, plane_mesh_contour

    mesh = uv_sphere(radius=50.0, rings=39, segments=40)  # 3040 triangles
    plane = SectionPlane.from_origin_normal([0.0, 0.0, 0.0], [0.0, 0.0, 1.0])
    polylines = plane_mesh_contour(mesh, plane)
    assert len(polylines) == 1
    assert polylines[0].closed
    target = 2.0 * math.pi * 50.0
    assert polylines[0].length() == pytest.approx(target, rel=0.01)
    announce("contour accuracy: sphere center cut closed, perimeter within 1% of 2*pi*50")


def test_deformation_relaxation(liver):
    """After contact release the deformation decays below 1e-6 mm within 20 tau."""
    mesh, _ = liver
    sim = Simulation(mesh.copy(), TissueModel(), HapticConfig(fail_threshold_n=1e9))
    apex = mesh.rest_positions[np.argmax(mesh.rest_positions[:, 2])]
    press = apex + np.array([0.0, 0.0, -3.0])
    away = apex + np.array([0.0, 0.0, 40.0])
    for _ in range(400):
        sim.step(press)
    assert sim.deformation.max_displacement() > 1.0
    steps = int(round(20.0 * sim.config.relaxation_tau_s / DT))
    for _ in range(steps):
        sim.step(away)
    residual = sim.deformation.max_displacement()
    assert residual < 1e-6, f"residual displacement {residual:.2e} mm"
    announce("deformation relaxation: residual < 1e-6 mm within 20 tau of release")
