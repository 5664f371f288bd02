"""Spatially varying tissue material: base spring-damper coefficients blended
toward analytic lesion volumes, plus the disease scenario presets.

Lesions are spheres, axis-aligned ellipsoids, or surface-attached nodules.
The effective material at a point blends the base material toward the single
dominant lesion by a Gaussian falloff of the distance to the lesion volume
(zero inside), so the field is continuous and bounded by the participating
materials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .errors import CalibrationError, ConfigurationError
from .geometry import DeformableMesh, build_bvh, is_inside, recompute_normals
from .geometry.bvh import SurfacePoint, closest_point
from .geometry.mesh import face_normals_and_areas, require_watertight

# falloff weights underflow-clamp to exactly zero beyond this many sigmas
FALLOFF_CUTOFF_SIGMAS = 6.0

DEFAULT_BASE_STIFFNESS = 0.5    # N/mm
DEFAULT_BASE_DAMPING = 0.02     # N*s/mm


@dataclass(frozen=True)
class Material:
    stiffness_k: float            # N/mm
    damping_b: float = 0.0        # N*s/mm
    tenderness: float = 0.0       # [0, 1], scales the damage threshold down

    def __post_init__(self):
        if self.stiffness_k <= 0:
            raise ConfigurationError(f"stiffness_k must be positive, got {self.stiffness_k}")
        if self.damping_b < 0:
            raise ConfigurationError(f"damping_b must be non-negative, got {self.damping_b}")
        if not 0.0 <= self.tenderness <= 1.0:
            raise ConfigurationError(f"tenderness must lie in [0,1], got {self.tenderness}")


DEFAULT_BASE = Material(DEFAULT_BASE_STIFFNESS, DEFAULT_BASE_DAMPING)


class LesionShape(Enum):
    SPHERE = "sphere"
    ELLIPSOID = "ellipsoid"
    SURFACE_NODULE = "surface_nodule"


@dataclass(frozen=True)
class Lesion:
    id: int
    shape: LesionShape
    center: tuple[float, float, float]          # attach point for surface nodules
    material: Material
    falloff_sigma: float                        # mm
    radius: float = 0.0                         # sphere / nodule
    semi_axes: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if self.falloff_sigma <= 0:
            raise ConfigurationError("falloff_sigma must be positive")
        if self.shape in (LesionShape.SPHERE, LesionShape.SURFACE_NODULE):
            if self.radius <= 0:
                raise ConfigurationError("sphere/nodule radius must be positive")
        else:
            if min(self.semi_axes) <= 0:
                raise ConfigurationError("ellipsoid semi-axes must be positive")

    def distance(self, p: np.ndarray) -> float:
        """Distance from ``p`` to the lesion volume; zero inside."""
        c = np.asarray(self.center)
        if self.shape in (LesionShape.SPHERE, LesionShape.SURFACE_NODULE):
            return max(0.0, float(np.linalg.norm(p - c)) - self.radius)
        return _ellipsoid_distance(p - c, self.semi_axes)


def _ellipsoid_distance(q: np.ndarray, semi_axes) -> float:
    """Distance from q (ellipsoid frame) to the solid axis-aligned ellipsoid."""
    ax, ay, az = semi_axes
    x, y, z = abs(float(q[0])), abs(float(q[1])), abs(float(q[2]))
    if (x / ax) ** 2 + (y / ay) ** 2 + (z / az) ** 2 <= 1.0:
        return 0.0
    # closest point satisfies x_i = a_i^2 q_i / (t + a_i^2); find the t > 0 root
    ax2, ay2, az2 = ax * ax, ay * ay, az * az

    def g(t: float) -> float:
        return ((ax * x / (t + ax2)) ** 2
                + (ay * y / (t + ay2)) ** 2
                + (az * z / (t + az2)) ** 2) - 1.0

    lo = 0.0
    hi = max(ax, ay, az) * math.sqrt(x * x + y * y + z * z)
    while g(hi) > 0.0:
        hi *= 2.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    t = 0.5 * (lo + hi)
    cx = ax2 * x / (t + ax2)
    cy = ay2 * y / (t + ay2)
    cz = az2 * z / (t + az2)
    return math.sqrt((x - cx) ** 2 + (y - cy) ** 2 + (z - cz) ** 2)


@dataclass(frozen=True)
class TissueModel:
    base: Material = DEFAULT_BASE
    lesions: tuple[Lesion, ...] = ()
    mesh_scale: float = 1.0
    surface_noise_amplitude: float = 0.0     # mm

    def __post_init__(self):
        if self.mesh_scale <= 0:
            raise ConfigurationError("mesh_scale must be positive")
        ids = [l.id for l in self.lesions]
        if len(ids) != len(set(ids)):
            raise ConfigurationError("lesion ids must be distinct")
        # evaluation order is id order so argmax ties resolve deterministically
        object.__setattr__(self, "lesions", tuple(sorted(self.lesions, key=lambda l: l.id)))


class ScenarioKind(Enum):
    HEALTHY = "healthy"
    CIRRHOSIS = "cirrhosis"
    TUMORS_CYSTS = "tumors_cysts"
    HEPATITIS = "hepatitis"
    ENLARGED = "enlarged"
    FATTY = "fatty"
    NEOPLASM = "neoplasm"


def stiffness_at(tissue: TissueModel, p) -> Material:
    """Effective material at a point: base blended toward the dominant lesion.

    Weight for lesion j is exp(-(dist/sigma)^2), clamped to exactly zero
    beyond six sigmas; the largest weight wins, ties to the lowest id.
    """
    p = np.asarray(p, dtype=np.float64)
    best_w = 0.0
    best_lesion = None
    for lesion in tissue.lesions:
        d = lesion.distance(p)
        if d > FALLOFF_CUTOFF_SIGMAS * lesion.falloff_sigma:
            continue
        ratio = d / lesion.falloff_sigma
        w = math.exp(-ratio * ratio)
        if w > best_w:
            best_w = w
            best_lesion = lesion
    if best_lesion is None or best_w == 0.0:
        return tissue.base
    base = tissue.base
    lm = best_lesion.material
    return Material(
        stiffness_k=base.stiffness_k + best_w * (lm.stiffness_k - base.stiffness_k),
        damping_b=base.damping_b + best_w * (lm.damping_b - base.damping_b),
        tenderness=base.tenderness + best_w * (lm.tenderness - base.tenderness),
    )


def calibrate_base_material(measurements, default_damping: float = DEFAULT_BASE_DAMPING) -> Material:
    """Fit base stiffness from static force-meter readings (depth mm, force N).

    Least-squares slope of force against depth through the origin. Static
    readings carry no rate information, so damping stays at the configured
    default.
    """
    pts = [(float(d), float(f)) for d, f in measurements]
    if len(pts) < 2:
        raise CalibrationError("need at least 2 measurements")
    depths = [d for d, _ in pts]
    if len(set(depths)) != len(depths):
        raise CalibrationError("measurement depths must be distinct")
    if any(f < 0 for _, f in pts):
        raise CalibrationError("forces must be non-negative")
    num = sum(d * f for d, f in pts)
    den = sum(d * d for d, _ in pts)
    slope = num / den
    if slope <= 0:
        raise CalibrationError(f"fitted stiffness is not positive ({slope:.3g} N/mm)")
    return Material(stiffness_k=slope, damping_b=default_damping)


# ---------------------------------------------------------------------------
# scenario presets

_KIND_SALT = {kind: i + 1 for i, kind in enumerate(ScenarioKind)}


def _rng_for(kind: ScenarioKind, seed: int) -> np.random.Generator:
    return np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, _KIND_SALT[kind]])


def _scale_about_centroid(mesh: DeformableMesh, scale: float) -> None:
    centroid = mesh.rest_positions.mean(axis=0)
    mesh.rest_positions = centroid + (mesh.rest_positions - centroid) * scale
    mesh.current_positions = mesh.rest_positions.copy()


def _apply_surface_noise(mesh: DeformableMesh, amplitude: float,
                         rng: np.random.Generator) -> None:
    """Seeded per-vertex displacement along the normal, 1-ring low-passed."""
    n = mesh.vertex_count
    raw = rng.uniform(-amplitude, amplitude, size=n)
    neighbor_sum = np.zeros(n)
    neighbor_count = np.ones(n)  # include self
    neighbor_sum += raw
    for a, b, c in mesh.triangles:
        for u, v in ((a, b), (b, c), (c, a)):
            neighbor_sum[u] += raw[v]
            neighbor_sum[v] += raw[u]
            neighbor_count[u] += 1
            neighbor_count[v] += 1
    smooth = neighbor_sum / neighbor_count
    normals = mesh.normals()
    mesh.rest_positions = mesh.rest_positions + smooth[:, None] * normals
    mesh.current_positions = mesh.rest_positions.copy()
    recompute_normals(mesh)


def _random_surface_point(mesh: DeformableMesh, rng: np.random.Generator,
                          area_probs: np.ndarray, face_normals: np.ndarray) -> SurfacePoint:
    ti = int(rng.choice(len(area_probs), p=area_probs))
    r1, r2 = rng.random(), rng.random()
    if r1 + r2 > 1.0:
        r1, r2 = 1.0 - r1, 1.0 - r2
    a, b, c = mesh.rest_positions[mesh.triangles[ti]]
    pos = a + r1 * (b - a) + r2 * (c - a)
    return SurfacePoint(
        position=pos,
        triangle_id=ti,
        barycentric=np.array([1.0 - r1 - r2, r1, r2]),
        pseudo_normal=face_normals[ti],
    )


def random_surface_points(mesh: DeformableMesh, rng: np.random.Generator,
                          count: int) -> list[SurfacePoint]:
    """Area-uniform random points on the surface (calibration targets etc.)."""
    face_n, areas = face_normals_and_areas(mesh.rest_positions, mesh.triangles)
    probs = areas / areas.sum()
    return [_random_surface_point(mesh, rng, probs, face_n) for _ in range(count)]


def _random_interior_point(mesh: DeformableMesh, bvh, rng: np.random.Generator,
                           margin: float, attempts: int = 200) -> np.ndarray:
    lo = mesh.rest_positions.min(axis=0)
    hi = mesh.rest_positions.max(axis=0)
    best = None
    best_depth = -1.0
    for _ in range(attempts):
        p = rng.uniform(lo, hi)
        if not is_inside(bvh, mesh, p):
            continue
        _, d = closest_point(bvh, mesh, p)
        if d >= margin:
            return p
        if d > best_depth:
            best_depth, best = d, p
    if best is None:
        raise ConfigurationError("could not place an interior lesion inside the mesh")
    return best


def _span(mesh: DeformableMesh) -> float:
    extents = mesh.rest_positions.max(axis=0) - mesh.rest_positions.min(axis=0)
    return float(extents.max())


@dataclass
class ScenarioOverrides:
    """Optional knobs accepted from the gateway's JSON scenario config."""
    base_k_n_per_mm: float | None = None
    base_b_ns_per_mm: float | None = None
    mesh_scale: float | None = None
    noise_mm: float | None = None
    lesions: list[dict] | None = None

    @classmethod
    def from_dict(cls, data: dict | None) -> "ScenarioOverrides":
        if not data:
            return cls()
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown scenario override fields: {sorted(unknown)}")
        return cls(**data)


def _lesion_from_dict(idx: int, spec: dict) -> Lesion:
    shape = LesionShape(spec.get("shape", "sphere"))
    material = Material(
        stiffness_k=float(spec["stiffness_k"]),
        damping_b=float(spec.get("damping_b", 0.0)),
        tenderness=float(spec.get("tenderness", 0.0)),
    )
    return Lesion(
        id=int(spec.get("id", idx)),
        shape=shape,
        center=tuple(spec["center"]),
        material=material,
        falloff_sigma=float(spec.get("falloff_sigma", 2.0)),
        radius=float(spec.get("radius", 0.0)),
        semi_axes=tuple(spec.get("semi_axes", (0.0, 0.0, 0.0))),
    )


def make_scenario(kind: ScenarioKind, mesh: DeformableMesh, seed: int,
                  base: Material = DEFAULT_BASE,
                  overrides: ScenarioOverrides | None = None,
                  ) -> tuple[TissueModel, DeformableMesh]:
    """Build the tissue model and transformed mesh for one disease scenario.

    Pure function of (kind, mesh, seed) plus explicit overrides: the same
    inputs always produce the same lesions and vertex positions.
    """
    require_watertight(mesh, context=f"scenario {kind.value}")
    overrides = overrides or ScenarioOverrides()
    rng = _rng_for(kind, seed)
    out = mesh.copy(mesh_id=f"{mesh.id}-{kind.value}")

    if overrides.base_k_n_per_mm is not None or overrides.base_b_ns_per_mm is not None:
        base = Material(
            stiffness_k=(base.stiffness_k if overrides.base_k_n_per_mm is None
                         else overrides.base_k_n_per_mm),
            damping_b=(base.damping_b if overrides.base_b_ns_per_mm is None
                       else overrides.base_b_ns_per_mm),
            tenderness=base.tenderness,
        )

    # preset surface transform and base-material adjustments
    scale, noise = 1.0, 0.0
    if kind in (ScenarioKind.CIRRHOSIS, ScenarioKind.HEPATITIS, ScenarioKind.FATTY):
        scale = 1.15
    elif kind == ScenarioKind.NEOPLASM:
        scale = 1.1
    elif kind == ScenarioKind.ENLARGED:
        span = _span(out)
        scale = (span + 25.0) / span  # grow the longest span by 2.5 cm
    if kind == ScenarioKind.CIRRHOSIS:
        noise = 1.0
    if kind == ScenarioKind.HEPATITIS:
        base = replace(base, tenderness=0.5)
    if kind == ScenarioKind.FATTY:
        base = replace(base, stiffness_k=0.6 * base.stiffness_k)

    if overrides.mesh_scale is not None:
        scale = overrides.mesh_scale
    if overrides.noise_mm is not None:
        noise = overrides.noise_mm

    if scale != 1.0:
        _scale_about_centroid(out, scale)
    if noise > 0.0:
        _apply_surface_noise(out, noise, rng)

    # lesion placement on the transformed surface
    lesions: list[Lesion] = []
    if kind == ScenarioKind.CIRRHOSIS:
        face_n, areas = face_normals_and_areas(out.rest_positions, out.triangles)
        probs = areas / areas.sum()
        count = int(rng.integers(8, 16))
        hard = Material(5.0 * base.stiffness_k, base.damping_b)
        for i in range(count):
            sp = _random_surface_point(out, rng, probs, face_n)
            radius = float(rng.uniform(2.0, 5.0))
            lesions.append(Lesion(
                id=i, shape=LesionShape.SURFACE_NODULE,
                center=tuple(sp.position), material=hard,
                falloff_sigma=0.5 * radius, radius=radius,
            ))
    elif kind == ScenarioKind.TUMORS_CYSTS:
        bvh = build_bvh(out)
        n_tumor = int(rng.integers(1, 4))
        n_cyst = int(rng.integers(1, 3))
        stiff = Material(6.0 * base.stiffness_k, base.damping_b)
        soft = Material(0.3 * base.stiffness_k, base.damping_b)
        lid = 0
        for _ in range(n_tumor):
            axes = tuple(float(rng.uniform(5.0, 12.0)) for _ in range(3))
            center = _random_interior_point(out, bvh, rng, margin=0.8 * max(axes))
            lesions.append(Lesion(
                id=lid, shape=LesionShape.ELLIPSOID, center=tuple(center),
                material=stiff, falloff_sigma=4.0, semi_axes=axes,
            ))
            lid += 1
        for _ in range(n_cyst):
            radius = float(rng.uniform(4.0, 9.0))
            center = _random_interior_point(out, bvh, rng, margin=0.8 * radius)
            lesions.append(Lesion(
                id=lid, shape=LesionShape.SPHERE, center=tuple(center),
                material=soft, falloff_sigma=3.0, radius=radius,
            ))
            lid += 1
    elif kind == ScenarioKind.NEOPLASM:
        face_n, areas = face_normals_and_areas(out.rest_positions, out.triangles)
        probs = areas / areas.sum()
        count = int(rng.integers(3, 7))
        rock_hard = Material(12.0 * base.stiffness_k, base.damping_b)
        for i in range(count):
            sp = _random_surface_point(out, rng, probs, face_n)
            radius = float(rng.uniform(4.0, 8.0))
            lesions.append(Lesion(
                id=i, shape=LesionShape.SURFACE_NODULE,
                center=tuple(sp.position), material=rock_hard,
                falloff_sigma=0.5 * radius, radius=radius,
            ))

    if overrides.lesions is not None:
        lesions = [_lesion_from_dict(i, spec) for i, spec in enumerate(overrides.lesions)]

    tissue = TissueModel(
        base=base,
        lesions=tuple(lesions),
        mesh_scale=scale,
        surface_noise_amplitude=noise,
    )
    return tissue, out
