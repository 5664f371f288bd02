"""Per-step contact resolution, spring-damper force rendering, threshold
classification, and visual deformation.

The simulation advances on a fixed 1 kHz virtual-time grid. Contact queries
run against the rest mesh; deformation is visual only and written into
``current_positions``. Force on the instrument is

    F = (k_eff * d + b_eff * d_dot) * n_hat

with penetration depth d from the closest rest-surface point, d_dot the
inward speed projected on the contact normal, the normal component clamped
non-negative (tissue never pulls), and the magnitude clamped to the device
limit. Every step is a pure function of the prior state and the input, so
identical input tapes replay identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.spatial import cKDTree

from .errors import SequencingError
from .geometry import Bvh, DeformableMesh, build_bvh
from .geometry.bvh import SurfacePoint, closest_point
from .tissue import Material, TissueModel, stiffness_at

DT = 0.001  # fixed step, seconds


class ToolKind(Enum):
    BABCOCK = "babcock"
    MARYLAND = "maryland"


# deformation falloff radius per tool, mm
TOOL_RHO_MM = {ToolKind.BABCOCK: 8.0, ToolKind.MARYLAND: 5.0}


class ForceClassification(Enum):
    OK = "ok"
    WARN = "warn"
    FAIL = "fail"


@dataclass(frozen=True)
class HapticConfig:
    fail_threshold_n: float = 2.5
    warn_fraction: float = 0.8
    force_clamp_n: float = 3.3
    deform_depth_cap_mm: float = 10.0
    relaxation_tau_s: float = 0.1

    def __post_init__(self):
        if not (0.0 < self.warn_fraction < 1.0):
            raise ValueError("warn_fraction must lie in (0, 1)")
        if self.fail_threshold_n <= 0 or self.force_clamp_n <= 0:
            raise ValueError("thresholds must be positive")

    def effective_fail_threshold(self, tenderness: float) -> float:
        return self.fail_threshold_n * (1.0 - 0.5 * tenderness)


@dataclass(frozen=True)
class ProbeState:
    device_position: np.ndarray    # (3,) mm
    velocity: np.ndarray           # (3,) mm/s
    tool: ToolKind
    timestamp: float               # virtual seconds


@dataclass(frozen=True)
class ContactResult:
    in_contact: bool
    proxy: SurfacePoint
    penetration_depth: float       # mm, >= 0
    direction: np.ndarray          # (3,) unit outward normal at the proxy
    effective_material: Material
    force: np.ndarray              # (3,) N


def resolve_contact(bvh: Bvh, mesh: DeformableMesh, tissue: TissueModel,
                    probe: ProbeState) -> ContactResult:
    """Locate the proxy on the rest surface and sample the material there."""
    p = probe.device_position
    proxy, dist = closest_point(bvh, mesh, p)
    inside = bool(np.dot(p - proxy.position, proxy.pseudo_normal) <= 0.0)
    material = stiffness_at(tissue, proxy.position)
    return ContactResult(
        in_contact=inside,
        proxy=proxy,
        penetration_depth=dist if inside else 0.0,
        direction=proxy.pseudo_normal,
        effective_material=material,
        force=np.zeros(3),
    )


def compute_force(contact: ContactResult, probe: ProbeState,
                  config: HapticConfig) -> np.ndarray:
    """Spring-damper reaction along the contact normal, clamped to [0, clamp]."""
    if not contact.in_contact:
        return np.zeros(3)
    n_hat = contact.direction
    d = contact.penetration_depth
    d_dot = -float(np.dot(probe.velocity, n_hat))  # positive while pressing in
    mat = contact.effective_material
    magnitude = mat.stiffness_k * d + mat.damping_b * d_dot
    if magnitude <= 0.0:
        return np.zeros(3)
    if magnitude > config.force_clamp_n:
        magnitude = config.force_clamp_n
    return magnitude * n_hat


def classify_force(force: np.ndarray, material: Material,
                   config: HapticConfig) -> ForceClassification:
    """Band the force magnitude; the boundary itself counts as fail."""
    magnitude = float(np.linalg.norm(force))
    threshold = config.effective_fail_threshold(material.tenderness)
    if magnitude >= threshold:
        return ForceClassification.FAIL
    if magnitude >= config.warn_fraction * threshold:
        return ForceClassification.WARN
    return ForceClassification.OK


@dataclass
class DeformationField:
    """Visual displacement state, relaxed toward a Gaussian dent each step."""
    rho_mm: float
    tau_s: float
    depth_cap_mm: float
    displacements: np.ndarray                 # (N, 3) mm
    active: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @classmethod
    def allocate(cls, vertex_count: int, rho_mm: float, tau_s: float,
                 depth_cap_mm: float) -> "DeformationField":
        return cls(rho_mm, tau_s, depth_cap_mm, np.zeros((vertex_count, 3)))

    def max_displacement(self) -> float:
        if self.active.size == 0:
            return 0.0
        return float(np.linalg.norm(self.displacements[self.active], axis=1).max())


def apply_deformation(mesh: DeformableMesh, contact: ContactResult | None,
                      dt: float, deformation: DeformationField,
                      kdtree: cKDTree) -> None:
    """First-order relaxation of vertex displacements toward the contact dent.

    The dent target for vertex v is -n_hat * min(d, cap) * exp(-r^2/rho^2),
    zero beyond 4*rho from the proxy. Without contact all displacements decay
    with time constant tau. ``current_positions`` is updated in place.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    alpha = min(dt / deformation.tau_s, 1.0)
    u = deformation.displacements
    prev_active = deformation.active

    if contact is not None and contact.in_contact and contact.penetration_depth > 0.0:
        proxy_pos = contact.proxy.position
        idx = np.asarray(
            kdtree.query_ball_point(proxy_pos, 4.0 * deformation.rho_mm),
            dtype=np.int64)
        depth = min(contact.penetration_depth, deformation.depth_cap_mm)
        rel = mesh.rest_positions[idx] - proxy_pos
        r2 = np.einsum("ij,ij->i", rel, rel)
        w = np.exp(-r2 / (deformation.rho_mm ** 2))
        target = (-depth) * w[:, None] * contact.direction
        u[idx] += alpha * (target - u[idx])
        decay_only = np.setdiff1d(prev_active, idx, assume_unique=False)
        touched = np.union1d(prev_active, idx)
    else:
        decay_only = prev_active
        touched = prev_active

    if decay_only.size:
        u[decay_only] *= (1.0 - alpha)

    if touched.size:
        mags = np.einsum("ij,ij->i", u[touched], u[touched])
        keep = touched[mags > 1e-24]
        drop = touched[mags <= 1e-24]
        if drop.size:
            u[drop] = 0.0
        mesh.current_positions[touched] = mesh.rest_positions[touched] + u[touched]
        deformation.active = keep


@dataclass(frozen=True)
class SimFrame:
    index: int
    t: float
    probe: ProbeState
    contact: ContactResult
    classification: ForceClassification
    force_magnitude: float


class Simulation:
    """Owner of one scenario's haptic timeline.

    ``step`` consumes one probe sample per 1 ms grid point, in order:
    resolve contact, render force, classify, deform, record. After a fail
    classification the simulation halts and rejects further steps.
    """

    def __init__(self, mesh: DeformableMesh, tissue: TissueModel,
                 config: HapticConfig | None = None,
                 tool: ToolKind = ToolKind.BABCOCK,
                 bvh: Bvh | None = None):
        self.mesh = mesh
        self.tissue = tissue
        self.config = config or HapticConfig()
        self.tool = tool
        self.bvh = bvh if bvh is not None else build_bvh(mesh, use_rest=True)
        self.kdtree = cKDTree(mesh.rest_positions)
        self.deformation = DeformationField.allocate(
            mesh.vertex_count, TOOL_RHO_MM[tool], self.config.relaxation_tau_s,
            self.config.deform_depth_cap_mm)
        self.frame_index = 0
        self.halted = False
        self._prev_position: np.ndarray | None = None
        self._prev_diff = np.zeros(3)
        self._last_timestamp = -math.inf

    @property
    def time(self) -> float:
        return self.frame_index * DT

    def step(self, position, timestamp: float | None = None,
             tool: ToolKind | None = None) -> SimFrame:
        if self.halted:
            raise SequencingError("simulation halted after a fail classification")
        t = self.frame_index * DT
        if timestamp is not None:
            if timestamp <= self._last_timestamp:
                raise SequencingError(
                    f"input timestamp {timestamp} is not after {self._last_timestamp}")
            if abs(timestamp - t) > 1e-9:
                raise SequencingError(
                    f"input timestamp {timestamp} is off the 1 kHz grid point {t}")
        if tool is not None and tool != self.tool:
            # tool swaps change the deformation falloff radius only
            self.tool = tool
            self.deformation.rho_mm = TOOL_RHO_MM[tool]

        position = np.asarray(position, dtype=np.float64)
        if self._prev_position is None:
            diff = np.zeros(3)
        else:
            diff = (position - self._prev_position) / DT
        velocity = 0.5 * (diff + self._prev_diff)  # 2-sample average
        probe = ProbeState(position, velocity, self.tool, t)

        contact = resolve_contact(self.bvh, self.mesh, self.tissue, probe)
        force = compute_force(contact, probe, self.config)
        contact = ContactResult(
            in_contact=contact.in_contact,
            proxy=contact.proxy,
            penetration_depth=contact.penetration_depth,
            direction=contact.direction,
            effective_material=contact.effective_material,
            force=force,
        )
        classification = classify_force(force, contact.effective_material, self.config)
        apply_deformation(self.mesh, contact, DT, self.deformation, self.kdtree)

        frame = SimFrame(
            index=self.frame_index,
            t=t,
            probe=probe,
            contact=contact,
            classification=classification,
            force_magnitude=float(np.linalg.norm(force)),
        )
        self.frame_index += 1
        self._prev_position = position
        self._prev_diff = diff
        self._last_timestamp = t
        if classification is ForceClassification.FAIL:
            self.halted = True
        return frame


def step(sim: Simulation, probe_input: ProbeState) -> SimFrame:
    """Advance one grid step from an explicit probe sample."""
    return sim.step(probe_input.device_position, timestamp=probe_input.timestamp,
                    tool=probe_input.tool)
