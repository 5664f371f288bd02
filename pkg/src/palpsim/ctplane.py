"""CT slice-stack bookkeeping and the section-plane overlay.

A stack of slice images carries a rigid-plus-uniform-scale registration
into mesh coordinates. Each slice index maps to a 3D section plane; the
plane's intersection with the liver mesh yields polyline contours the UI
draws both over the slice image and in the 3D view.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .geometry import DeformableMesh

CHAIN_TOLERANCE_MM = 1e-6


@dataclass(frozen=True)
class SectionPlane:
    origin: np.ndarray     # (3,) mm
    normal: np.ndarray     # (3,) unit
    basis_u: np.ndarray    # (3,) unit, in-plane
    basis_v: np.ndarray    # (3,) unit, in-plane; normal = u x v

    @classmethod
    def from_origin_normal(cls, origin, normal) -> "SectionPlane":
        origin = np.asarray(origin, dtype=np.float64)
        normal = np.asarray(normal, dtype=np.float64)
        n = np.linalg.norm(normal)
        if n == 0:
            raise ConfigurationError("plane normal must be non-zero")
        normal = normal / n
        helper = np.zeros(3)
        helper[int(np.argmin(np.abs(normal)))] = 1.0
        u = np.cross(helper, normal)
        u /= np.linalg.norm(u)
        v = np.cross(normal, u)
        return cls(origin, normal, u, v)

    def to_dict(self) -> dict:
        return {
            "origin": self.origin.tolist(),
            "normal": self.normal.tolist(),
            "basis_u": self.basis_u.tolist(),
            "basis_v": self.basis_v.tolist(),
        }


@dataclass
class CTStack:
    slice_spacing: float                  # mm between slices in stack space
    axis: np.ndarray                      # (3,) unit stack normal in mesh space
    registration: np.ndarray              # (4, 4) stack -> mesh, rigid + uniform scale
    slices: list[str] = field(default_factory=list)   # opaque image refs

    def __post_init__(self):
        self.axis = np.asarray(self.axis, dtype=np.float64)
        n = np.linalg.norm(self.axis)
        if n == 0:
            raise ConfigurationError("CT stack axis must be non-zero")
        self.axis = self.axis / n
        self.registration = np.asarray(self.registration, dtype=np.float64).reshape(4, 4)
        if abs(np.linalg.det(self.registration)) < 1e-12:
            raise ConfigurationError("CT registration must be invertible")
        if self.slice_spacing <= 0:
            raise ConfigurationError("slice_spacing must be positive")
        if not self.slices:
            raise ConfigurationError("CT stack needs at least one slice")

    @property
    def slice_count(self) -> int:
        return len(self.slices)

    @classmethod
    def from_manifest(cls, path) -> "CTStack":
        path = Path(path)
        data = json.loads(path.read_text(encoding="utf-8"))
        try:
            stack = cls(
                slice_spacing=float(data["spacing_mm"]),
                axis=np.asarray(data["axis"], dtype=np.float64),
                registration=np.asarray(data["registration"], dtype=np.float64),
                slices=[str(s) for s in data["slices"]],
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigurationError(f"{path.name}: malformed CT manifest ({exc})") from exc
        # image refs resolve relative to the manifest
        stack.slices = [str((path.parent / s)) for s in stack.slices]
        return stack


def slice_plane(stack: CTStack, index: int) -> SectionPlane:
    """Section plane of one slice, registered into mesh coordinates."""
    if not 0 <= index < stack.slice_count:
        raise IndexError(
            f"slice index {index} out of range [0, {stack.slice_count})")
    stack_point = np.array([0.0, 0.0, index * stack.slice_spacing, 1.0])
    origin = (stack.registration @ stack_point)[:3]
    return SectionPlane.from_origin_normal(origin, stack.axis)


def _segment_endpoint_key(kind: str, a: int, b: int | None = None):
    if kind == "v":
        return ("v", a)
    return ("e", (a, b) if a < b else (b, a))


@dataclass
class Polyline:
    points: np.ndarray       # (K, 3), first != last even when closed
    closed: bool

    def length(self) -> float:
        pts = self.points
        if len(pts) < 2:
            return 0.0
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1).sum()
        if self.closed:
            seg += float(np.linalg.norm(pts[0] - pts[-1]))
        return float(seg)


def plane_mesh_contour(mesh: DeformableMesh, plane: SectionPlane,
                       use_rest: bool = True) -> list[Polyline]:
    """Intersection contours of the plane with the mesh, chained into polylines.

    Each triangle crossing the plane contributes one segment; segments chain
    by shared endpoints. Crossing points are keyed by the mesh edge or vertex
    they lie on, so endpoints from adjacent triangles match exactly (well
    inside the 1e-6 mm tolerance). Triangles lying in the plane contribute
    the boundary edges of the coplanar patch.
    """
    positions = mesh.rest_positions if use_rest else mesh.current_positions
    tris = mesh.triangles
    signed = (positions - plane.origin) @ plane.normal

    point_for: dict = {}
    segments: list[tuple] = []

    def vertex_point(vid: int):
        key = _segment_endpoint_key("v", vid)
        if key not in point_for:
            point_for[key] = positions[vid]
        return key

    def edge_point(a: int, b: int):
        key = _segment_endpoint_key("e", a, b)
        if key not in point_for:
            u, v = key[1]
            t = signed[u] / (signed[u] - signed[v])
            point_for[key] = positions[u] + t * (positions[v] - positions[u])
        return key

    coplanar_edge_count: dict = {}
    for a, b, c in tris:
        sa, sb, sc = signed[a], signed[b], signed[c]
        zero = (sa == 0.0, sb == 0.0, sc == 0.0)
        n_zero = sum(zero)
        verts = (int(a), int(b), int(c))
        signs = (sa, sb, sc)

        if n_zero == 3:
            # coplanar triangle: tally its edges, patch boundary emitted later
            for u, v in ((a, b), (b, c), (c, a)):
                key = (u, v) if u < v else (v, u)
                coplanar_edge_count[key] = coplanar_edge_count.get(key, 0) + 1
            continue
        if n_zero == 2:
            # one edge exactly in the plane; emit once (from the positive side)
            off = [i for i in range(3) if not zero[i]][0]
            if signs[off] > 0:
                u, v = [verts[i] for i in range(3) if i != off]
                segments.append((vertex_point(u), vertex_point(v)))
            continue
        if n_zero == 1:
            zi = zero.index(True)
            others = [i for i in range(3) if i != zi]
            s1, s2 = signs[others[0]], signs[others[1]]
            if s1 * s2 < 0:
                # vertex on the plane, other two straddling
                k1 = vertex_point(verts[zi])
                k2 = edge_point(verts[others[0]], verts[others[1]])
                segments.append((k1, k2))
            continue
        # general case: two vertices one side, one the other
        neg = [i for i in range(3) if signs[i] < 0.0]
        pos = [i for i in range(3) if signs[i] > 0.0]
        if not neg or not pos:
            continue
        lone = neg[0] if len(neg) == 1 else pos[0]
        rest = [i for i in range(3) if i != lone]
        k1 = edge_point(verts[lone], verts[rest[0]])
        k2 = edge_point(verts[lone], verts[rest[1]])
        segments.append((k1, k2))

    # boundary edges of the coplanar patch
    for (u, v), count in coplanar_edge_count.items():
        if count == 1:
            segments.append((vertex_point(int(u)), vertex_point(int(v))))

    segments = [(k1, k2) for k1, k2 in segments
                if not np.array_equal(point_for[k1], point_for[k2])]

    # chain segments into polylines by endpoint key
    adjacency: dict = {}
    for si, (k1, k2) in enumerate(segments):
        adjacency.setdefault(k1, []).append(si)
        adjacency.setdefault(k2, []).append(si)

    visited = [False] * len(segments)
    polylines: list[Polyline] = []
    for start in range(len(segments)):
        if visited[start]:
            continue
        visited[start] = True
        k1, k2 = segments[start]
        chain = [k1, k2]
        # extend forward from k2, then backward from k1
        for endpoint_index in (1, 0):
            while True:
                tip = chain[-1] if endpoint_index == 1 else chain[0]
                candidates = [si for si in adjacency.get(tip, []) if not visited[si]]
                if not candidates:
                    break
                si = min(candidates)
                visited[si] = True
                a, b = segments[si]
                nxt = b if a == tip else a
                if endpoint_index == 1:
                    chain.append(nxt)
                else:
                    chain.insert(0, nxt)
        closed = len(chain) > 2 and chain[0] == chain[-1]
        if closed:
            chain = chain[:-1]
        pts = np.array([point_for[k] for k in chain])
        polylines.append(Polyline(points=pts, closed=closed))
    return polylines
