"""Live session gateway: a WebSocket service streaming simulation state.

One trainee connection at a time drives a Session; extra connections get a
busy notice. Probe messages step the 1 kHz simulation (latest-wins within a
step, positions interpolated between messages), frames stream back at a
configurable divisor of the step rate, and warnings, failures,
questionnaires, and the final report are pushed as events. All simulation
mutation happens on the connection's handler thread; the protocol layer
only exchanges immutable JSON snapshots.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from websockets.sync.server import serve

from ..ctplane import CTStack, plane_mesh_contour, slice_plane
from ..errors import ConfigurationError, PalpsimError, ProtocolError, SequencingError
from ..geometry import load_mesh_file
from ..haptics import HapticConfig, ToolKind
from ..session import Phase, Session, SessionConfig
from ..tissue import Material, ScenarioKind, DEFAULT_BASE
from .protocol import PROTOCOL_VERSION, MessageWriter, SequenceChecker, decode_message

log = logging.getLogger("palpsim.gateway")

VERTEX_BLOCK_THRESHOLD_MM = 1e-3


@dataclass
class RuntimeConfig:
    host: str = "127.0.0.1"
    port: int = 8765
    mesh_path: str = ""
    ct_manifest_path: str | None = None
    report_dir: str = "."
    frame_rate_hz: int = 25
    real_time: bool = False
    session_overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (0 < self.frame_rate_hz <= 1000 and 1000 % self.frame_rate_hz == 0):
            raise ConfigurationError(
                f"frame_rate_hz must divide the 1000 Hz step rate, got {self.frame_rate_hz}")


def session_config_from_dict(seed: int, data: dict | None,
                             defaults: dict | None = None) -> SessionConfig:
    """Build a session config from the start message, over server defaults."""
    merged: dict = dict(defaults or {})
    merged.update(data or {})
    kinds = [ScenarioKind(k) for k in merged.get(
        "scenarios", [k.value for k in ScenarioKind])]
    haptics = HapticConfig(
        fail_threshold_n=float(merged.get("fail_threshold_n", 2.5)),
        warn_fraction=float(merged.get("warn_fraction", 0.8)),
        force_clamp_n=float(merged.get("force_clamp_n", 3.3)),
    )
    base = Material(
        stiffness_k=float(merged.get("base_k_n_per_mm", DEFAULT_BASE.stiffness_k)),
        damping_b=float(merged.get("base_b_ns_per_mm", DEFAULT_BASE.damping_b)),
    )
    config = SessionConfig(
        seed=seed,
        scenario_set=kinds,
        haptics=haptics,
        tool=ToolKind(merged.get("tool", ToolKind.BABCOCK.value)),
        base_material=base,
        time_full_s=float(merged.get("time_full_s", 30.0)),
        time_limit_s=float(merged.get("time_limit_s", 120.0)),
        require_calibration=bool(merged.get("require_calibration", True)),
        scenario_overrides=dict(merged.get("scenario_overrides", {})),
        student=merged.get("student"),
    )
    return config


class _Connection:
    """Per-trainee state: session, stream decimation, vertex block tracking."""

    def __init__(self, server: "GatewayServer", socket):
        self.server = server
        self.socket = socket
        self.writer = MessageWriter("server")
        self.checker = SequenceChecker()
        self.session: Session | None = None
        self.stream_every = 1000 // server.config.frame_rate_hz
        self.last_sent_vertices: np.ndarray | None = None
        self.report_sent = False
        self.wall_start: float | None = None

    def send(self, mtype: str, payload: dict | None = None) -> None:
        self.socket.send(self.writer.encode(mtype, payload))

    # -- dispatch -----------------------------------------------------------

    def handle(self, raw: str) -> None:
        try:
            doc = decode_message(raw, "client")
        except ProtocolError as exc:
            seq_ref = None
            try:
                maybe = json.loads(raw)
                if isinstance(maybe, dict) and isinstance(maybe.get("seq"), int):
                    seq_ref = maybe["seq"]
            except (json.JSONDecodeError, TypeError):
                pass
            self.send("error", {"message": str(exc), "seq_ref": seq_ref})
            return
        try:
            self.checker.check(doc)
        except ProtocolError as exc:
            self.send("error", {"message": str(exc), "seq_ref": doc["seq"]})
            return

        handler = getattr(self, f"_on_{doc['type']}", None)
        try:
            handler(doc)
        except (SequencingError, ConfigurationError, PalpsimError) as exc:
            self.send("error", {"message": str(exc), "seq_ref": doc["seq"]})

    def _on_hello(self, doc: dict) -> None:
        # version compatibility was already settled before the loop
        self.send("state", {"phase": "ready", "detail": {"version": PROTOCOL_VERSION}})

    def _on_start(self, doc: dict) -> None:
        if self.session is not None and self.session.phase is not Phase.FINISHED:
            raise SequencingError("a session is already running")
        config = session_config_from_dict(
            doc["seed"], doc.get("config"), self.server.config.session_overrides)
        self.session = Session(config, self.server.mesh)
        self.report_sent = False
        self.last_sent_vertices = None
        self.wall_start = time.monotonic()
        detail = {
            "scenario_count": len(self.session.order),
            "calibration_targets": [
                {"position": t.position.tolist(), "triangle_id": int(t.triangle_id)}
                for t in self.session.calibration_targets
            ],
        }
        self.send("state", {"phase": self.session.phase.value, "detail": detail})

    def _require_session(self) -> Session:
        if self.session is None:
            raise SequencingError("no session started")
        return self.session

    def _on_probe(self, doc: dict) -> None:
        session = self._require_session()
        tool = ToolKind(doc["tool"])
        result = session.feed(doc["t"], doc["pos"], tool)
        for frame in result.frames:
            if frame.index % self.stream_every == 0:
                self._send_frame(frame)
        self._emit_events(result.events)
        if self.server.config.real_time and self.wall_start is not None:
            # pace a flooding client down to the virtual clock
            ahead = doc["t"] - (time.monotonic() - self.wall_start)
            if ahead > 0:
                time.sleep(min(ahead, 0.05))

    def _on_advance(self, doc: dict) -> None:
        session = self._require_session()
        self._emit_events(session.advance())

    def _on_answer(self, doc: dict) -> None:
        session = self._require_session()
        score, events = session.submit_answer(doc["choice"], doc["elapsed"])
        self.send("state", {"phase": session.phase.value,
                            "detail": {"score": score}})
        self._emit_events(events)

    def _on_ct_select(self, doc: dict) -> None:
        stack = self.server.ct_stack
        if stack is None:
            raise SequencingError("no CT stack is configured")
        index = doc["index"]
        if not 0 <= index < stack.slice_count:
            raise SequencingError(
                f"ct_select index {index} out of range [0, {stack.slice_count})")
        plane = slice_plane(stack, index)
        mesh = (self.session.scenario_mesh
                if self.session is not None and self.session.scenario_mesh is not None
                else self.server.mesh)
        contour = [
            {"closed": p.closed, "points": p.points.tolist()}
            for p in plane_mesh_contour(mesh, plane)
        ]
        self.send("ct_plane", {"index": index, "plane": plane.to_dict(),
                               "contour": contour})

    # -- outbound -----------------------------------------------------------

    def _send_frame(self, frame) -> None:
        session = self.session
        proxy = None
        if frame.contact.proxy is not None:
            proxy = {
                "position": frame.contact.proxy.position.tolist(),
                "triangle_id": int(frame.contact.proxy.triangle_id),
            }
        vertices = None
        current = session.scenario_mesh.current_positions
        if self.last_sent_vertices is None or self.last_sent_vertices.shape != current.shape:
            changed = True
        else:
            delta = np.abs(current - self.last_sent_vertices).max()
            changed = bool(delta > VERTEX_BLOCK_THRESHOLD_MM)
        if changed:
            vertices = current.ravel().tolist()
            self.last_sent_vertices = current.copy()
        self.send("frame", {
            "t": frame.t,
            "force": frame.contact.force.tolist(),
            "force_mag": frame.force_magnitude,
            "classification": frame.classification.value,
            "in_contact": frame.contact.in_contact,
            "proxy": proxy,
            "vertices": vertices,
        })

    def _emit_events(self, events) -> None:
        session = self.session
        for event in events:
            if event.type == "warning":
                self.send("warning", {"t": event.payload["t"]})
            elif event.type == "failed":
                self.send("failed", {"t": event.payload["t"]})
            elif event.type == "questionnaire":
                self.send("questionnaire", event.payload)
            elif event.type == "calibration":
                self.send("state", {"phase": Phase.CALIBRATION.value,
                                    "detail": event.payload})
            elif event.type == "phase":
                detail = {k: v for k, v in event.payload.items() if k != "phase"}
                self.send("state", {"phase": event.payload["phase"],
                                    "detail": detail or None})
                if event.payload["phase"] == Phase.SCENARIO.value:
                    self.last_sent_vertices = None
        if (session is not None and session.phase is Phase.FINISHED
                and not self.report_sent):
            document = session.report_document()
            self.send("report", {"document": document})
            self.server.persist_report(document)
            self.report_sent = True


class GatewayServer:
    def __init__(self, config: RuntimeConfig):
        self.config = config
        self.mesh = load_mesh_file(config.mesh_path, mesh_id=Path(config.mesh_path).stem)
        self.ct_stack = (CTStack.from_manifest(config.ct_manifest_path)
                         if config.ct_manifest_path else None)
        self._trainee_lock = threading.Lock()
        self._server = None

    def persist_report(self, document: dict) -> Path:
        from ..session.report import canonical_json

        out_dir = Path(self.config.report_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / f"report_{document['session_id']}.json"
        path.write_text(canonical_json(document), encoding="utf-8")
        log.info("report persisted to %s", path)
        return path

    def _handshake(self, socket, writer: MessageWriter) -> dict | None:
        """First message must be a hello with a compatible protocol version."""
        raw = socket.recv()
        try:
            doc = decode_message(raw, "client")
        except ProtocolError as exc:
            socket.send(writer.encode("error", {"message": str(exc), "seq_ref": None}))
            return None
        if doc["type"] != "hello":
            socket.send(writer.encode(
                "error", {"message": "expected hello first", "seq_ref": doc["seq"]}))
            return None
        if doc["version"] != PROTOCOL_VERSION:
            socket.send(writer.encode("error", {
                "message": f"protocol version mismatch: server speaks {PROTOCOL_VERSION}, "
                           f"client sent {doc['version']}",
                "seq_ref": doc["seq"],
            }))
            return None
        return doc

    def _handler(self, socket) -> None:
        if not self._trainee_lock.acquire(blocking=False):
            writer = MessageWriter("server")
            socket.send(writer.encode("busy", {}))
            socket.close()
            return
        try:
            conn = _Connection(self, socket)
            hello = self._handshake(socket, conn.writer)
            if hello is None:
                socket.close()
                return
            conn.checker.last = hello["seq"]
            conn.send("state", {"phase": "ready",
                                "detail": {"version": PROTOCOL_VERSION,
                                           "ct_slices": (self.ct_stack.slice_count
                                                         if self.ct_stack else 0)}})
            while True:
                try:
                    raw = socket.recv()
                except Exception:
                    break
                conn.handle(raw)
        finally:
            self._trainee_lock.release()

    def serve_forever(self) -> None:
        with serve(self._handler, self.config.host, self.config.port) as server:
            self._server = server
            server.serve_forever()

    def start_background(self):
        """Serve on a daemon thread; binds port 0 to a free port.

        Returns (bound port, shutdown callable).
        """
        import socket as socket_module

        sock = socket_module.create_server((self.config.host, self.config.port))
        port = sock.getsockname()[1]
        server = serve(self._handler, sock=sock)
        self._server = server
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        return port, server.shutdown
