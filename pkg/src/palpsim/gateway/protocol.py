"""Wire protocol ``palpsim/1``: text frames, one JSON document per message.

Every message is an object with a ``type`` tag, a per-direction
monotonically increasing ``seq``, and the payload fields listed in the type
table. Unknown type tags and malformed payloads raise ProtocolError so the
server can reply with an error message instead of silently dropping input.
"""

from __future__ import annotations

import json
import numbers

from ..errors import ProtocolError

PROTOCOL_VERSION = "palpsim/1"


def _is_vec3(value) -> bool:
    return (isinstance(value, (list, tuple)) and len(value) == 3
            and all(isinstance(v, numbers.Real) for v in value))


def _is_number(value) -> bool:
    return isinstance(value, numbers.Real) and not isinstance(value, bool)


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _optional(check):
    return lambda v: v is None or check(v)


# type tag -> {field: validator}; validators return bool
CLIENT_MESSAGES: dict[str, dict] = {
    "hello": {"version": lambda v: isinstance(v, str)},
    "start": {"seed": _is_int, "config": _optional(lambda v: isinstance(v, dict))},
    "probe": {"t": _is_number, "pos": _is_vec3, "tool": lambda v: isinstance(v, str)},
    "answer": {"choice": _optional(_is_int), "elapsed": _is_number},
    "advance": {},
    "ct_select": {"index": _is_int},
}

SERVER_MESSAGES: dict[str, dict] = {
    "state": {"phase": lambda v: isinstance(v, str),
              "detail": _optional(lambda v: isinstance(v, dict))},
    "frame": {
        "t": _is_number,
        "force": _is_vec3,
        "force_mag": _is_number,
        "classification": lambda v: v in ("ok", "warn", "fail"),
        "in_contact": lambda v: isinstance(v, bool),
        "proxy": _optional(lambda v: isinstance(v, dict)),
        "vertices": _optional(lambda v: isinstance(v, list)),
    },
    "warning": {"t": _is_number},
    "failed": {"t": _is_number},
    "questionnaire": {
        "scenario_index": _is_int,
        "prompt": lambda v: isinstance(v, str),
        "choices": lambda v: isinstance(v, list),
    },
    "ct_plane": {"index": _is_int, "plane": lambda v: isinstance(v, dict),
                 "contour": lambda v: isinstance(v, list)},
    "report": {"document": lambda v: isinstance(v, dict)},
    "error": {"message": lambda v: isinstance(v, str), "seq_ref": _optional(_is_int)},
    "busy": {},
}

DIRECTIONS = {"client": CLIENT_MESSAGES, "server": SERVER_MESSAGES}


def encode_message(mtype: str, payload: dict, seq: int, direction: str) -> str:
    table = DIRECTIONS[direction]
    if mtype not in table:
        raise ProtocolError(f"unknown {direction} message type '{mtype}'")
    _validate(mtype, payload, table[mtype])
    doc = {"type": mtype, "seq": seq}
    doc.update(payload)
    return json.dumps(doc, sort_keys=True)


def decode_message(text: str, direction: str) -> dict:
    """Parse and validate one message; returns the full document dict."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"invalid JSON: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ProtocolError("message must be a JSON object")
    mtype = doc.get("type")
    if not isinstance(mtype, str):
        raise ProtocolError("message is missing its 'type' tag")
    seq = doc.get("seq")
    if not _is_int(seq):
        raise ProtocolError(f"message '{mtype}' is missing an integer 'seq'")
    table = DIRECTIONS[direction]
    if mtype not in table:
        raise ProtocolError(f"unknown {direction} message type '{mtype}'")
    payload = {k: v for k, v in doc.items() if k not in ("type", "seq")}
    _validate(mtype, payload, table[mtype])
    return doc


def _validate(mtype: str, payload: dict, spec: dict) -> None:
    for field, check in spec.items():
        if field not in payload:
            # optional fields accept None and may be omitted
            if check(None) if _accepts_none(check) else False:
                continue
            raise ProtocolError(f"message '{mtype}' is missing field '{field}'")
        if not check(payload[field]):
            raise ProtocolError(f"message '{mtype}' has an invalid '{field}' field")
    extra = set(payload) - set(spec)
    if extra:
        raise ProtocolError(f"message '{mtype}' carries unknown fields {sorted(extra)}")


def _accepts_none(check) -> bool:
    try:
        return bool(check(None))
    except Exception:
        return False


class MessageWriter:
    """Stamps outgoing messages with a per-connection increasing sequence."""

    def __init__(self, direction: str):
        self.direction = direction
        self._seq = 0

    def encode(self, mtype: str, payload: dict | None = None) -> str:
        self._seq += 1
        return encode_message(mtype, payload or {}, self._seq, self.direction)


class SequenceChecker:
    """Validates that incoming sequence numbers strictly increase."""

    def __init__(self):
        self.last = 0

    def check(self, doc: dict) -> None:
        seq = doc["seq"]
        if seq <= self.last:
            raise ProtocolError(
                f"sequence number {seq} is not greater than {self.last}")
        self.last = seq
