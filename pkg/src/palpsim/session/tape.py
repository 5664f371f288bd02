"""Probe input tapes: JSON-lines files with one record per step.

Each line is ``{"t": seconds, "pos": [x, y, z], "tool": "babcock"}``; the
``tool`` field is optional and defaults to the Babcock grasper.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import TapeError
from ..haptics import ToolKind


@dataclass(frozen=True)
class TapeRecord:
    t: float
    pos: tuple[float, float, float]
    tool: ToolKind = ToolKind.BABCOCK


def parse_tape(text: str, source: str = "<tape>") -> list[TapeRecord]:
    records: list[TapeRecord] = []
    last_t = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TapeError(f"{source} line {lineno}: invalid JSON ({exc.msg})") from exc
        if not isinstance(obj, dict):
            raise TapeError(f"{source} line {lineno}: expected an object")
        try:
            t = float(obj["t"])
            pos = obj["pos"]
            x, y, z = (float(pos[0]), float(pos[1]), float(pos[2]))
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise TapeError(
                f"{source} line {lineno}: record needs numeric 't' and 3-element 'pos'") from exc
        tool_name = obj.get("tool", ToolKind.BABCOCK.value)
        try:
            tool = ToolKind(tool_name)
        except ValueError as exc:
            raise TapeError(f"{source} line {lineno}: unknown tool '{tool_name}'") from exc
        if last_t is not None and t <= last_t:
            raise TapeError(f"{source} line {lineno}: timestamps must strictly increase")
        last_t = t
        records.append(TapeRecord(t, (x, y, z), tool))
    if not records:
        raise TapeError(f"{source}: tape is empty")
    return records


def read_tape(path) -> list[TapeRecord]:
    path = Path(path)
    return parse_tape(path.read_text(encoding="utf-8"), source=path.name)


def write_tape(path, records) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            t = rec.t if isinstance(rec, TapeRecord) else rec[0]
            pos = rec.pos if isinstance(rec, TapeRecord) else rec[1]
            tool = rec.tool if isinstance(rec, TapeRecord) else ToolKind.BABCOCK
            fh.write(json.dumps({
                "t": round(float(t), 9),
                "pos": [round(float(c), 9) for c in pos],
                "tool": tool.value,
            }) + "\n")


def tape_from_positions(positions: np.ndarray, dt: float = 0.001,
                        tool: ToolKind = ToolKind.BABCOCK) -> list[TapeRecord]:
    """Wrap an (N, 3) position array as a tape sampled on the step grid."""
    return [
        TapeRecord(i * dt, (float(p[0]), float(p[1]), float(p[2])), tool)
        for i, p in enumerate(np.asarray(positions, dtype=np.float64))
    ]
