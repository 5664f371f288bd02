"""Headless session replay: run a probe tape through a full single-scenario
session at maximum virtual speed and emit the assessment report."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..geometry import DeformableMesh
from ..haptics import HapticConfig
from ..session import Phase, Session, SessionConfig, TapeRecord
from ..session.trace import ForceTrace
from ..tissue import Material, ScenarioKind, DEFAULT_BASE


@dataclass
class ReplayResult:
    report_text: str
    report: dict
    trace: ForceTrace
    frames: list = field(default_factory=list)
    events: list = field(default_factory=list)


def run_replay(mesh: DeformableMesh, tape: list[TapeRecord], scenario: ScenarioKind,
               seed: int, *,
               haptics: HapticConfig | None = None,
               base_material: Material = DEFAULT_BASE,
               scenario_overrides: dict | None = None,
               answer: int | None = None,
               answer_elapsed_s: float = 0.0,
               report_path: str | None = None,
               student: str | None = None,
               collect_frames: bool = False) -> ReplayResult:
    """Deterministic single-scenario replay; identical inputs give identical reports.

    The calibration gate is skipped (there is no interactive student), the
    tape drives the palpation phase, and the questionnaire is answered with
    the supplied choice (or left unanswered for a zero score).
    """
    config = SessionConfig(
        seed=seed,
        scenario_set=[scenario],
        haptics=haptics or HapticConfig(),
        base_material=base_material,
        require_calibration=False,
        scenario_overrides=scenario_overrides or {},
        student=student,
        report_path=report_path,
    )
    session = Session(config, mesh)
    frames: list = []
    events: list = []
    for record in tape:
        if session.phase is not Phase.SCENARIO:
            break
        result = session.feed(record.t, record.pos, record.tool)
        if collect_frames:
            frames.extend(result.frames)
        events.extend(result.events)
    trace = session.trace
    if session.phase is Phase.SCENARIO:
        events.extend(session.advance())
    if session.phase is Phase.QUESTIONNAIRE:
        _, more = session.submit_answer(answer, answer_elapsed_s)
        events.extend(more)
    text = session.finalize_report()
    return ReplayResult(
        report_text=text,
        report=session.report_document(),
        trace=trace,
        frames=frames,
        events=events,
    )
