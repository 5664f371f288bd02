"""Training session flow: calibration gate, scenario ordering, traces, reports."""

from .report import (
    REPORT_SCHEMA,
    SCHEMA_VERSION,
    canonical_json,
    round_floats,
    session_id_for,
    validate_report,
)
from .state import (
    CalibrationOutcome,
    FeedResult,
    Phase,
    Question,
    ScenarioRecord,
    Session,
    SessionConfig,
    SessionEvent,
    default_questionnaire_bank,
    evaluate_calibration,
    on_fail,
    scenario_order,
    score_answer,
    start_session,
)
from .tape import TapeRecord, parse_tape, read_tape, tape_from_positions, write_tape
from .trace import ForceTrace, Peak, detect_peaks, record_step, trace_from_arrays

__all__ = [
    "REPORT_SCHEMA",
    "SCHEMA_VERSION",
    "canonical_json",
    "round_floats",
    "session_id_for",
    "validate_report",
    "CalibrationOutcome",
    "FeedResult",
    "Phase",
    "Question",
    "ScenarioRecord",
    "Session",
    "SessionConfig",
    "SessionEvent",
    "default_questionnaire_bank",
    "evaluate_calibration",
    "on_fail",
    "scenario_order",
    "score_answer",
    "start_session",
    "TapeRecord",
    "parse_tape",
    "read_tape",
    "tape_from_positions",
    "write_tape",
    "ForceTrace",
    "Peak",
    "detect_peaks",
    "record_step",
    "trace_from_arrays",
]
