"""Training session state machine.

A session runs: calibration gate -> scenarios in seeded random order, each
scenario being palpation followed by a timed diagnosis question -> final
report. Probe input arrives at arbitrary rates; the session interpolates
device positions onto the fixed 1 kHz grid and feeds the active simulation,
so a session is a deterministic function of (config, mesh, input tape).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..errors import ConfigurationError, SequencingError
from ..geometry import DeformableMesh, require_watertight
from ..haptics import (
    DT,
    ForceClassification,
    HapticConfig,
    Simulation,
    ToolKind,
)
from ..tissue import (
    DEFAULT_BASE,
    Material,
    ScenarioKind,
    ScenarioOverrides,
    TissueModel,
    make_scenario,
    random_surface_points,
)
from .report import SCHEMA_VERSION, canonical_json, session_id_for, validate_report
from .trace import ForceTrace, Peak, detect_peaks, record_step


class Phase(Enum):
    CALIBRATION = "calibration"
    SCENARIO = "scenario"
    QUESTIONNAIRE = "questionnaire"
    FINISHED = "finished"


@dataclass(frozen=True)
class Question:
    prompt: str
    choices: tuple[str, ...]
    correct_index: int


def default_questionnaire_bank() -> dict[ScenarioKind, Question]:
    """One diagnosis question per scenario over the full condition list."""
    choices = tuple(kind.value for kind in ScenarioKind)
    return {
        kind: Question(
            prompt="Which condition best matches the liver you just examined?",
            choices=choices,
            correct_index=i,
        )
        for i, kind in enumerate(ScenarioKind)
    }


@dataclass
class SessionConfig:
    seed: int
    scenario_set: list[ScenarioKind]
    haptics: HapticConfig = field(default_factory=HapticConfig)
    tool: ToolKind = ToolKind.BABCOCK
    base_material: Material = DEFAULT_BASE
    questionnaire_bank: dict[ScenarioKind, Question] = field(
        default_factory=default_questionnaire_bank)
    time_full_s: float = 30.0
    time_limit_s: float = 120.0
    require_calibration: bool = True
    calibration_target_count: int = 3
    calibration_visit_radius_mm: float = 3.0
    calibration_band: tuple[float, float] = (0.2, 0.8)
    calibration_band_eps_n: float = 0.05
    scenario_overrides: dict[str, dict] = field(default_factory=dict)
    student: str | None = None
    report_path: str | None = None

    def __post_init__(self):
        if not self.scenario_set:
            raise ConfigurationError("scenario_set must not be empty")
        if not self.time_full_s < self.time_limit_s:
            raise ConfigurationError("time_full_s must be below time_limit_s")
        for kind in self.scenario_set:
            if kind not in self.questionnaire_bank:
                raise ConfigurationError(f"questionnaire_bank is missing {kind.value}")

    def echo(self) -> dict:
        return {
            "scenario_set": [k.value for k in self.scenario_set],
            "tool": self.tool.value,
            "fail_threshold_n": self.haptics.fail_threshold_n,
            "warn_fraction": self.haptics.warn_fraction,
            "force_clamp_n": self.haptics.force_clamp_n,
            "base_k_n_per_mm": self.base_material.stiffness_k,
            "base_b_ns_per_mm": self.base_material.damping_b,
            "time_full_s": self.time_full_s,
            "time_limit_s": self.time_limit_s,
            "require_calibration": self.require_calibration,
            "scenario_overrides": self.scenario_overrides,
        }


def scenario_order(seed: int, scenario_set: list[ScenarioKind]) -> list[ScenarioKind]:
    """Seeded Fisher-Yates permutation of the configured scenarios."""
    rng = np.random.default_rng(seed & 0xFFFFFFFFFFFFFFFF)
    order = list(scenario_set)
    for i in range(len(order) - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        order[i], order[j] = order[j], order[i]
    return order


def score_answer(correct: bool, elapsed_s: float, time_full_s: float,
                 time_limit_s: float) -> float:
    """10 within the full-credit window, linear down to 5 at the limit, 0 after."""
    if not correct:
        return 0.0
    if elapsed_s <= time_full_s:
        return 10.0
    if elapsed_s > time_limit_s:
        return 0.0
    return 10.0 - 5.0 * (elapsed_s - time_full_s) / (time_limit_s - time_full_s)


@dataclass
class CalibrationOutcome:
    passed: bool
    reasons: list[str]
    metrics: dict


def evaluate_calibration(trace: ForceTrace, targets, config: SessionConfig) -> CalibrationOutcome:
    """Gate check: all targets visited, no damaging force, controlled pressure.

    Passes when (a) every target was approached within the visit radius,
    (b) no sample reached the fail band, and (c) the RMS in-contact force
    sits inside the configured fraction band of the threshold.
    """
    reasons: list[str] = []
    threshold = config.haptics.effective_fail_threshold(config.base_material.tenderness)
    positions = trace.positions
    magnitudes = trace.magnitudes

    target_misses = []
    for i, target in enumerate(targets):
        if len(positions) == 0:
            target_misses.append(i)
            continue
        d = np.linalg.norm(positions - target.position, axis=1).min()
        if d > config.calibration_visit_radius_mm:
            target_misses.append(i)
    for i in target_misses:
        reasons.append(f"target {i} not visited within "
                       f"{config.calibration_visit_radius_mm:g} mm")

    fail_samples = int((magnitudes >= threshold).sum()) if len(magnitudes) else 0
    if fail_samples:
        reasons.append(f"{fail_samples} samples reached the fail threshold")

    in_contact = magnitudes[magnitudes > 0.0] if len(magnitudes) else np.array([])
    rms = float(np.sqrt(np.mean(in_contact ** 2))) if in_contact.size else 0.0
    lo = config.calibration_band[0] * threshold
    hi = config.calibration_band[1] * threshold
    eps = config.calibration_band_eps_n
    band_error = max(0.0, lo - rms, rms - hi)
    if band_error > eps:
        reasons.append(f"RMS contact force {rms:.3g} N outside band "
                       f"[{lo:.3g}, {hi:.3g}] N")

    return CalibrationOutcome(
        passed=not reasons,
        reasons=reasons,
        metrics={
            "targets_missed": target_misses,
            "fail_samples": fail_samples,
            "rms_contact_force_n": rms,
            "band_error_n": band_error,
        },
    )


@dataclass
class ScenarioRecord:
    kind: ScenarioKind
    order_index: int
    peaks: list[Peak] = field(default_factory=list)
    warning_count: int = 0
    failed: bool = False
    diagnosis_chosen: int | None = None
    correct: bool = False
    elapsed_s: float = 0.0
    answer_elapsed_s: float | None = None
    score: float = 0.0
    trace_50hz: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "order_index": self.order_index,
            "peaks": [
                {
                    "t": p.t,
                    "force_n": p.magnitude,
                    "prominence_n": p.prominence,
                    "position_mm": list(p.position),
                }
                for p in self.peaks
            ],
            "warning_count": self.warning_count,
            "failed": self.failed,
            "diagnosis_chosen": self.diagnosis_chosen,
            "correct": self.correct,
            "elapsed_s": self.elapsed_s,
            "answer_elapsed_s": self.answer_elapsed_s,
            "score": self.score,
            "trace_50hz": self.trace_50hz,
        }


@dataclass
class SessionEvent:
    type: str
    payload: dict = field(default_factory=dict)


@dataclass
class FeedResult:
    frames: list
    events: list[SessionEvent]


class Session:
    """Single-owner training session; all mutation happens on one timeline."""

    def __init__(self, config: SessionConfig, mesh: DeformableMesh):
        require_watertight(mesh, context="session")
        self.config = config
        self.base_mesh = mesh
        self.order = scenario_order(config.seed, config.scenario_set)
        self.records: list[ScenarioRecord] = []
        self.calibration_attempts = 0
        self.calibration_passed = False
        self.calibration_last: CalibrationOutcome | None = None

        self.sim: Simulation | None = None
        self.tissue: TissueModel | None = None
        self.scenario_mesh: DeformableMesh | None = None
        self.trace = ForceTrace()
        self._scenario_index = -1
        self._prev_class = ForceClassification.OK
        self._input_anchor: tuple[float, np.ndarray] | None = None
        self._phase_t_offset: float | None = None
        self._question_asked_at: float | None = None

        if config.require_calibration:
            self.phase = Phase.CALIBRATION
            rng = np.random.default_rng([config.seed & 0xFFFFFFFFFFFFFFFF, 0xCA11])
            self.calibration_targets = random_surface_points(
                mesh, rng, config.calibration_target_count)
            self._start_calibration_sim()
        else:
            self.calibration_targets = []
            self.phase = Phase.SCENARIO
            self._enter_scenario(0)

    # -- phase transitions ---------------------------------------------------

    def _start_calibration_sim(self) -> None:
        tissue = TissueModel(base=self.config.base_material)
        self.tissue = tissue
        self.scenario_mesh = self.base_mesh.copy()
        self.sim = Simulation(self.scenario_mesh, tissue, self.config.haptics,
                              tool=self.config.tool)
        self.trace = ForceTrace()
        self._reset_input_tracking()

    def _scenario_seed(self, order_index: int) -> int:
        ss = np.random.SeedSequence(entropy=self.config.seed & 0xFFFFFFFFFFFFFFFF,
                                    spawn_key=(order_index,))
        return int(ss.generate_state(1, dtype=np.uint64)[0])

    def _enter_scenario(self, order_index: int) -> None:
        self._scenario_index = order_index
        kind = self.order[order_index]
        overrides = ScenarioOverrides.from_dict(
            self.config.scenario_overrides.get(kind.value))
        tissue, mesh = make_scenario(
            kind, self.base_mesh, self._scenario_seed(order_index),
            base=self.config.base_material, overrides=overrides)
        self.tissue = tissue
        self.scenario_mesh = mesh
        self.sim = Simulation(mesh, tissue, self.config.haptics, tool=self.config.tool)
        self.trace = ForceTrace()
        self.records.append(ScenarioRecord(kind=kind, order_index=order_index))
        self.phase = Phase.SCENARIO
        self._prev_class = ForceClassification.OK
        self._reset_input_tracking()

    def _reset_input_tracking(self) -> None:
        self._input_anchor = None
        self._phase_t_offset = None

    @property
    def current_record(self) -> ScenarioRecord:
        return self.records[self._scenario_index]

    @property
    def current_kind(self) -> ScenarioKind | None:
        if self._scenario_index < 0 or self._scenario_index >= len(self.order):
            return None
        return self.order[self._scenario_index]

    def _question_for_current(self) -> Question:
        return self.config.questionnaire_bank[self.current_kind]

    # -- probe input ---------------------------------------------------------

    def feed(self, t: float, position, tool: ToolKind | None = None) -> FeedResult:
        """Consume one timed probe sample, stepping every grid point it crosses.

        Device positions between consecutive samples are linearly
        interpolated; several samples inside one grid cell coalesce to the
        latest. Returns the frames stepped plus any warn/fail/phase events.
        """
        if self.phase not in (Phase.CALIBRATION, Phase.SCENARIO):
            raise SequencingError(f"probe input not accepted in phase {self.phase.value}")
        position = np.asarray(position, dtype=np.float64)

        if self._phase_t_offset is None:
            self._phase_t_offset = t
        t_local = t - self._phase_t_offset
        if self._input_anchor is not None and t_local <= self._input_anchor[0]:
            raise SequencingError(
                f"probe timestamp {t} is not after the previous input")

        frames = []
        events: list[SessionEvent] = []
        sim = self.sim
        if self._input_anchor is None:
            # first sample of the phase lands exactly on grid point 0
            frame = sim.step(position, timestamp=0.0, tool=tool)
            frames.append(frame)
        else:
            t_prev, p_prev = self._input_anchor
            span = t_local - t_prev
            while not sim.halted:
                g = sim.frame_index * DT
                if g > t_local + 1e-9:
                    break
                frac = (g - t_prev) / span if span > 0 else 1.0
                pos_g = p_prev + frac * (position - p_prev)
                frames.append(sim.step(pos_g, timestamp=g, tool=tool))
        self._input_anchor = (t_local, position)

        for frame in frames:
            record_step(self.trace, frame)
            cls = frame.classification
            if cls is ForceClassification.WARN and self._prev_class is not ForceClassification.WARN:
                events.append(SessionEvent("warning", {"t": frame.t}))
                if self.phase is Phase.SCENARIO:
                    self.current_record.warning_count += 1
            if cls is ForceClassification.FAIL:
                events.append(SessionEvent("failed", {"t": frame.t}))
                events.extend(self._handle_fail())
                break
            self._prev_class = cls
        return FeedResult(frames, events)

    def _handle_fail(self) -> list[SessionEvent]:
        if self.phase is Phase.CALIBRATION:
            # the gate evaluation will reject the damaging trace on advance
            return []
        record = self.current_record
        record.failed = True
        record.score = 0.0
        record.elapsed_s = self.sim.time
        record.peaks = detect_peaks(self.trace)
        record.trace_50hz = self.trace.downsampled()
        return self._advance_after_scenario()

    def _advance_after_scenario(self) -> list[SessionEvent]:
        next_index = self._scenario_index + 1
        if next_index < len(self.order):
            self._enter_scenario(next_index)
            return [SessionEvent("phase", {
                "phase": Phase.SCENARIO.value,
                "scenario_index": next_index,
                "scenario_count": len(self.order),
            })]
        self.phase = Phase.FINISHED
        return [SessionEvent("phase", {"phase": Phase.FINISHED.value})]

    # -- explicit transitions ------------------------------------------------

    def advance(self) -> list[SessionEvent]:
        """Leave the current activity: evaluate the gate or open the questionnaire."""
        if self.phase is Phase.CALIBRATION:
            outcome = evaluate_calibration(self.trace, self.calibration_targets, self.config)
            self.calibration_attempts += 1
            self.calibration_last = outcome
            if outcome.passed:
                self.calibration_passed = True
                self._enter_scenario(0)
                return [
                    SessionEvent("calibration", {"passed": True, "metrics": outcome.metrics}),
                    SessionEvent("phase", {
                        "phase": Phase.SCENARIO.value,
                        "scenario_index": 0,
                        "scenario_count": len(self.order),
                    }),
                ]
            self._start_calibration_sim()
            return [SessionEvent("calibration", {
                "passed": False,
                "reasons": outcome.reasons,
                "metrics": outcome.metrics,
            })]
        if self.phase is Phase.SCENARIO:
            record = self.current_record
            record.elapsed_s = self.sim.time
            record.peaks = detect_peaks(self.trace)
            record.trace_50hz = self.trace.downsampled()
            self.phase = Phase.QUESTIONNAIRE
            question = self._question_for_current()
            return [SessionEvent("questionnaire", {
                "scenario_index": self._scenario_index,
                "prompt": question.prompt,
                "choices": list(question.choices),
            })]
        raise SequencingError(f"cannot advance from phase {self.phase.value}")

    def submit_answer(self, choice: int | None, elapsed_s: float) -> tuple[float, list[SessionEvent]]:
        if self.phase is not Phase.QUESTIONNAIRE:
            raise SequencingError(
                f"answers are only accepted during a questionnaire (phase is {self.phase.value})")
        question = self._question_for_current()
        record = self.current_record
        record.diagnosis_chosen = choice
        record.answer_elapsed_s = elapsed_s
        record.correct = choice is not None and choice == question.correct_index
        record.score = score_answer(record.correct, elapsed_s,
                                    self.config.time_full_s, self.config.time_limit_s)
        events = self._advance_after_scenario()
        return record.score, events

    # -- report ----------------------------------------------------------------

    def report_document(self) -> dict:
        if self.phase is not Phase.FINISHED:
            raise SequencingError("cannot finalize a report before the session finished")
        echo = self.config.echo()
        doc = {
            "schema": SCHEMA_VERSION,
            "session_id": session_id_for(self.config.seed, echo),
            "seed": self.config.seed,
            "student": self.config.student,
            "calibration": {
                "passed": self.calibration_passed,
                "skipped": not self.config.require_calibration,
                "attempts": self.calibration_attempts,
            },
            "scenarios": [r.to_dict() for r in self.records],
            "config": echo,
        }
        validate_report(doc)
        return doc

    def finalize_report(self, path: str | None = None) -> str:
        """Serialize the report (byte-stable) and persist it when configured."""
        text = canonical_json(self.report_document())
        out_path = path or self.config.report_path
        if out_path:
            with open(out_path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text


def start_session(config: SessionConfig, mesh: DeformableMesh) -> Session:
    return Session(config, mesh)


def on_fail(session: Session) -> list[SessionEvent]:
    """Explicit fail transition, for callers driving the state machine directly."""
    if session.phase is not Phase.SCENARIO:
        raise SequencingError("on_fail requires an active scenario")
    return session._handle_fail()
