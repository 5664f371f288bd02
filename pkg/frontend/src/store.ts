/**
 * Single state store for the trainer view.
 *
 * Every number on screen originates from a server message: the force gauge
 * always equals the latest frame's magnitude, classifications are taken
 * verbatim, and the popup is visible exactly while the newest warn/fail
 * event is more recent than the trainee's last dismissal. Scenario
 * identity stays hidden; the header only ever shows "Scenario N of M".
 */

import {
  CtPlaneMessage,
  FrameMessage,
  QuestionnaireMessage,
  ServerMessage,
  SequenceChecker,
  parseServerMessage,
} from "./protocol.js";

export type Connection = "connecting" | "open" | "reconnecting";

export interface PopupState {
  kind: "warning" | "failed" | "busy";
  t: number | null;
  eventSeq: number;
}

export interface WarnEvent {
  t: number;
  seq: number;
}

export class TrainerStore {
  connection: Connection = "connecting";
  phase = "connecting";
  scenarioIndex: number | null = null;
  scenarioCount: number | null = null;
  ctSliceCount = 0;

  latestFrame: FrameMessage | null = null;
  vertices: Float64Array | null = null;

  question: QuestionnaireMessage | null = null;
  questionShownAtMs: number | null = null;

  ctPlane: CtPlaneMessage | null = null;
  ctSlice = 0;

  report: Record<string, unknown> | null = null;
  score: number | null = null;

  popup: PopupState | null = null;
  private lastDismissSeq = 0;

  warnEvents: WarnEvent[] = [];
  failEvents: WarnEvent[] = [];
  errors: string[] = [];

  private checker = new SequenceChecker();

  /** Force gauge value: always the latest frame's magnitude, never computed here. */
  get gaugeForce(): number {
    return this.latestFrame ? this.latestFrame.force_mag : 0;
  }

  get classification(): "ok" | "warn" | "fail" {
    return this.latestFrame ? this.latestFrame.classification : "ok";
  }

  /** Header label; scenario identity is never revealed during palpation. */
  get header(): string {
    if (this.phase === "scenario" && this.scenarioIndex !== null && this.scenarioCount) {
      return `Scenario ${this.scenarioIndex + 1} of ${this.scenarioCount}`;
    }
    return this.phase;
  }

  popupVisible(): boolean {
    return this.popup !== null && this.popup.eventSeq > this.lastDismissSeq;
  }

  dismissPopup(): void {
    if (this.popup) {
      this.lastDismissSeq = Math.max(this.lastDismissSeq, this.popup.eventSeq);
    }
  }

  /** Elapsed questionnaire time; this exact value goes into the answer. */
  questionElapsedS(nowMs: number): number {
    if (this.questionShownAtMs === null) return 0;
    return (nowMs - this.questionShownAtMs) / 1000;
  }

  /** Parse and apply raw socket text; malformed input leaves the scene untouched. */
  applyRaw(text: string, nowMs: number): ServerMessage | null {
    let message: ServerMessage;
    try {
      message = parseServerMessage(text);
      this.checker.check(message.seq);
    } catch (err) {
      this.errors.push(String(err));
      return null;
    }
    this.apply(message, nowMs);
    return message;
  }

  apply(message: ServerMessage, nowMs: number): void {
    switch (message.type) {
      case "state": {
        this.phase = message.phase;
        const detail = (message.detail ?? {}) as Record<string, unknown>;
        if (typeof detail.scenario_index === "number") {
          this.scenarioIndex = detail.scenario_index;
        }
        if (typeof detail.scenario_count === "number") {
          this.scenarioCount = detail.scenario_count;
        }
        if (typeof detail.ct_slices === "number") {
          this.ctSliceCount = detail.ct_slices;
        }
        if (typeof detail.score === "number") {
          this.score = detail.score;
        }
        if (message.phase === "scenario") {
          this.question = null;
          this.questionShownAtMs = null;
        }
        break;
      }
      case "frame": {
        this.latestFrame = message;
        if (message.vertices && message.vertices.length) {
          this.vertices = Float64Array.from(message.vertices);
        }
        break;
      }
      case "warning": {
        this.warnEvents.push({ t: message.t, seq: message.seq });
        this.popup = { kind: "warning", t: message.t, eventSeq: message.seq };
        break;
      }
      case "failed": {
        this.failEvents.push({ t: message.t, seq: message.seq });
        this.popup = { kind: "failed", t: message.t, eventSeq: message.seq };
        break;
      }
      case "questionnaire": {
        this.question = message;
        this.questionShownAtMs = nowMs;
        this.phase = "questionnaire";
        break;
      }
      case "ct_plane": {
        this.ctPlane = message;
        this.ctSlice = message.index;
        break;
      }
      case "report": {
        this.report = message.document;
        this.phase = "finished";
        break;
      }
      case "error": {
        this.errors.push(message.message);
        break;
      }
      case "busy": {
        this.popup = { kind: "busy", t: null, eventSeq: message.seq };
        break;
      }
    }
  }
}
