/**
 * Wire protocol palpsim/1: one JSON document per text frame, a `type` tag,
 * and a per-direction monotonically increasing `seq`. Every inbound and
 * outbound message is validated against these schemas; nothing undeclared
 * crosses the socket.
 */

import { z } from "zod";

export const PROTOCOL_VERSION = "palpsim/1";

const vec3 = z.tuple([z.number(), z.number(), z.number()]);

const classification = z.enum(["ok", "warn", "fail"]);
export type Classification = z.infer<typeof classification>;

const base = { seq: z.number().int() };

export const stateMessage = z.object({
  ...base,
  type: z.literal("state"),
  phase: z.string(),
  detail: z.record(z.unknown()).nullable().optional(),
});

export const frameMessage = z.object({
  ...base,
  type: z.literal("frame"),
  t: z.number(),
  force: vec3,
  force_mag: z.number(),
  classification,
  in_contact: z.boolean(),
  proxy: z
    .object({ position: vec3, triangle_id: z.number().int() })
    .nullable()
    .optional(),
  vertices: z.array(z.number()).nullable().optional(),
});

export const warningMessage = z.object({ ...base, type: z.literal("warning"), t: z.number() });
export const failedMessage = z.object({ ...base, type: z.literal("failed"), t: z.number() });

export const questionnaireMessage = z.object({
  ...base,
  type: z.literal("questionnaire"),
  scenario_index: z.number().int(),
  prompt: z.string(),
  choices: z.array(z.string()),
});

export const ctPlaneMessage = z.object({
  ...base,
  type: z.literal("ct_plane"),
  index: z.number().int(),
  plane: z.object({
    origin: vec3,
    normal: vec3,
    basis_u: vec3,
    basis_v: vec3,
  }),
  contour: z.array(
    z.object({ closed: z.boolean(), points: z.array(vec3) }),
  ),
});

export const reportMessage = z.object({
  ...base,
  type: z.literal("report"),
  document: z.record(z.unknown()),
});

export const errorMessage = z.object({
  ...base,
  type: z.literal("error"),
  message: z.string(),
  seq_ref: z.number().int().nullable().optional(),
});

export const busyMessage = z.object({ ...base, type: z.literal("busy") });

export const serverMessage = z.discriminatedUnion("type", [
  stateMessage,
  frameMessage,
  warningMessage,
  failedMessage,
  questionnaireMessage,
  ctPlaneMessage,
  reportMessage,
  errorMessage,
  busyMessage,
]);

export type ServerMessage = z.infer<typeof serverMessage>;
export type FrameMessage = z.infer<typeof frameMessage>;
export type StateMessage = z.infer<typeof stateMessage>;
export type QuestionnaireMessage = z.infer<typeof questionnaireMessage>;
export type CtPlaneMessage = z.infer<typeof ctPlaneMessage>;

export function parseServerMessage(text: string): ServerMessage {
  return serverMessage.parse(JSON.parse(text));
}

// ---------------------------------------------------------------------------
// client -> server

export const helloMessage = z.object({ ...base, type: z.literal("hello"), version: z.string() });
export const startMessage = z.object({
  ...base,
  type: z.literal("start"),
  seed: z.number().int(),
  config: z.record(z.unknown()).nullable().optional(),
});
export const probeMessage = z.object({
  ...base,
  type: z.literal("probe"),
  t: z.number(),
  pos: vec3,
  tool: z.enum(["babcock", "maryland"]),
});
export const answerMessage = z.object({
  ...base,
  type: z.literal("answer"),
  choice: z.number().int().nullable(),
  elapsed: z.number(),
});
export const advanceMessage = z.object({ ...base, type: z.literal("advance") });
export const ctSelectMessage = z.object({
  ...base,
  type: z.literal("ct_select"),
  index: z.number().int(),
});

export const clientMessage = z.discriminatedUnion("type", [
  helloMessage,
  startMessage,
  probeMessage,
  answerMessage,
  advanceMessage,
  ctSelectMessage,
]);
export type ClientMessage = z.infer<typeof clientMessage>;
export type Tool = z.infer<typeof probeMessage.shape.tool>;

/** Builds outbound messages, stamping and validating each one. */
export class MessageWriter {
  private seq = 0;

  private stamp<T extends object>(message: T): string {
    this.seq += 1;
    const doc = { ...message, seq: this.seq };
    clientMessage.parse(doc);
    return JSON.stringify(doc);
  }

  hello(): string {
    return this.stamp({ type: "hello" as const, version: PROTOCOL_VERSION });
  }

  start(seed: number, config: Record<string, unknown> | null = null): string {
    return this.stamp({ type: "start" as const, seed, config });
  }

  probe(t: number, pos: [number, number, number], tool: Tool = "babcock"): string {
    return this.stamp({ type: "probe" as const, t, pos, tool });
  }

  answer(choice: number | null, elapsed: number): string {
    return this.stamp({ type: "answer" as const, choice, elapsed });
  }

  advance(): string {
    return this.stamp({ type: "advance" as const });
  }

  ctSelect(index: number): string {
    return this.stamp({ type: "ct_select" as const, index });
  }
}

/** Rejects inbound sequence numbers that fail to increase. */
export class SequenceChecker {
  private last = 0;

  check(seq: number): void {
    if (seq <= this.last) {
      throw new Error(`sequence number ${seq} is not greater than ${this.last}`);
    }
    this.last = seq;
  }
}
