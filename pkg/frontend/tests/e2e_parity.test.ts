/**
 * Live end-to-end check against the real gateway: spawn the Python service,
 * replay the bundled gentle tape through a scripted protocol client feeding
 * the UI store, and compare every streamed |F| with the headless replay at
 * the same timestamps. A second session replays the overpress tape to pin
 * the warning-popup state to the server's warn events.
 */

import { spawn, spawnSync, ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, resolve } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import WebSocket from "ws";

import { GatewayClient } from "../src/client.js";
import { TrainerStore } from "../src/store.js";
import { FrameMessage, parseServerMessage } from "../src/protocol.js";

const repoRoot = resolve(__dirname, "../..");
const tapesDir = join(repoRoot, "src", "palpsim", "assets", "tapes");

const havePython = spawnSync("python3", ["-c", "import palpsim"], { cwd: repoRoot }).status === 0;

interface TapeRecord {
  t: number;
  pos: [number, number, number];
  tool: string;
}

function readTape(name: string): TapeRecord[] {
  return readFileSync(join(tapesDir, name), "utf-8")
    .split("\n")
    .filter((line) => line.trim().length > 0)
    .map((line) => JSON.parse(line));
}

function waitFor(predicate: () => boolean, timeoutMs = 90_000, label = "condition"):
    Promise<void> {
  const start = Date.now();
  return new Promise((resolvePromise, reject) => {
    const poll = () => {
      if (predicate()) return resolvePromise();
      if (Date.now() - start > timeoutMs) {
        return reject(new Error(`timed out waiting for ${label}`));
      }
      setTimeout(poll, 10);
    };
    poll();
  });
}

async function connectClient(url: string, onMessage?: (raw: string) => void):
    Promise<{ client: GatewayClient; store: TrainerStore }> {
  // the single-trainee slot may still be winding down from a previous
  // connection; a busy notice just means retry shortly
  for (let attempt = 0; attempt < 40; attempt += 1) {
    const store = new TrainerStore();
    const client = new GatewayClient({
      url,
      store,
      socketFactory: (u) => new WebSocket(u) as never,
      reconnect: false,
      onMessage,
    });
    client.connect();
    try {
      await waitFor(() => store.connection === "open", 30_000, "socket open");
      await waitFor(
        () => store.phase === "ready" || store.popup?.kind === "busy"
          || store.connection !== "open",
        30_000, "ready state");
    } catch (err) {
      client.close();
      throw err;
    }
    if (store.phase === "ready") {
      return { client, store };
    }
    client.close();
    await new Promise((r) => setTimeout(r, 250));
  }
  throw new Error("gateway stayed busy");
}

describe.skipIf(!havePython)("live gateway parity", () => {
  const port = 20_000 + Math.floor(Math.random() * 20_000);
  const url = `ws://127.0.0.1:${port}`;
  const scratch = mkdtempSync(join(tmpdir(), "palpsim-ui-"));
  let server: ChildProcess;

  beforeAll(async () => {
    server = spawn(
      "python3",
      ["-m", "palpsim", "serve", "--port", String(port), "--max-speed",
       "--ct", "bundled", "--out", scratch],
      { cwd: repoRoot, stdio: "ignore" },
    );
    // wait until the port accepts a socket, then let the probe connection
    // fully close so it releases the single-trainee slot before any test runs
    await new Promise<void>((resolvePromise, reject) => {
      const start = Date.now();
      const attempt = () => {
        const probe = new WebSocket(url);
        probe.onopen = () => { probe.close(); };
        probe.onclose = () => { resolvePromise(); };
        probe.onerror = () => {
          probe.close();
          if (Date.now() - start > 30_000) reject(new Error("server never came up"));
          else setTimeout(attempt, 200);
        };
      };
      attempt();
    });
    await new Promise((r) => setTimeout(r, 300));
  });

  afterAll(() => {
    server.kill();
  });

  it("streamed |F| equals the headless replay at shared timestamps", async () => {
    // headless reference trace at full precision
    const traceOut = join(scratch, "trace.json");
    const replay = spawnSync(
      "python3",
      ["-m", "palpsim", "replay", "--tape", "gentle", "--scenario", "healthy",
       "--seed", "42", "--report", join(scratch, "headless.json"),
       "--trace-out", traceOut],
      { cwd: repoRoot },
    );
    expect(replay.status).toBe(0);
    const trace = JSON.parse(readFileSync(traceOut, "utf-8")) as {
      t: number[]; force_n: number[];
    };
    const headless = new Map<number, number>();
    trace.t.forEach((t, i) => headless.set(t, trace.force_n[i]));

    const frames: FrameMessage[] = [];
    const gaugeChecks: boolean[] = [];
    const { client, store } = await connectClient(url, (raw) => {
      const msg = parseServerMessage(raw);
      if (msg.type === "frame") {
        frames.push(msg);
        // single source of truth: the gauge is exactly the frame magnitude
        gaugeChecks.push(store.gaugeForce === msg.force_mag);
      }
    });

    client.start(42, { scenarios: ["healthy"], require_calibration: false });
    await waitFor(() => store.phase === "scenario", 30_000, "scenario phase");

    for (const record of readTape("gentle.jsonl")) {
      client.probe(record.t, record.pos, record.tool as never);
    }
    client.advance();
    await waitFor(() => store.question !== null, 90_000, "questionnaire");
    client.answer(0, store.questionElapsedS(Date.now()));
    await waitFor(() => store.report !== null, 30_000, "report");
    client.close();

    expect(frames.length).toBeGreaterThan(50);
    for (const frame of frames) {
      const reference = headless.get(frame.t);
      expect(reference, `headless trace is missing t=${frame.t}`).toBeDefined();
      expect(Math.abs(frame.force_mag - (reference as number))).toBeLessThanOrEqual(1e-9);
    }
    expect(gaugeChecks.every(Boolean)).toBe(true);
    const scenarios = store.report!.scenarios as Array<Record<string, unknown>>;
    expect(scenarios[0].failed).toBe(false);
  });

  it("warning popup state tracks the server's warn events", async () => {
    const warnEventsSeen: number[] = [];
    const popupAtEvent: boolean[] = [];
    const popupT: Array<number | null> = [];
    const { client, store } = await connectClient(url, (raw) => {
      const msg = parseServerMessage(raw);
      if (msg.type === "warning") {
        warnEventsSeen.push(msg.t);
        popupAtEvent.push(store.popupVisible() && store.popup?.kind === "warning");
        popupT.push(store.popup?.t ?? null);
      }
    });

    expect(store.popupVisible()).toBe(false);
    client.start(7, { scenarios: ["healthy"], require_calibration: false });
    await waitFor(() => store.phase === "scenario", 30_000, "scenario phase");

    for (const record of readTape("overpress.jsonl")) {
      if (store.report !== null) break;
      client.probe(record.t, record.pos, record.tool as never);
    }
    await waitFor(() => store.report !== null, 90_000, "report after fail");
    client.close();

    // the overpress run warns, then fails
    expect(warnEventsSeen.length).toBeGreaterThanOrEqual(1);
    expect(popupAtEvent.every(Boolean)).toBe(true);
    expect(popupT).toEqual(warnEventsSeen);
    expect(store.warnEvents.map((e) => e.t)).toEqual(warnEventsSeen);
    expect(store.failEvents.length).toBe(1);
    expect(store.warnEvents[0].t).toBeLessThan(store.failEvents[0].t);
    // after the fail the popup switched to the failure notice
    expect(store.popup?.kind).toBe("failed");
    const scenarios = store.report!.scenarios as Array<Record<string, unknown>>;
    expect(scenarios[0].failed).toBe(true);
  });
});
