import { describe, expect, it } from "vitest";

import {
  MessageWriter,
  PROTOCOL_VERSION,
  SequenceChecker,
  clientMessage,
  parseServerMessage,
} from "../src/protocol.js";

describe("server message parsing", () => {
  it("accepts a full frame", () => {
    const doc = {
      type: "frame", seq: 3, t: 0.04, force: [0, 0, 1.2], force_mag: 1.2,
      classification: "ok", in_contact: true,
      proxy: { position: [1, 2, 3], triangle_id: 17 },
      vertices: [0, 0, 0, 1, 1, 1],
    };
    const msg = parseServerMessage(JSON.stringify(doc));
    expect(msg.type).toBe("frame");
    if (msg.type === "frame") {
      expect(msg.force_mag).toBe(1.2);
      expect(msg.proxy?.triangle_id).toBe(17);
    }
  });

  it("accepts frames without a vertex block", () => {
    const doc = {
      type: "frame", seq: 4, t: 0.08, force: [0, 0, 0], force_mag: 0,
      classification: "ok", in_contact: false, proxy: null, vertices: null,
    };
    expect(parseServerMessage(JSON.stringify(doc)).type).toBe("frame");
  });

  it("rejects unknown type tags", () => {
    expect(() => parseServerMessage('{"type": "teleport", "seq": 1}')).toThrow();
  });

  it("rejects a frame with a bad classification", () => {
    const doc = {
      type: "frame", seq: 1, t: 0, force: [0, 0, 0], force_mag: 0,
      classification: "meh", in_contact: false,
    };
    expect(() => parseServerMessage(JSON.stringify(doc))).toThrow();
  });

  it("rejects non-JSON", () => {
    expect(() => parseServerMessage("nope {")).toThrow();
  });

  it("parses warnings, failures, reports, busy", () => {
    expect(parseServerMessage('{"type":"warning","seq":1,"t":0.5}').type).toBe("warning");
    expect(parseServerMessage('{"type":"failed","seq":2,"t":0.9}').type).toBe("failed");
    expect(parseServerMessage('{"type":"busy","seq":1}').type).toBe("busy");
    expect(parseServerMessage('{"type":"report","seq":3,"document":{}}').type).toBe("report");
  });
});

describe("client message writer", () => {
  it("stamps increasing sequence numbers and validates", () => {
    const writer = new MessageWriter();
    const hello = JSON.parse(writer.hello());
    const probe = JSON.parse(writer.probe(0.001, [1, 2, 3]));
    const answer = JSON.parse(writer.answer(2, 14.5));
    expect(hello.seq).toBe(1);
    expect(probe.seq).toBe(2);
    expect(answer.seq).toBe(3);
    expect(hello.version).toBe(PROTOCOL_VERSION);
    for (const doc of [hello, probe, answer]) {
      expect(() => clientMessage.parse(doc)).not.toThrow();
    }
  });

  it("round-trips every client type through the schema", () => {
    const writer = new MessageWriter();
    const texts = [
      writer.hello(),
      writer.start(42, { scenarios: ["healthy"] }),
      writer.probe(0.25, [10, -5, 30], "maryland"),
      writer.answer(null, 121.0),
      writer.advance(),
      writer.ctSelect(7),
    ];
    for (const text of texts) {
      expect(() => clientMessage.parse(JSON.parse(text))).not.toThrow();
    }
  });
});

describe("sequence checker", () => {
  it("rejects stale numbers", () => {
    const checker = new SequenceChecker();
    checker.check(1);
    checker.check(5);
    expect(() => checker.check(5)).toThrow(/sequence/);
  });
});
