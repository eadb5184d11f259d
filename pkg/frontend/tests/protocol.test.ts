import { describe, expect, it } from "vitest";

import { DecodeError, decodeFrame, encodeCommand } from "../src/protocol.js";

describe("decodeFrame", () => {
  it("decodes a vitals frame with typed payload", () => {
    const frame = decodeFrame(
      "v1 type=vitals seq=12 t=34.5 patient=B03 flags=fever hr=82.413 purpose=routine spo2=97.2 temp_f=101.7",
    );
    expect(frame.type).toBe("vitals");
    expect(frame.seq).toBe(12);
    expect(frame.t).toBeCloseTo(34.5, 9);
    expect(frame.patient).toBe("B03");
    expect(frame.payload.hr).toBeCloseTo(82.413, 9);
    expect(frame.payload.flags).toBe("fever");
  });

  it("decodes percent-encoded values", () => {
    const frame = decodeFrame(
      "v1 type=alert seq=3 t=1.0 detail=cylinder%202%20empty reason=out-of-stock",
    );
    expect(frame.payload.detail).toBe("cylinder 2 empty");
  });

  it("types integers and floats separately", () => {
    const frame = decodeFrame("v1 type=med seq=0 t=0.5 cylinder=2 duration=2.88");
    expect(frame.payload.cylinder).toBe(2);
    expect(frame.payload.duration).toBeCloseTo(2.88, 12);
  });

  it("rejects wrong version", () => {
    expect(() => decodeFrame("v2 type=pose seq=0 t=0.0")).toThrow(DecodeError);
  });

  it("rejects missing required keys", () => {
    expect(() => decodeFrame("v1 type=pose seq=0")).toThrow(DecodeError);
  });

  it("rejects unknown types", () => {
    expect(() => decodeFrame("v1 type=banana seq=0 t=0.0")).toThrow(DecodeError);
  });

  it("rejects truncated lines", () => {
    expect(() => decodeFrame("v1 type=pose se")).toThrow(DecodeError);
  });

  it("never throws anything but DecodeError on fuzzed input", () => {
    let seed = 1337;
    const rand = () => {
      seed = (seed * 1103515245 + 12345) % 2147483648;
      return seed / 2147483648;
    };
    const alphabet =
      "abcdefghijklmnopqrstuvwxyz0123456789 =%.-+v1type\n\tseqt";
    for (let i = 0; i < 20000; i++) {
      const n = Math.floor(rand() * 50);
      let line = "";
      for (let j = 0; j < n; j++) {
        line += alphabet[Math.floor(rand() * alphabet.length)];
      }
      try {
        decodeFrame(line);
      } catch (err) {
        expect(err).toBeInstanceOf(DecodeError);
      }
    }
  });
});

describe("encodeCommand", () => {
  it("builds a decodable cmd frame", () => {
    const line = encodeCommand("priority_checkup", { node: "B02", ref: "c7" });
    const frame = decodeFrame(line);
    expect(frame.type).toBe("cmd");
    expect(frame.payload.kind).toBe("priority_checkup");
    expect(frame.payload.node).toBe("B02");
    expect(frame.payload.ref).toBe("c7");
  });

  it("carries dispense profile fields", () => {
    const line = encodeCommand("manual_dispense", { node: "B01", valve2: 2.88 });
    const frame = decodeFrame(line);
    expect(frame.payload.valve2).toBeCloseTo(2.88, 12);
  });
});
