import { describe, expect, it } from "vitest";

import {
  BadFrameMagic,
  BadVersion,
  CrcMismatch,
  crc32,
  decodeDelta,
  decodeError,
  decodeFrame,
  decodeSnapshotBegin,
  decodeStream,
  encodeFrame,
  encodeSubscribe,
  frame,
  HEADER_LEN,
  OversizePayload,
  ProtocolError,
  SNAPSHOT_END,
  SUBSCRIBE,
  Truncated,
} from "../src/protocol";
import { bytesToHex, buildDeltaPayload, hexToBytes, makeRng } from "./helpers";

describe("crc32", () => {
  it("matches the zlib check value", () => {
    expect(crc32(new TextEncoder().encode("123456789"))).toBe(0xcbf43926);
  });

  it("empty input is zero", () => {
    expect(crc32(new Uint8Array(0))).toBe(0);
  });
});

describe("frame encoding", () => {
  it("produces the known bytes for an empty SnapshotEnd at version 2", () => {
    const bytes = encodeFrame(frame(SNAPSHOT_END, 2));
    expect(bytesToHex(bytes)).toBe(
      "475350540103000002000000000000000000000000000000",
    );
  });

  it("round-trips random frames", () => {
    const rng = makeRng(7);
    for (let k = 0; k < 500; k++) {
      const payload = new Uint8Array(Math.floor(rng() * 300));
      for (let i = 0; i < payload.length; i++) {
        payload[i] = Math.floor(rng() * 256);
      }
      const original = frame(
        Math.floor(rng() * 200),
        BigInt(Math.floor(rng() * 2 ** 48)),
        payload,
        Math.floor(rng() * 256),
      );
      const [decoded, next] = decodeFrame(encodeFrame(original));
      expect(next).toBe(HEADER_LEN + payload.length);
      expect(decoded.frameType).toBe(original.frameType);
      expect(decoded.sceneVersion).toBe(original.sceneVersion);
      expect(decoded.flags).toBe(original.flags);
      expect(decoded.payload).toEqual(payload);
    }
  });

  it("decodes at a nonzero offset inside a larger buffer", () => {
    const inner = encodeFrame(frame(SNAPSHOT_END, 9, new Uint8Array([1, 2, 3])));
    const buf = new Uint8Array(inner.length + 10);
    buf.set(inner, 5);
    const [decoded, next] = decodeFrame(buf, 5);
    expect(decoded.sceneVersion).toBe(9n);
    expect(decoded.payload).toEqual(new Uint8Array([1, 2, 3]));
    expect(next).toBe(5 + inner.length);
  });

  it("decodes a concatenated stream", () => {
    const a = encodeFrame(frame(SNAPSHOT_END, 1));
    const b = encodeFrame(frame(SUBSCRIBE, 0, encodeSubscribe(4)));
    const joined = new Uint8Array(a.length + b.length);
    joined.set(a);
    joined.set(b, a.length);
    const frames = decodeStream(joined);
    expect(frames).toHaveLength(2);
    expect(frames[1].frameType).toBe(SUBSCRIBE);
  });
});

describe("frame decode failure modes", () => {
  const good = encodeFrame(frame(SNAPSHOT_END, 1, new Uint8Array([9, 9])));

  it("rejects bad magic", () => {
    const bad = good.slice();
    bad[0] = 0x58;
    expect(() => decodeFrame(bad)).toThrow(BadFrameMagic);
  });

  it("rejects an unknown protocol version", () => {
    const bad = good.slice();
    bad[4] = 0x02;
    expect(() => decodeFrame(bad)).toThrow(BadVersion);
  });

  it("rejects a flipped payload byte", () => {
    const bad = good.slice();
    bad[HEADER_LEN] ^= 0xff;
    expect(() => decodeFrame(bad)).toThrow(CrcMismatch);
  });

  it("rejects truncated header and truncated payload", () => {
    expect(() => decodeFrame(good.slice(0, 10))).toThrow(Truncated);
    expect(() => decodeFrame(good.slice(0, good.length - 1))).toThrow(Truncated);
  });

  it("rejects payloads above the limit", () => {
    expect(() => decodeFrame(good, 0, 1)).toThrow(OversizePayload);
  });

  it("random corruption only ever raises protocol errors", () => {
    const rng = makeRng(99);
    for (let k = 0; k < 2000; k++) {
      const bad = good.slice();
      const hits = 1 + Math.floor(rng() * 3);
      for (let h = 0; h < hits; h++) {
        bad[Math.floor(rng() * bad.length)] = Math.floor(rng() * 256);
      }
      try {
        decodeFrame(bad);
      } catch (exc) {
        expect(exc).toBeInstanceOf(ProtocolError);
      }
    }
  });
});

describe("typed payloads", () => {
  it("decodes SnapshotBegin fields", () => {
    const payload = hexToBytes(
      // totalChunks=3, totalBytes=1000, shDegree=2, splatCount=7
      "03000000" + "e803000000000000" + "02" + "0700000000000000",
    );
    expect(decodeSnapshotBegin(payload)).toEqual({
      totalChunks: 3,
      totalBytes: 1000,
      shDegree: 2,
      splatCount: 7,
    });
  });

  it("encodes Subscribe as a little-endian u64", () => {
    expect(bytesToHex(encodeSubscribe(0x0102030405n))).toBe(
      "0504030201000000",
    );
  });

  it("decodes Error payloads", () => {
    const payload = new Uint8Array([2, 0, ...new TextEncoder().encode("nope")]);
    expect(decodeError(payload)).toEqual([2, "nope"]);
  });

  it("decodes a delta payload and validates its length", () => {
    const payload = buildDeltaPayload({
      baseVersion: 4,
      targetVersion: 5,
      shDegree: 0,
      updatedIndices: [1, 3],
      updatedRecords: new Float32Array(28).fill(0.5),
      appendedRecords: new Float32Array(14).fill(-1),
      truncateTo: 6,
    });
    const delta = decodeDelta(payload);
    expect(delta.baseVersion).toBe(4n);
    expect(delta.targetVersion).toBe(5n);
    expect(Array.from(delta.updatedIndices)).toEqual([1, 3]);
    expect(delta.appendedCount).toBe(1);
    expect(delta.truncateTo).toBe(6);
    expect(() => decodeDelta(payload.slice(0, payload.length - 4))).toThrow(
      ProtocolError,
    );
  });
});
