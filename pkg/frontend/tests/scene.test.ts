import { describe, expect, it } from "vitest";

import { IndexOutOfRange, recordFloats, VersionMismatch } from "../src/protocol";
import {
  applyDeltaSet,
  baseColor,
  parsePly,
  PlyParseError,
  position,
} from "../src/scene";
import {
  buildDeltaPayload,
  buildPly,
  makeRng,
  randomRecords,
  sceneOf,
} from "./helpers";
import { decodeDelta } from "../src/protocol";

describe("parsePly", () => {
  it("recovers every raw field exactly (degrees 0..3)", () => {
    const rng = makeRng(11);
    for (const degree of [0, 1, 2, 3]) {
      const records = randomRecords(20, degree, rng);
      const scene = parsePly(buildPly(records, 20, degree), 5);
      expect(scene.count).toBe(20);
      expect(scene.shDegree).toBe(degree);
      expect(scene.version).toBe(5n);
      expect(scene.records).toEqual(records);
    }
  });

  it("accepts properties in non-canonical order", () => {
    // hand-build a single-splat degree-0 file with scrambled columns
    const names = [
      "opacity", "x", "rot_3", "y", "z", "scale_1", "f_dc_2", "rot_0",
      "f_dc_0", "scale_0", "rot_1", "f_dc_1", "scale_2", "rot_2",
    ];
    const values: Record<string, number> = {
      x: 1, y: 2, z: 3, rot_0: 0.5, rot_1: 0.1, rot_2: 0.2, rot_3: 0.3,
      scale_0: -1, scale_1: -2, scale_2: -3, opacity: 4,
      f_dc_0: 0.25, f_dc_1: 0.5, f_dc_2: 0.75,
    };
    const header =
      "ply\nformat binary_little_endian 1.0\nelement vertex 1\n" +
      names.map((n) => `property float ${n}`).join("\n") +
      "\nend_header\n";
    const head = new TextEncoder().encode(header);
    const out = new Uint8Array(head.length + 4 * names.length);
    out.set(head);
    const view = new DataView(out.buffer, head.length);
    names.forEach((n, i) => view.setFloat32(4 * i, values[n], true));

    const scene = parsePly(out);
    expect(position(scene, 0)).toEqual([1, 2, 3]);
    expect(scene.records.subarray(3, 7)).toEqual(
      Float32Array.from([0.5, 0.1, 0.2, 0.3]),
    );
    expect(Array.from(scene.records.subarray(7, 10))).toEqual([-1, -2, -3]);
    expect(scene.records[10]).toBe(4);
  });

  it("computes the clamped base color from f_dc", () => {
    const records = new Float32Array(recordFloats(0));
    records.set([0.0, 10.0, -10.0], 11); // f_dc per channel
    const scene = sceneOf(records, 1, 0, 0);
    const [r, g, b] = baseColor(scene, 0);
    expect(r).toBeCloseTo(0.5, 12);
    expect(g).toBe(1);
    expect(b).toBe(0);
  });

  it("rejects malformed files with a parse error", () => {
    const good = buildPly(randomRecords(3, 0, makeRng(1)), 3, 0);
    expect(() => parsePly(good.slice(1))).toThrow(PlyParseError); // no magic
    expect(() => parsePly(good.slice(0, good.length - 4))).toThrow(
      PlyParseError, // short body
    );
    const ascii = new TextEncoder().encode(
      "ply\nformat ascii 1.0\nelement vertex 0\nend_header\n",
    );
    expect(() => parsePly(ascii)).toThrow(PlyParseError);
  });
});

describe("applyDeltaSet", () => {
  const rng = makeRng(42);
  const stride = recordFloats(0);
  const base = sceneOf(randomRecords(6, 0, rng), 6, 0, 10);

  it("applies update, truncate, append in order and leaves input untouched", () => {
    const updated = randomRecords(2, 0, rng);
    const appended = randomRecords(3, 0, rng);
    const before = base.records.slice();
    const delta = decodeDelta(
      buildDeltaPayload({
        baseVersion: 10,
        targetVersion: 11,
        shDegree: 0,
        updatedIndices: [0, 4],
        updatedRecords: updated,
        appendedRecords: appended,
        truncateTo: 5,
      }),
    );
    const next = applyDeltaSet(base, delta);
    expect(base.records).toEqual(before);
    expect(next.version).toBe(11n);
    expect(next.count).toBe(8); // 6 updated -> truncated to 5 -> +3 appended
    expect(next.records.subarray(0, stride)).toEqual(updated.subarray(0, stride));
    expect(next.records.subarray(4 * stride, 5 * stride)).toEqual(
      updated.subarray(stride),
    );
    expect(next.records.subarray(5 * stride)).toEqual(appended);
  });

  it("rejects a wrong base version and out-of-range indices", () => {
    const wrongBase = decodeDelta(
      buildDeltaPayload({ baseVersion: 9, targetVersion: 11, shDegree: 0 }),
    );
    expect(() => applyDeltaSet(base, wrongBase)).toThrow(VersionMismatch);

    const badIndex = decodeDelta(
      buildDeltaPayload({
        baseVersion: 10,
        targetVersion: 11,
        shDegree: 0,
        updatedIndices: [6],
        updatedRecords: randomRecords(1, 0, rng),
      }),
    );
    expect(() => applyDeltaSet(base, badIndex)).toThrow(IndexOutOfRange);
  });
});
