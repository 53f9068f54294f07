/** Shared fixtures: canonical PLY bytes, delta payloads, seeded randoms. */

import { recordFloats } from "../src/protocol";
import { Scene } from "../src/scene";

/** Deterministic LCG so fixtures are reproducible without a dependency. */
export function makeRng(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state * 1664525 + 1013904223) >>> 0;
    return state / 2 ** 32;
  };
}

export function randomRecords(
  count: number,
  shDegree: number,
  rng: () => number,
): Float32Array {
  const stride = recordFloats(shDegree);
  const records = new Float32Array(count * stride);
  for (let i = 0; i < count; i++) {
    const base = i * stride;
    for (let j = 0; j < 3; j++) records[base + j] = (rng() - 0.5) * 40; // pos
    for (let j = 3; j < 7; j++) records[base + j] = rng() * 2 - 1; // rot
    records[base + 3] += 1.5; // keep quats away from zero norm
    for (let j = 7; j < 10; j++) records[base + j] = rng() * 2 - 3; // log scale
    records[base + 10] = rng() * 8 - 4; // opacity logit
    for (let j = 11; j < stride; j++) records[base + j] = rng() * 2 - 1; // sh
  }
  return records;
}

/**
 * Serialize a record matrix to canonical binary-little-endian PLY:
 * x y z f_dc_* [f_rest_*] opacity scale_* rot_*, all float32.
 */
export function buildPly(
  records: Float32Array,
  count: number,
  shDegree: number,
): Uint8Array {
  const m = (shDegree + 1) ** 2;
  const perCh = m - 1;
  const props = ["x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2"];
  for (let k = 0; k < 3 * perCh; k++) props.push(`f_rest_${k}`);
  props.push("opacity", "scale_0", "scale_1", "scale_2");
  props.push("rot_0", "rot_1", "rot_2", "rot_3");

  const header =
    "ply\nformat binary_little_endian 1.0\n" +
    `element vertex ${count}\n` +
    props.map((p) => `property float ${p}`).join("\n") +
    "\nend_header\n";
  const headBytes = new TextEncoder().encode(header);
  const stride = recordFloats(shDegree);
  const out = new Uint8Array(headBytes.length + count * props.length * 4);
  out.set(headBytes);
  const view = new DataView(out.buffer, headBytes.length);

  // record layout is pos(3) rot(4) logScale(3) opacity(1) sh channel-major
  const recIdx: number[] = [];
  recIdx.push(0, 1, 2); // x y z
  recIdx.push(11, 11 + m, 11 + 2 * m); // f_dc per channel
  for (let ch = 0; ch < 3; ch++) {
    for (let k = 0; k < perCh; k++) recIdx.push(11 + ch * m + 1 + k); // f_rest
  }
  recIdx.push(10); // opacity
  recIdx.push(7, 8, 9); // scale
  recIdx.push(3, 4, 5, 6); // rot

  for (let i = 0; i < count; i++) {
    const src = i * stride;
    const dst = i * props.length * 4;
    for (let j = 0; j < recIdx.length; j++) {
      view.setFloat32(dst + j * 4, records[src + recIdx[j]], true);
    }
  }
  return out;
}

export function sceneOf(
  records: Float32Array,
  count: number,
  shDegree: number,
  version: number | bigint,
): Scene {
  return { records, count, shDegree, version: BigInt(version) };
}

/** Encode a delta payload in the wire layout the server broadcasts. */
export function buildDeltaPayload(opts: {
  baseVersion: number | bigint;
  targetVersion: number | bigint;
  shDegree: number;
  updatedIndices?: number[];
  updatedRecords?: Float32Array;
  appendedRecords?: Float32Array;
  truncateTo?: number | null;
}): Uint8Array {
  const stride = recordFloats(opts.shDegree);
  const idx = opts.updatedIndices ?? [];
  const upd = opts.updatedRecords ?? new Float32Array(0);
  const app = opts.appendedRecords ?? new Float32Array(0);
  const nApp = app.length / stride;
  const out = new Uint8Array(30 + 4 * idx.length + 4 * (upd.length + app.length));
  const view = new DataView(out.buffer);
  view.setBigUint64(0, BigInt(opts.baseVersion), true);
  view.setBigUint64(8, BigInt(opts.targetVersion), true);
  out[16] = opts.shDegree;
  view.setUint32(17, idx.length, true);
  view.setUint32(21, nApp, true);
  out[25] = opts.truncateTo != null ? 1 : 0;
  view.setUint32(26, opts.truncateTo ?? 0, true);
  let off = 30;
  for (const i of idx) {
    view.setUint32(off, i, true);
    off += 4;
  }
  for (const v of upd) {
    view.setFloat32(off, v, true);
    off += 4;
  }
  for (const v of app) {
    view.setFloat32(off, v, true);
    off += 4;
  }
  return out;
}

export function hexToBytes(hex: string): Uint8Array {
  const out = new Uint8Array(hex.length / 2);
  for (let i = 0; i < out.length; i++) {
    out[i] = parseInt(hex.slice(2 * i, 2 * i + 2), 16);
  }
  return out;
}

export function bytesToHex(data: Uint8Array): string {
  return Array.from(data, (b) => b.toString(16).padStart(2, "0")).join("");
}
