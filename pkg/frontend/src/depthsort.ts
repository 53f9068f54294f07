/**
 * Depth ordering matching the server's sort contract: depths quantized
 * to 16- or 32-bit keys over [near, far], stable counting sort (radix
 * over two 16-bit digits for 32-bit keys), front to back, ties keep
 * original index order.
 */

import { recordFloats } from "./protocol.js";
import { Scene } from "./scene.js";
import { applyPoint, Vec3, WimTransform } from "./wim.js";

export class BadRange extends Error {}

export function quantizeDepths(
  depths: Float64Array,
  near: number,
  far: number,
  keyBits: 16 | 32,
): Uint32Array {
  if (far <= near) {
    throw new BadRange(`far ${far} must exceed near ${near}`);
  }
  const maxKey = 2 ** keyBits - 1;
  const keys = new Uint32Array(depths.length);
  for (let i = 0; i < depths.length; i++) {
    const d = Math.min(far, Math.max(near, depths[i]));
    keys[i] = Math.min(maxKey, Math.floor(((d - near) / (far - near)) * maxKey));
  }
  return keys;
}

function countingPass(
  digits: Uint16Array,
  order: Uint32Array,
): Uint32Array {
  const counts = new Uint32Array(65536);
  for (let i = 0; i < order.length; i++) counts[digits[order[i]]]++;
  let total = 0;
  for (let k = 0; k < counts.length; k++) {
    const c = counts[k];
    counts[k] = total;
    total += c;
  }
  const out = new Uint32Array(order.length);
  for (let i = 0; i < order.length; i++) {
    const d = digits[order[i]];
    out[counts[d]++] = order[i];
  }
  return out;
}

export function sortByDepth(
  depths: Float64Array,
  cull: Uint8Array | null,
  near: number,
  far: number,
  keyBits: 16 | 32 = 16,
): Uint32Array {
  const keys = quantizeDepths(depths, near, far, keyBits);
  let live: Uint32Array;
  if (cull) {
    const indices: number[] = [];
    for (let i = 0; i < depths.length; i++) if (!cull[i]) indices.push(i);
    live = Uint32Array.from(indices);
  } else {
    live = new Uint32Array(depths.length);
    for (let i = 0; i < depths.length; i++) live[i] = i;
  }
  const lo = new Uint16Array(keys.length);
  for (let i = 0; i < keys.length; i++) lo[i] = keys[i] & 0xffff;
  let order = countingPass(lo, live);
  if (keyBits === 32) {
    const hi = new Uint16Array(keys.length);
    for (let i = 0; i < keys.length; i++) hi[i] = keys[i] >>> 16;
    order = countingPass(hi, order);
  }
  return order;
}

/**
 * Per-splat view depth (z row of the view matrix applied to the
 * optionally WIM-transformed position) plus a near-plane cull mask.
 */
export function viewDepths(
  scene: Scene,
  view: number[][],
  near = 0.0,
  wim: WimTransform | null = null,
): { depths: Float64Array; cull: Uint8Array } {
  const stride = recordFloats(scene.shDegree);
  const depths = new Float64Array(scene.count);
  const cull = new Uint8Array(scene.count);
  const [zx, zy, zz, zw] = view[2];
  for (let i = 0; i < scene.count; i++) {
    let p: Vec3 = [
      scene.records[i * stride],
      scene.records[i * stride + 1],
      scene.records[i * stride + 2],
    ];
    if (wim) p = applyPoint(wim, p);
    const d = zx * p[0] + zy * p[1] + zz * p[2] + zw;
    depths[i] = d;
    cull[i] = d <= near ? 1 : 0;
  }
  return { depths, cull };
}

/** Front-to-back draw order for a scene under a camera, the contract
 * checked against the server's sort via the debug export. */
export function sceneDrawOrder(
  scene: Scene,
  view: number[][],
  near: number,
  far: number,
  keyBits: 16 | 32 = 16,
  wim: WimTransform | null = null,
): Uint32Array {
  const { depths, cull } = viewDepths(scene, view, near, wim);
  return sortByDepth(depths, cull, near, far, keyBits);
}
