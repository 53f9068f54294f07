/**
 * Splat scene storage and PLY parsing (binary little-endian, float32
 * scalar properties), mirroring the server's canonical layout: raw
 * fields in a single record matrix per splat —
 * position(3) rotation(4) logScale(3) opacity(1) sh(3*(d+1)^2).
 */

import {
  DeltaSet,
  IndexOutOfRange,
  recordFloats,
  VersionMismatch,
} from "./protocol.js";

export class PlyParseError extends Error {}

export interface Scene {
  /** (count x recordFloats) row-major raw-field matrix. */
  records: Float32Array;
  count: number;
  shDegree: number;
  version: bigint;
}

export function emptyScene(version: number | bigint = 0): Scene {
  return {
    records: new Float32Array(0),
    count: 0,
    shDegree: 0,
    version: BigInt(version),
  };
}

const REST_COUNTS: Record<number, number> = { 0: 0, 9: 1, 24: 2, 45: 3 };

const REQUIRED = [
  "x",
  "y",
  "z",
  "f_dc_0",
  "f_dc_1",
  "f_dc_2",
  "opacity",
  "scale_0",
  "scale_1",
  "scale_2",
  "rot_0",
  "rot_1",
  "rot_2",
  "rot_3",
];

export function position(scene: Scene, i: number): [number, number, number] {
  const stride = recordFloats(scene.shDegree);
  return [
    scene.records[i * stride],
    scene.records[i * stride + 1],
    scene.records[i * stride + 2],
  ];
}

export function opacityLogit(scene: Scene, i: number): number {
  return scene.records[i * recordFloats(scene.shDegree) + 10];
}

export function baseColor(scene: Scene, i: number): [number, number, number] {
  // 0.5 + C0 * f_dc, clamped to [0, 1]
  const C0 = 0.28209479177387814;
  const stride = recordFloats(scene.shDegree);
  const m = (scene.shDegree + 1) ** 2;
  const sh = i * stride + 11;
  const clamp = (v: number) => Math.min(1, Math.max(0, v));
  return [
    clamp(0.5 + C0 * scene.records[sh]),
    clamp(0.5 + C0 * scene.records[sh + m]),
    clamp(0.5 + C0 * scene.records[sh + 2 * m]),
  ];
}

export function parsePly(data: Uint8Array, version: number | bigint = 0): Scene {
  const headEnd = findHeaderEnd(data);
  const headerText = new TextDecoder().decode(data.subarray(0, headEnd));
  const lines = headerText.split("\n");
  if (lines[0].trim() !== "ply") {
    throw new PlyParseError("input does not start with 'ply'");
  }

  let format = "";
  let vertexCount = -1;
  const props: string[] = [];
  for (const line of lines.slice(1)) {
    const parts = line.trim().split(/\s+/);
    if (parts[0] === "format") {
      format = parts[1];
    } else if (parts[0] === "element") {
      if (parts[1] !== "vertex") {
        throw new PlyParseError(`unsupported element '${parts[1]}'`);
      }
      vertexCount = parseInt(parts[2], 10);
    } else if (parts[0] === "property") {
      if (parts[1] !== "float" && parts[1] !== "float32") {
        throw new PlyParseError(`unsupported property type '${parts[1]}'`);
      }
      props.push(parts[2]);
    }
  }
  if (format !== "binary_little_endian") {
    throw new PlyParseError(`unsupported format '${format}'`);
  }
  if (vertexCount < 0 || !Number.isFinite(vertexCount)) {
    throw new PlyParseError("header missing vertex element");
  }

  const col = new Map(props.map((name, i) => [name, i]));
  for (const req of REQUIRED) {
    if (!col.has(req)) {
      throw new PlyParseError(`required property '${req}' absent`);
    }
  }
  let nRest = 0;
  while (col.has(`f_rest_${nRest}`)) nRest++;
  const shDegree = REST_COUNTS[nRest];
  if (shDegree === undefined) {
    throw new PlyParseError(`f_rest count ${nRest} matches no sh degree`);
  }

  const nProps = props.length;
  const body = data.subarray(headEnd);
  if (body.length < vertexCount * nProps * 4) {
    throw new PlyParseError(
      `body holds ${body.length} bytes, header promises ${vertexCount * nProps * 4}`,
    );
  }
  const cols = new Float32Array(
    body.slice(0, vertexCount * nProps * 4).buffer,
  );

  const stride = recordFloats(shDegree);
  const m = (shDegree + 1) ** 2;
  const perCh = m - 1;
  const records = new Float32Array(vertexCount * stride);
  // record layout: pos(3) rot(4) logScale(3) opacity(1) sh channel-major
  const srcIdx: number[] = [
    col.get("x")!,
    col.get("y")!,
    col.get("z")!,
    col.get("rot_0")!,
    col.get("rot_1")!,
    col.get("rot_2")!,
    col.get("rot_3")!,
    col.get("scale_0")!,
    col.get("scale_1")!,
    col.get("scale_2")!,
    col.get("opacity")!,
  ];
  for (let ch = 0; ch < 3; ch++) {
    srcIdx.push(col.get(`f_dc_${ch}`)!);
    for (let k = 0; k < perCh; k++) {
      srcIdx.push(col.get(`f_rest_${ch * perCh + k}`)!);
    }
  }
  for (let i = 0; i < vertexCount; i++) {
    const src = i * nProps;
    const dst = i * stride;
    for (let j = 0; j < stride; j++) {
      records[dst + j] = cols[src + srcIdx[j]];
    }
  }
  return { records, count: vertexCount, shDegree, version: BigInt(version) };
}

function findHeaderEnd(data: Uint8Array): number {
  const marker = new TextEncoder().encode("end_header\n");
  outer: for (let i = 0; i + marker.length <= data.length; i++) {
    for (let j = 0; j < marker.length; j++) {
      if (data[i + j] !== marker[j]) continue outer;
    }
    return i + marker.length;
  }
  throw new PlyParseError("header has no end_header line");
}

/** Apply an index-aligned delta, returning a new scene (input untouched). */
export function applyDeltaSet(scene: Scene, delta: DeltaSet): Scene {
  if (delta.baseVersion !== scene.version) {
    throw new VersionMismatch(
      `delta base ${delta.baseVersion} != scene version ${scene.version}`,
    );
  }
  if (scene.shDegree !== delta.shDegree) {
    throw new VersionMismatch("delta sh degree does not match scene");
  }
  const stride = recordFloats(delta.shDegree);
  let count = scene.count;
  let records = scene.records.slice();

  for (let k = 0; k < delta.updatedIndices.length; k++) {
    const i = delta.updatedIndices[k];
    if (i >= count) {
      throw new IndexOutOfRange(`updated index ${i} >= ${count}`);
    }
    records.set(
      delta.updatedRecords.subarray(k * stride, (k + 1) * stride),
      i * stride,
    );
  }
  if (delta.truncateTo !== null) {
    if (delta.truncateTo > count) {
      throw new IndexOutOfRange("truncate_to beyond scene size");
    }
    count = delta.truncateTo;
    records = records.slice(0, count * stride);
  }
  if (delta.appendedCount > 0) {
    const grown = new Float32Array((count + delta.appendedCount) * stride);
    grown.set(records.subarray(0, count * stride));
    grown.set(delta.appendedRecords, count * stride);
    records = grown;
    count += delta.appendedCount;
  }
  return {
    records,
    count,
    shDegree: delta.shDegree,
    version: delta.targetVersion,
  };
}
