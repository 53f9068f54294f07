/**
 * Binary frame protocol: fixed 24-byte little-endian header with a
 * CRC32-protected payload. Byte-compatible with the server's framing.
 */

export const MAGIC = 0x47535054; // "GSPT" big-endian read of the 4 bytes
export const PROTOCOL_VERSION = 0x01;
export const HEADER_LEN = 24;
export const DEFAULT_MAX_PAYLOAD = 4 * 1024 * 1024;

export const SNAPSHOT_BEGIN = 0x01;
export const SNAPSHOT_CHUNK = 0x02;
export const SNAPSHOT_END = 0x03;
export const DELTA = 0x04;
export const POI_SET = 0x05;
export const SUBSCRIBE = 0x10;
export const ACK = 0x11;
export const ERROR_FRAME = 0x7f;

export class ProtocolError extends Error {}
export class BadFrameMagic extends ProtocolError {}
export class BadVersion extends ProtocolError {}
export class CrcMismatch extends ProtocolError {}
export class Truncated extends ProtocolError {}
export class OversizePayload extends ProtocolError {}
export class BadPayload extends ProtocolError {}
export class ChunkGap extends ProtocolError {}
export class LengthMismatch extends ProtocolError {}
export class VersionMismatch extends ProtocolError {}
export class IndexOutOfRange extends ProtocolError {}

export interface ProtocolFrame {
  frameType: number;
  sceneVersion: bigint;
  payload: Uint8Array;
  flags: number;
}

export function frame(
  frameType: number,
  sceneVersion: number | bigint,
  payload: Uint8Array = new Uint8Array(0),
  flags = 0,
): ProtocolFrame {
  return { frameType, sceneVersion: BigInt(sceneVersion), payload, flags };
}

/* CRC32 (IEEE 802.3 polynomial, same as zlib.crc32). */
const CRC_TABLE = (() => {
  const table = new Uint32Array(256);
  for (let n = 0; n < 256; n++) {
    let c = n;
    for (let k = 0; k < 8; k++) {
      c = c & 1 ? 0xedb88320 ^ (c >>> 1) : c >>> 1;
    }
    table[n] = c;
  }
  return table;
})();

export function crc32(data: Uint8Array): number {
  let crc = 0xffffffff;
  for (let i = 0; i < data.length; i++) {
    crc = CRC_TABLE[(crc ^ data[i]) & 0xff] ^ (crc >>> 8);
  }
  return (crc ^ 0xffffffff) >>> 0;
}

export function encodeFrame(f: ProtocolFrame): Uint8Array {
  const out = new Uint8Array(HEADER_LEN + f.payload.length);
  const view = new DataView(out.buffer);
  out[0] = 0x47; // G
  out[1] = 0x53; // S
  out[2] = 0x50; // P
  out[3] = 0x54; // T
  out[4] = PROTOCOL_VERSION;
  out[5] = f.frameType;
  out[6] = f.flags;
  out[7] = 0; // reserved
  view.setBigUint64(8, f.sceneVersion, true);
  view.setUint32(16, f.payload.length, true);
  view.setUint32(20, crc32(f.payload), true);
  out.set(f.payload, HEADER_LEN);
  return out;
}

export function decodeFrame(
  data: Uint8Array,
  offset = 0,
  maxPayload = DEFAULT_MAX_PAYLOAD,
): [ProtocolFrame, number] {
  if (data.length - offset < HEADER_LEN) {
    throw new Truncated(
      `${data.length - offset} bytes, header needs ${HEADER_LEN}`,
    );
  }
  const view = new DataView(data.buffer, data.byteOffset + offset);
  if (
    data[offset] !== 0x47 ||
    data[offset + 1] !== 0x53 ||
    data[offset + 2] !== 0x50 ||
    data[offset + 3] !== 0x54
  ) {
    throw new BadFrameMagic("bad magic");
  }
  if (data[offset + 4] !== PROTOCOL_VERSION) {
    throw new BadVersion(`protocol version 0x${data[offset + 4].toString(16)}`);
  }
  const frameType = data[offset + 5];
  const flags = data[offset + 6];
  const sceneVersion = view.getBigUint64(8, true);
  const plen = view.getUint32(16, true);
  const crc = view.getUint32(20, true);
  if (plen > maxPayload) {
    throw new OversizePayload(`payload ${plen} exceeds max ${maxPayload}`);
  }
  const bodyStart = offset + HEADER_LEN;
  if (data.length - bodyStart < plen) {
    throw new Truncated(`payload needs ${plen} bytes`);
  }
  const payload = data.slice(bodyStart, bodyStart + plen);
  if (crc32(payload) !== crc) {
    throw new CrcMismatch("payload CRC32 does not match header");
  }
  return [{ frameType, sceneVersion, payload, flags }, bodyStart + plen];
}

export function decodeStream(data: Uint8Array): ProtocolFrame[] {
  const frames: ProtocolFrame[] = [];
  let off = 0;
  while (off < data.length) {
    const [f, next] = decodeFrame(data, off);
    frames.push(f);
    off = next;
  }
  return frames;
}

/* --- typed payloads --- */

export interface SnapshotBegin {
  totalChunks: number;
  totalBytes: number;
  shDegree: number;
  splatCount: number;
}

export function decodeSnapshotBegin(payload: Uint8Array): SnapshotBegin {
  if (payload.length !== 21) {
    throw new BadPayload(`SnapshotBegin payload is ${payload.length}, want 21`);
  }
  const view = new DataView(payload.buffer, payload.byteOffset);
  return {
    totalChunks: view.getUint32(0, true),
    totalBytes: Number(view.getBigUint64(4, true)),
    shDegree: payload[12],
    splatCount: Number(view.getBigUint64(13, true)),
  };
}

export function encodeSubscribe(lastKnownVersion: number | bigint): Uint8Array {
  const out = new Uint8Array(8);
  new DataView(out.buffer).setBigUint64(0, BigInt(lastKnownVersion), true);
  return out;
}

export function decodeError(payload: Uint8Array): [number, string] {
  if (payload.length < 2) {
    throw new BadPayload("Error payload shorter than 2 bytes");
  }
  const code = new DataView(payload.buffer, payload.byteOffset).getUint16(
    0,
    true,
  );
  return [code, new TextDecoder().decode(payload.subarray(2))];
}

export interface PoiDoc {
  id: string;
  class: string;
  label: string;
  position: [number, number, number];
  updated_at: number;
}

export function decodePoiSet(payload: Uint8Array): [PoiDoc[], number] {
  try {
    const doc = JSON.parse(new TextDecoder().decode(payload));
    return [doc.pois, doc.revision ?? 0];
  } catch (exc) {
    throw new BadPayload(`PoiSet payload: ${exc}`);
  }
}

/* --- delta sets --- */

export interface DeltaSet {
  baseVersion: bigint;
  targetVersion: bigint;
  shDegree: number;
  updatedIndices: Uint32Array;
  updatedRecords: Float32Array;
  appendedRecords: Float32Array;
  appendedCount: number;
  truncateTo: number | null;
}

export function recordFloats(shDegree: number): number {
  // position 3 + rotation 4 + log-scale 3 + opacity 1 + sh 3*(d+1)^2
  return 11 + 3 * (shDegree + 1) ** 2;
}

const DELTA_HEAD = 8 + 8 + 1 + 4 + 4 + 1 + 4; // <QQBLLBL

export function decodeDelta(payload: Uint8Array): DeltaSet {
  if (payload.length < DELTA_HEAD) {
    throw new BadPayload("delta payload shorter than header");
  }
  const view = new DataView(payload.buffer, payload.byteOffset);
  const baseVersion = view.getBigUint64(0, true);
  const targetVersion = view.getBigUint64(8, true);
  const shDegree = payload[16];
  const nUpd = view.getUint32(17, true);
  const nApp = view.getUint32(21, true);
  const hasTrunc = payload[25];
  const trunc = view.getUint32(26, true);
  const rec = recordFloats(shDegree);
  const need = DELTA_HEAD + 4 * nUpd + 4 * rec * (nUpd + nApp);
  if (payload.length !== need) {
    throw new BadPayload(`delta payload is ${payload.length} bytes, want ${need}`);
  }
  let off = DELTA_HEAD;
  // copy via slice so typed views are aligned regardless of frame offset
  const updatedIndices = new Uint32Array(
    payload.slice(off, off + 4 * nUpd).buffer,
  );
  off += 4 * nUpd;
  const updatedRecords = new Float32Array(
    payload.slice(off, off + 4 * rec * nUpd).buffer,
  );
  off += 4 * rec * nUpd;
  const appendedRecords = new Float32Array(payload.slice(off).buffer);
  return {
    baseVersion,
    targetVersion,
    shDegree,
    updatedIndices,
    updatedRecords,
    appendedRecords,
    appendedCount: nApp,
    truncateTo: hasTrunc ? trunc : null,
  };
}
