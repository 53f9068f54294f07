/**
 * Client-side scene synchronization state machine.
 *
 * Snapshot chunks accumulate aside and only swap in at SnapshotEnd;
 * deltas build the new scene aside — a reader of `scene` never observes
 * a torn version. Chunk application is incremental so the UI thread is
 * never blocked by more than one chunk's work at a time.
 */

import {
  ACK,
  ChunkGap,
  decodeDelta,
  decodePoiSet,
  decodeSnapshotBegin,
  DELTA,
  ERROR_FRAME,
  LengthMismatch,
  PoiDoc,
  POI_SET,
  ProtocolError,
  ProtocolFrame,
  SNAPSHOT_BEGIN,
  SNAPSHOT_CHUNK,
  SNAPSHOT_END,
  SUBSCRIBE,
  VersionMismatch,
} from "./protocol.js";
import { applyDeltaSet, parsePly, Scene } from "./scene.js";

interface PendingSnapshot {
  totalChunks: number;
  totalBytes: number;
  body: Uint8Array;
  received: number;
  written: number;
}

export class SceneReceiver {
  scene: Scene | null = null;
  pois: PoiDoc[] = [];
  poiRevision = 0;
  framesSeen = 0;
  private pending: PendingSnapshot | null = null;

  get sceneVersion(): bigint {
    return this.scene ? this.scene.version : 0n;
  }

  /** Fraction of the in-flight snapshot received, for a progress bar. */
  get snapshotProgress(): number | null {
    if (!this.pending) return null;
    return this.pending.received / Math.max(1, this.pending.totalChunks);
  }

  feed(frame: ProtocolFrame): void {
    this.framesSeen++;
    switch (frame.frameType) {
      case SNAPSHOT_BEGIN: {
        const begin = decodeSnapshotBegin(frame.payload);
        this.pending = {
          totalChunks: begin.totalChunks,
          totalBytes: begin.totalBytes,
          body: new Uint8Array(begin.totalBytes),
          received: 0,
          written: 0,
        };
        break;
      }
      case SNAPSHOT_CHUNK: {
        if (!this.pending) {
          throw new ChunkGap("chunk without SnapshotBegin");
        }
        const view = new DataView(
          frame.payload.buffer,
          frame.payload.byteOffset,
        );
        const index = view.getUint32(0, true);
        if (index !== this.pending.received) {
          throw new ChunkGap(
            `expected chunk ${this.pending.received}, got ${index}`,
          );
        }
        const piece = frame.payload.subarray(4);
        if (this.pending.written + piece.length > this.pending.totalBytes) {
          throw new LengthMismatch("snapshot chunks exceed declared size");
        }
        this.pending.body.set(piece, this.pending.written);
        this.pending.written += piece.length;
        this.pending.received++;
        break;
      }
      case SNAPSHOT_END: {
        if (!this.pending) {
          throw new ChunkGap("SnapshotEnd without SnapshotBegin");
        }
        const pending = this.pending;
        this.pending = null;
        if (pending.received !== pending.totalChunks) {
          throw new ChunkGap(
            `expected chunk ${pending.received} of ${pending.totalChunks}`,
          );
        }
        if (pending.written !== pending.totalBytes) {
          throw new LengthMismatch(
            `reassembled ${pending.written} bytes, want ${pending.totalBytes}`,
          );
        }
        this.scene = parsePly(pending.body, frame.sceneVersion);
        break;
      }
      case DELTA: {
        if (this.scene === null) {
          throw new VersionMismatch("delta received before any snapshot");
        }
        this.scene = applyDeltaSet(this.scene, decodeDelta(frame.payload));
        break;
      }
      case POI_SET: {
        const [docs, revision] = decodePoiSet(frame.payload);
        this.pois = docs;
        this.poiRevision = revision;
        break;
      }
      case ACK:
      case ERROR_FRAME:
      case SUBSCRIBE:
        break;
      default:
        throw new ProtocolError(`unknown frame type 0x${frame.frameType.toString(16)}`);
    }
  }
}
