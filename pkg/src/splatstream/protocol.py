"""Bit-exact framing for scene snapshots, deltas and POI updates.

Frames are fixed 24-byte headers plus a CRC32-protected payload, little
endian throughout so snapshot chunks splice directly into PLY bodies.
The same byte stream doubles as an on-disk replay log (concatenated
frames).
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadFrameMagic,
    BadPayload,
    BadVersion,
    ChunkGap,
    CrcMismatch,
    IndexOutOfRange,
    LengthMismatch,
    OversizePayload,
    Truncated,
    VersionMismatch,
    VersionOrder,
)
from .splats import SplatScene

MAGIC = b"GSPT"
PROTOCOL_VERSION = 0x01
HEADER_LEN = 24
DEFAULT_MAX_PAYLOAD = 4 * 1024 * 1024
DEFAULT_CHUNK_SIZE = 262_144

# frame types
SNAPSHOT_BEGIN = 0x01
SNAPSHOT_CHUNK = 0x02
SNAPSHOT_END = 0x03
DELTA = 0x04
POI_SET = 0x05
SUBSCRIBE = 0x10
ACK = 0x11
ERROR = 0x7F

FRAME_TYPE_NAMES = {
    SNAPSHOT_BEGIN: "SnapshotBegin",
    SNAPSHOT_CHUNK: "SnapshotChunk",
    SNAPSHOT_END: "SnapshotEnd",
    DELTA: "Delta",
    POI_SET: "PoiSet",
    SUBSCRIBE: "Subscribe",
    ACK: "Ack",
    ERROR: "Error",
}

_HEADER = struct.Struct("<4sBBBBQLL")


@dataclass(frozen=True)
class ProtocolFrame:
    frame_type: int
    scene_version: int
    payload: bytes = b""
    flags: int = 0


def encode_frame(frame: ProtocolFrame) -> bytes:
    header = _HEADER.pack(
        MAGIC, PROTOCOL_VERSION, frame.frame_type, frame.flags, 0,
        frame.scene_version, len(frame.payload),
        zlib.crc32(frame.payload) & 0xFFFFFFFF,
    )
    return header + frame.payload


def decode_frame(data: bytes, offset: int = 0,
                 max_payload: int = DEFAULT_MAX_PAYLOAD):
    """Decode one frame at ``offset``; returns (frame, next_offset).

    Verifies magic, protocol version and CRC before returning.
    """
    if len(data) - offset < HEADER_LEN:
        raise Truncated(f"{len(data) - offset} bytes, header needs {HEADER_LEN}")
    magic, version, ftype, flags, reserved, scene_version, plen, crc = \
        _HEADER.unpack_from(data, offset)
    if magic != MAGIC:
        raise BadFrameMagic(f"bad magic {magic!r}")
    if version != PROTOCOL_VERSION:
        raise BadVersion(f"protocol version {version:#x}")
    if plen > max_payload:
        raise OversizePayload(f"payload {plen} exceeds max {max_payload}")
    body_start = offset + HEADER_LEN
    if len(data) - body_start < plen:
        raise Truncated(f"payload needs {plen} bytes, {len(data) - body_start} left")
    payload = bytes(data[body_start:body_start + plen])
    if (zlib.crc32(payload) & 0xFFFFFFFF) != crc:
        raise CrcMismatch("payload CRC32 does not match header")
    frame = ProtocolFrame(frame_type=ftype, scene_version=scene_version,
                          payload=payload, flags=flags)
    return frame, body_start + plen


def decode_stream(data: bytes, max_payload: int = DEFAULT_MAX_PAYLOAD):
    """All frames in a concatenated byte stream (replay log)."""
    frames = []
    off = 0
    while off < len(data):
        frame, off = decode_frame(data, off, max_payload)
        frames.append(frame)
    return frames


# --- typed payloads ---

def encode_snapshot_begin(total_chunks: int, total_bytes: int, sh_degree: int,
                          splat_count: int) -> bytes:
    return struct.pack("<LQBQ", total_chunks, total_bytes, sh_degree, splat_count)


def decode_snapshot_begin(payload: bytes):
    if len(payload) != 21:
        raise BadPayload(f"SnapshotBegin payload is {len(payload)} bytes, want 21")
    return struct.unpack("<LQBQ", payload)


def encode_error(code: int, message: str) -> bytes:
    return struct.pack("<H", code) + message.encode("utf-8")


def decode_error(payload: bytes):
    if len(payload) < 2:
        raise BadPayload("Error payload shorter than 2 bytes")
    return struct.unpack("<H", payload[:2])[0], payload[2:].decode("utf-8")


def encode_subscribe(last_known_version: int) -> bytes:
    return struct.pack("<Q", last_known_version)


def decode_subscribe(payload: bytes) -> int:
    if len(payload) != 8:
        raise BadPayload("Subscribe payload must be 8 bytes")
    return struct.unpack("<Q", payload)[0]


def encode_poi_set(docs, revision: int = 0) -> bytes:
    return json.dumps({"revision": revision, "pois": list(docs)},
                      separators=(",", ":")).encode("utf-8")


def decode_poi_set(payload: bytes):
    try:
        doc = json.loads(payload.decode("utf-8"))
        return doc["pois"], doc.get("revision", 0)
    except (ValueError, KeyError, UnicodeDecodeError) as exc:
        raise BadPayload(f"PoiSet payload: {exc}") from exc


# --- delta sets ---

@dataclass
class DeltaSet:
    base_version: int
    target_version: int
    sh_degree: int
    updated_indices: np.ndarray = field(
        default_factory=lambda: np.zeros(0, np.uint32))
    updated_records: bytes = b""
    appended_records: bytes = b""
    appended_count: int = 0
    truncate_to: int | None = None


def record_nbytes(sh_degree: int) -> int:
    # position 3 + rotation 4 + log-scale 3 + opacity 1 + sh 3*(d+1)^2
    return 4 * (11 + 3 * (sh_degree + 1) ** 2)


def _scene_record_matrix(scene: SplatScene) -> np.ndarray:
    """(N, F) float32 raw-field matrix in the delta wire order."""
    n = len(scene)
    m = (scene.sh_degree + 1) ** 2
    sh_flat = scene.sh_coeffs.reshape(n, 3 * m)
    return np.hstack([
        scene.positions, scene.raw_rotations, scene.raw_log_scales,
        scene.raw_opacities[:, None], sh_flat,
    ]).astype("<f4")


def _matrix_to_scene(mat: np.ndarray, sh_degree: int, version: int) -> SplatScene:
    m = (sh_degree + 1) ** 2
    n = len(mat)
    return SplatScene(
        positions=mat[:, 0:3].copy(),
        raw_rotations=mat[:, 3:7].copy(),
        raw_log_scales=mat[:, 7:10].copy(),
        raw_opacities=mat[:, 10].copy(),
        sh_coeffs=mat[:, 11:].reshape(n, 3, m).copy(),
        sh_degree=sh_degree,
        version=version,
    )


def diff_scenes(old: SplatScene, new: SplatScene, epsilon: float = 0.0) -> DeltaSet:
    """Index-aligned raw-field diff; applying it to ``old`` reproduces
    ``new`` exactly when epsilon is 0."""
    if old.version >= new.version:
        raise VersionOrder(f"old version {old.version} >= new {new.version}")
    if old.sh_degree != new.sh_degree:
        raise ValueError("diff requires matching sh degrees; send a snapshot")

    old_mat = _scene_record_matrix(old)
    new_mat = _scene_record_matrix(new)
    common = min(len(old_mat), len(new_mat))
    if common:
        diff = np.abs(new_mat[:common].astype(np.float64)
                      - old_mat[:common].astype(np.float64))
        changed = np.nonzero((diff > epsilon).any(axis=1))[0].astype(np.uint32)
    else:
        changed = np.zeros(0, np.uint32)

    appended = new_mat[common:]
    return DeltaSet(
        base_version=old.version,
        target_version=new.version,
        sh_degree=new.sh_degree,
        updated_indices=changed,
        updated_records=new_mat[changed].tobytes(),
        appended_records=appended.tobytes(),
        appended_count=len(appended),
        truncate_to=len(new_mat) if len(new_mat) < len(old_mat) else None,
    )


def apply_delta_set(scene: SplatScene, delta: DeltaSet) -> SplatScene:
    """Build the target scene aside and return it; the input scene is
    never mutated (atomic-swap contract)."""
    if delta.base_version != scene.version:
        raise VersionMismatch(
            f"delta base {delta.base_version} != scene version {scene.version}")
    if scene.sh_degree != delta.sh_degree:
        raise VersionMismatch("delta sh degree does not match scene")

    nfloats = record_nbytes(delta.sh_degree) // 4
    mat = _scene_record_matrix(scene).copy()
    if len(delta.updated_indices):
        idx = delta.updated_indices.astype(np.int64)
        if idx.max() >= len(mat):
            raise IndexOutOfRange(f"updated index {idx.max()} >= {len(mat)}")
        updated = np.frombuffer(delta.updated_records, "<f4").reshape(-1, nfloats)
        mat[idx] = updated
    if delta.truncate_to is not None:
        if delta.truncate_to > len(mat):
            raise IndexOutOfRange("truncate_to beyond scene size")
        mat = mat[:delta.truncate_to]
    if delta.appended_count:
        appended = np.frombuffer(delta.appended_records, "<f4").reshape(-1, nfloats)
        mat = np.vstack([mat, appended])
    return _matrix_to_scene(np.ascontiguousarray(mat), delta.sh_degree,
                            delta.target_version)


def encode_delta(delta: DeltaSet) -> bytes:
    head = struct.pack(
        "<QQBLLBL",
        delta.base_version, delta.target_version, delta.sh_degree,
        len(delta.updated_indices), delta.appended_count,
        0 if delta.truncate_to is None else 1,
        delta.truncate_to or 0,
    )
    return (head
            + delta.updated_indices.astype("<u4").tobytes()
            + delta.updated_records
            + delta.appended_records)


def decode_delta(payload: bytes) -> DeltaSet:
    head_len = struct.calcsize("<QQBLLBL")
    if len(payload) < head_len:
        raise BadPayload("delta payload shorter than header")
    base, target, degree, n_upd, n_app, has_trunc, trunc = \
        struct.unpack_from("<QQBLLBL", payload)
    rec = record_nbytes(degree)
    off = head_len
    idx_bytes = 4 * n_upd
    need = off + idx_bytes + rec * (n_upd + n_app)
    if len(payload) != need:
        raise BadPayload(f"delta payload is {len(payload)} bytes, want {need}")
    indices = np.frombuffer(payload, "<u4", count=n_upd, offset=off)
    off += idx_bytes
    updated = payload[off:off + rec * n_upd]
    off += rec * n_upd
    appended = payload[off:]
    return DeltaSet(
        base_version=base, target_version=target, sh_degree=degree,
        updated_indices=indices.copy(), updated_records=updated,
        appended_records=appended, appended_count=n_app,
        truncate_to=trunc if has_trunc else None,
    )


# --- snapshot chunking ---

def chunk_snapshot(ply_bytes: bytes, scene_version: int, sh_degree: int,
                   splat_count: int, chunk_size: int = DEFAULT_CHUNK_SIZE):
    """Begin + chunks + End frames covering the serialized scene."""
    if chunk_size < 1:
        raise ValueError("chunk_size must be >= 1")
    total = len(ply_bytes)
    n_chunks = max(1, -(-total // chunk_size))
    frames = [ProtocolFrame(
        SNAPSHOT_BEGIN, scene_version,
        encode_snapshot_begin(n_chunks, total, sh_degree, splat_count))]
    for i in range(n_chunks):
        piece = ply_bytes[i * chunk_size:(i + 1) * chunk_size]
        frames.append(ProtocolFrame(
            SNAPSHOT_CHUNK, scene_version, struct.pack("<L", i) + piece))
    frames.append(ProtocolFrame(SNAPSHOT_END, scene_version))
    return frames


def reassemble(frames) -> bytes:
    """Byte-identical snapshot body from an in-order frame sequence."""
    frames = list(frames)
    if not frames or frames[0].frame_type != SNAPSHOT_BEGIN:
        raise ChunkGap("snapshot must start with SnapshotBegin")
    total_chunks, total_bytes, _, _ = decode_snapshot_begin(frames[0].payload)
    parts = []
    seen = 0
    for frame in frames[1:]:
        if frame.frame_type == SNAPSHOT_END:
            break
        if frame.frame_type != SNAPSHOT_CHUNK:
            raise ChunkGap(f"unexpected frame type {frame.frame_type:#x}")
        if len(frame.payload) < 4:
            raise BadPayload("chunk payload shorter than its index")
        (index,) = struct.unpack_from("<L", frame.payload)
        if index != seen:
            raise ChunkGap(f"expected chunk {seen}, got {index}")
        parts.append(frame.payload[4:])
        seen += 1
    else:
        raise ChunkGap("snapshot not terminated by SnapshotEnd")
    if seen != total_chunks:
        raise ChunkGap(f"expected chunk {seen} of {total_chunks}")
    body = b"".join(parts)
    if len(body) != total_bytes:
        raise LengthMismatch(f"reassembled {len(body)} bytes, want {total_bytes}")
    return body
