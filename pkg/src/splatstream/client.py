"""Client-side scene synchronization state machine.

Consumes protocol frames (from a live connection or a replay log) and
maintains the last *complete* scene: snapshot chunks accumulate aside
and only swap in at SnapshotEnd, deltas build the new scene aside, so a
reader never observes a torn scene.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import protocol
from .errors import ChunkGap, ProtocolError, VersionMismatch
from .plyio import parse_ply
from .pois import PoiSet
from .protocol import ProtocolFrame
from .splats import SplatScene


@dataclass
class SceneReceiver:
    scene: SplatScene | None = None
    pois: PoiSet = field(default_factory=PoiSet)
    frames_seen: int = 0
    _pending: list = field(default_factory=list)

    @property
    def scene_version(self) -> int:
        return self.scene.version if self.scene is not None else 0

    def feed(self, frame: ProtocolFrame) -> None:
        self.frames_seen += 1
        ftype = frame.frame_type
        if ftype == protocol.SNAPSHOT_BEGIN:
            self._pending = [frame]
        elif ftype == protocol.SNAPSHOT_CHUNK:
            if not self._pending:
                raise ChunkGap("chunk without SnapshotBegin")
            self._pending.append(frame)
        elif ftype == protocol.SNAPSHOT_END:
            if not self._pending:
                raise ChunkGap("SnapshotEnd without SnapshotBegin")
            pending = self._pending + [frame]
            self._pending = []
            body = protocol.reassemble(pending)
            scene = parse_ply(body)
            self.scene = scene.with_version(frame.scene_version)
        elif ftype == protocol.DELTA:
            delta = protocol.decode_delta(frame.payload)
            if self.scene is None:
                raise VersionMismatch("delta received before any snapshot")
            self.scene = protocol.apply_delta_set(self.scene, delta)
        elif ftype == protocol.POI_SET:
            docs, revision = protocol.decode_poi_set(frame.payload)
            self.pois = PoiSet.from_docs(docs, revision)
        elif ftype in (protocol.ACK, protocol.ERROR, protocol.SUBSCRIBE):
            pass
        else:
            raise ProtocolError(f"unknown frame type {ftype:#x}")

    def feed_bytes(self, data: bytes) -> None:
        for frame in protocol.decode_stream(data):
            self.feed(frame)
