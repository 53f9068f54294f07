"""Scene streaming server.

Holds the authoritative scene and POI set, ingests new reconstructions
(upload endpoint and/or watched directory) and fans out snapshots or
deltas to subscribed clients. The hub itself is transport-agnostic and
thread-safe; the FastAPI layer wires it to a websocket channel and the
POI HTTP API.

Broadcast policy: one serialized writer swaps the scene atomically, per
client the cheapest complete representation is queued (delta when the
client's base matches, its queue has room and the delta is smaller than
a snapshot). Bounded send queues drop superseded scene batches whole,
never individual frames, so a slow client always ends up with the
newest complete scene.
"""

from __future__ import annotations

import json
import logging
import os
import threading
from collections import deque
from dataclasses import dataclass, fields

from fastapi import (FastAPI, HTTPException, Request, WebSocket,
                     WebSocketDisconnect)

from . import protocol
from .errors import ParseFailed, TooManyClients
from .plyio import parse_ply, serialize_ply
from .pois import Poi, PoiSet
from .protocol import ProtocolFrame
from .splats import SplatScene, empty_scene

log = logging.getLogger(__name__)

ENV_PREFIX = "SPLATSTREAM_"


@dataclass
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8787
    ingest_dir: str | None = None
    enable_upload: bool = True
    chunk_size: int = protocol.DEFAULT_CHUNK_SIZE
    delta_epsilon: float = 0.0
    max_clients: int = 64
    queue_capacity: int = 256          # frames per client send queue
    poll_interval_ms: int = 500
    record_log: str | None = None
    max_payload: int = protocol.DEFAULT_MAX_PAYLOAD

    def __post_init__(self):
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be >= 1")
        if self.queue_capacity < 2:
            raise ValueError("queue capacity must be >= 2")


def load_config(path: str | None = None, env=None, overrides: dict | None = None
                ) -> ServerConfig:
    """Config file < environment < explicit flags, later wins."""
    values: dict = {}
    if path:
        with open(path) as f:
            doc = json.load(f)
        values.update(doc)
    env = os.environ if env is None else env
    for f_ in fields(ServerConfig):
        key = ENV_PREFIX + f_.name.upper()
        if key in env:
            raw = env[key]
            if f_.type in ("int", int):
                values[f_.name] = int(raw)
            elif f_.type in ("float", float):
                values[f_.name] = float(raw)
            elif f_.type in ("bool", bool):
                values[f_.name] = raw.lower() in ("1", "true", "yes")
            else:
                values[f_.name] = raw
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    known = {f_.name for f_ in fields(ServerConfig)}
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return ServerConfig(**values)


@dataclass
class Batch:
    """A group of frames queued and evicted as one unit."""
    kind: str                  # "snapshot" | "delta" | "poi" | "ack" | "error"
    scene_version: int
    frames: list


class ClientSession:
    def __init__(self, capacity: int):
        self.capacity = capacity
        self.cond = threading.Condition()
        self.queue: deque[Batch] = deque()
        self.subscribed = False
        self.last_queued_version = 0
        self.closed = False

    def _queued_frames(self) -> int:
        return sum(len(b.frames) for b in self.queue)

    def enqueue(self, batch: Batch) -> bool:
        """Queue a batch; returns False if a delta batch was refused
        because the queue is full (caller falls back to a snapshot)."""
        with self.cond:
            if self.closed:
                return True
            if batch.kind == "snapshot":
                # a snapshot is self-contained, so every queued older
                # scene batch is superseded and dropped whole (a delta
                # left behind would dangle without its base): newest wins
                self.queue = deque(
                    b for b in self.queue
                    if not (b.kind in ("snapshot", "delta")
                            and b.scene_version < batch.scene_version))
                self.last_queued_version = batch.scene_version
            elif batch.kind == "delta":
                # never evict to make room for a delta: the batches it
                # would evict are the ones it chains from
                if self._queued_frames() + len(batch.frames) > self.capacity:
                    return False
                self.last_queued_version = batch.scene_version
            self.queue.append(batch)
            self.cond.notify_all()
            return True

    def pop(self, timeout: float | None = None) -> Batch | None:
        with self.cond:
            if not self.queue:
                self.cond.wait(timeout)
            if self.queue:
                return self.queue.popleft()
            return None

    def close(self) -> None:
        with self.cond:
            self.closed = True
            self.cond.notify_all()


class SceneHub:
    """Authoritative scene + POI state with client fan-out."""

    def __init__(self, config: ServerConfig | None = None):
        self.config = config or ServerConfig()
        self._write_lock = threading.Lock()
        self._scene: SplatScene = empty_scene(version=0)
        self._scene_ply: bytes = serialize_ply(self._scene)
        self._pois = PoiSet()
        self._sessions: set[ClientSession] = set()
        self._sessions_lock = threading.Lock()
        self._record_lock = threading.Lock()

    # --- read side (immutable snapshots) ---

    @property
    def scene(self) -> SplatScene:
        return self._scene

    @property
    def pois(self) -> PoiSet:
        return self._pois

    # --- sessions ---

    def connect(self) -> ClientSession:
        with self._sessions_lock:
            if len(self._sessions) >= self.config.max_clients:
                raise TooManyClients(f"{self.config.max_clients} clients connected")
            session = ClientSession(self.config.queue_capacity)
            self._sessions.add(session)
            return session

    def disconnect(self, session: ClientSession) -> None:
        with self._sessions_lock:
            self._sessions.discard(session)
        session.close()

    def _subscribers(self):
        with self._sessions_lock:
            return [s for s in self._sessions if s.subscribed]

    # --- frames ---

    def _snapshot_batch(self, scene: SplatScene, ply: bytes) -> Batch:
        frames = protocol.chunk_snapshot(
            ply, scene.version, scene.sh_degree, len(scene),
            self.config.chunk_size)
        return Batch("snapshot", scene.version, frames)

    def _poi_frame(self) -> ProtocolFrame:
        return ProtocolFrame(
            protocol.POI_SET, self._scene.version,
            protocol.encode_poi_set(self._pois.to_docs(), self._pois.revision))

    def _record(self, frames) -> None:
        if not self.config.record_log:
            return
        with self._record_lock:
            with open(self.config.record_log, "ab") as f:
                for frame in frames:
                    f.write(protocol.encode_frame(frame))

    # --- subscribe ---

    def subscribe(self, session: ClientSession, last_known_version: int) -> None:
        """Initial sync: Ack if up to date, else full snapshot + POI set."""
        with self._write_lock:
            session.subscribed = True
            current = self._scene
            if last_known_version == current.version:
                session.last_queued_version = current.version
                session.enqueue(Batch("ack", current.version, [
                    ProtocolFrame(protocol.ACK, current.version)]))
                return
            batch = self._snapshot_batch(current, self._scene_ply)
            session.enqueue(batch)
            session.enqueue(Batch("poi", current.version, [self._poi_frame()]))

    # --- ingest ---

    def ingest_ply(self, data: bytes) -> int:
        """Swap in a new scene version and fan out. Malformed input
        raises ParseFailed and leaves the current scene untouched."""
        try:
            parsed = parse_ply(data)
        except Exception as exc:
            log.error("ingest rejected: %s: %s", type(exc).__name__, exc)
            raise ParseFailed(f"{type(exc).__name__}: {exc}") from exc

        with self._write_lock:
            old = self._scene
            new = parsed.with_version(old.version + 1)
            ply = serialize_ply(new)

            delta_frame = None
            if len(old) or old.version > 0:
                try:
                    delta = protocol.diff_scenes(old, new, self.config.delta_epsilon)
                    payload = protocol.encode_delta(delta)
                    if len(payload) < len(ply) and len(payload) <= self.config.max_payload:
                        delta_frame = ProtocolFrame(protocol.DELTA, new.version, payload)
                except ValueError:
                    delta_frame = None     # degree change: snapshot only

            # atomic publish: readers see either old or new, never a mix
            self._scene = new
            self._scene_ply = ply

            snapshot = None
            for session in self._subscribers():
                if delta_frame is not None \
                        and session.last_queued_version == old.version \
                        and session.enqueue(
                            Batch("delta", new.version, [delta_frame])):
                    continue
                if snapshot is None:
                    snapshot = self._snapshot_batch(new, ply)
                session.enqueue(snapshot)

            if delta_frame is not None and old.version > 0:
                self._record([delta_frame])
            else:
                self._record(self._snapshot_batch(new, ply).frames)
            return new.version

    def ingest_file(self, path: str) -> int:
        with open(path, "rb") as f:
            return self.ingest_ply(f.read())

    # --- POIs ---

    def _broadcast_pois(self) -> None:
        frame = self._poi_frame()
        for session in self._subscribers():
            session.enqueue(Batch("poi", self._scene.version, [frame]))
        self._record([frame])

    def upsert_poi(self, doc: dict) -> Poi:
        poi = Poi.from_doc(doc)
        with self._write_lock:
            self._pois = self._pois.upsert(poi)
            self._broadcast_pois()
        return poi

    def remove_poi(self, poi_id: str) -> bool:
        with self._write_lock:
            before = self._pois
            after = before.remove(poi_id)
            if after is before:
                return False
            self._pois = after
            self._broadcast_pois()
        return True


class DirectoryWatcher:
    """Polls a directory for new .ply files and ingests each exactly
    once, after its size is stable across two polls (half-written files
    are never picked up)."""

    def __init__(self, hub: SceneHub, directory: str, poll_interval_ms: int = 500):
        self.hub = hub
        self.directory = directory
        self.poll_interval = poll_interval_ms / 1000.0
        self._sizes: dict[str, int] = {}
        self._ingested: set[str] = set()
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None

    def poll_once(self) -> list[str]:
        """One poll pass; returns paths ingested this pass."""
        ingested = []
        try:
            names = sorted(os.listdir(self.directory))
        except OSError as exc:
            log.warning("watch dir unreadable: %s", exc)
            return ingested
        for name in names:
            if not name.endswith(".ply"):
                continue
            path = os.path.join(self.directory, name)
            if path in self._ingested:
                continue
            try:
                size = os.stat(path).st_size
            except OSError:
                continue
            if self._sizes.get(path) == size:
                self._ingested.add(path)
                try:
                    version = self.hub.ingest_file(path)
                    log.info("ingested %s as scene version %d", name, version)
                    ingested.append(path)
                except ParseFailed as exc:
                    log.error("skipping %s: %s", name, exc)
            else:
                self._sizes[path] = size
        return ingested

    def start(self) -> None:
        def run():
            while not self._stop.wait(self.poll_interval):
                self.poll_once()
        self._thread = threading.Thread(target=run, daemon=True,
                                        name="splatstream-watcher")
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        if self._thread:
            self._thread.join(timeout=5)


# --- HTTP / websocket layer ---

def create_app(config: ServerConfig | None = None, hub: SceneHub | None = None):
    import asyncio

    from contextlib import asynccontextmanager

    config = config or ServerConfig()
    hub = hub or SceneHub(config)

    @asynccontextmanager
    async def lifespan(app):
        if config.ingest_dir:
            watcher = DirectoryWatcher(hub, config.ingest_dir,
                                       config.poll_interval_ms)
            watcher.start()
            app.state.watcher = watcher
        yield
        if app.state.watcher:
            app.state.watcher.stop()

    app = FastAPI(title="splatstream scene server", lifespan=lifespan)
    app.state.hub = hub
    app.state.watcher = None

    @app.get("/api/scene/version")
    def scene_version():
        scene = hub.scene
        return {"version": scene.version, "splat_count": len(scene)}

    @app.get("/api/pois")
    def list_pois():
        return hub.pois.to_docs()

    @app.post("/api/pois")
    def create_poi(doc: dict):
        try:
            poi = hub.upsert_poi(doc)
        except (KeyError, ValueError, TypeError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return poi.to_doc()

    @app.delete("/api/pois/{poi_id}")
    def delete_poi(poi_id: str):
        if not hub.remove_poi(poi_id):
            raise HTTPException(status_code=404, detail=f"unknown poi '{poi_id}'")
        return {"deleted": poi_id}

    if config.enable_upload:
        @app.post("/api/ingest")
        async def ingest(request: Request):
            body = await request.body()
            try:
                version = hub.ingest_ply(body)
            except ParseFailed as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            return {"version": version}

    @app.websocket("/ws/scene")
    async def ws_scene(ws: WebSocket):
        await ws.accept()
        try:
            session = hub.connect()
        except TooManyClients as exc:
            await ws.send_bytes(protocol.encode_frame(ProtocolFrame(
                protocol.ERROR, hub.scene.version,
                protocol.encode_error(1, str(exc)))))
            await ws.close()
            return

        loop = asyncio.get_running_loop()
        stop = False

        async def sender():
            while not stop:
                batch = await loop.run_in_executor(None, session.pop, 0.05)
                if batch is None:
                    continue
                for frame in batch.frames:
                    await ws.send_bytes(protocol.encode_frame(frame))

        send_task = asyncio.create_task(sender())
        try:
            while True:
                data = await ws.receive_bytes()
                try:
                    frame, _ = protocol.decode_frame(data,
                                                     max_payload=config.max_payload)
                except Exception as exc:
                    session.enqueue(Batch("error", hub.scene.version, [
                        ProtocolFrame(protocol.ERROR, hub.scene.version,
                                      protocol.encode_error(2, str(exc)))]))
                    continue
                if frame.frame_type == protocol.SUBSCRIBE:
                    last_known = protocol.decode_subscribe(frame.payload)
                    hub.subscribe(session, last_known)
        except WebSocketDisconnect:
            pass
        finally:
            stop = True
            hub.disconnect(session)
            send_task.cancel()
            try:
                await send_task
            except (asyncio.CancelledError, Exception):
                pass

    return app


def run_server(config: ServerConfig) -> None:
    import uvicorn

    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
