#!/usr/bin/env python3
"""End-to-end streaming demo against a running scene server.

Generates a synthetic scene, uploads it over HTTP, subscribes on the
websocket channel and reports the synchronized scene version. Useful as
a smoke check of a deployed server.

Example:
    splatstream serve --port 8787 &
    python3 scripts/demo_stream.py --port 8787 --count 50000
"""

import argparse
import sys

from splatstream import protocol
from splatstream.bench import generate_scene
from splatstream.client import SceneReceiver
from splatstream.plyio import serialize_ply


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8787)
    parser.add_argument("--count", type=int, default=10_000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    import urllib.request

    base = f"http://{args.host}:{args.port}"
    scene = generate_scene(args.count, seed=args.seed, distribution="debris")
    req = urllib.request.Request(f"{base}/api/ingest",
                                 data=serialize_ply(scene), method="POST")
    with urllib.request.urlopen(req) as resp:
        print(f"ingested: {resp.read().decode()}")

    try:
        from websockets.sync.client import connect
    except ImportError:
        print("websockets package not installed; skipping live sync check")
        return 0

    receiver = SceneReceiver()
    with connect(f"ws://{args.host}:{args.port}/ws/scene") as ws:
        ws.send(protocol.encode_frame(protocol.ProtocolFrame(
            protocol.SUBSCRIBE, 0, protocol.encode_subscribe(0))))
        while receiver.scene is None:
            frame, _ = protocol.decode_frame(ws.recv())
            receiver.feed(frame)
    print(f"synchronized: version {receiver.scene_version}, "
          f"{len(receiver.scene)} splats")
    return 0


if __name__ == "__main__":
    sys.exit(main())
