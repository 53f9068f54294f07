"""Operator command line: inspect, gen, render, serve, bench, replay.

Exit codes: 0 success, 1 operational failure (the typed error name is
printed), 2 usage error (argparse).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import bench as benchmod
from . import protocol
from .client import SceneReceiver
from .errors import SplatStreamError
from .plyio import parse_ply_with_header, serialize_ply
from .pois import LayerState, PoiSet
from .render import default_camera, render
from .splats import compute_bounds
from .wim import WimTransform, quat_from_axis_angle


def _fail(exc: Exception) -> int:
    print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    return 1


def _parse_vec3(text: str) -> np.ndarray:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected x,y,z")
    return np.array(parts)


# --- subcommands ---

def cmd_inspect(args) -> int:
    with open(args.file, "rb") as f:
        data = f.read()
    scene, header, ignored = parse_ply_with_header(data)
    if len(scene):
        lo, hi = compute_bounds(scene, inflation=0.0)
        bounds = {"min": list(lo), "max": list(hi)}
    else:
        bounds = None
    info = {
        "splat_count": len(scene),
        "sh_degree": scene.sh_degree,
        "format": header.format,
        "properties": [n for n, _ in header.properties],
        "ignored_properties": ignored,
        "bounds": bounds,
    }
    if args.json:
        print(json.dumps(info, indent=2))
    else:
        print(f"{len(scene)} splat{'s' if len(scene) != 1 else ''}, "
              f"degree {scene.sh_degree}")
        print(f"format: {header.format}")
        if bounds:
            print(f"bounds: {bounds['min']} .. {bounds['max']}")
        print(f"properties: {', '.join(info['properties'])}")
        if ignored:
            print(f"ignored: {', '.join(ignored)}")
    return 0


def cmd_gen(args) -> int:
    scene = benchmod.generate_scene(args.count, seed=args.seed,
                                    distribution=args.distribution,
                                    sh_degree=args.sh_degree,
                                    extent=args.extent)
    data = serialize_ply(scene)
    with open(args.out, "wb") as f:
        f.write(data)
    if args.json:
        print(json.dumps({"out": args.out, "splat_count": len(scene),
                          "seed": args.seed, "bytes": len(data)}))
    else:
        print(f"wrote {len(scene)} splats ({len(data)} bytes) to {args.out}")
    return 0


def _camera_for(args, scene):
    if args.camera_z is not None:
        tz = args.camera_z
        center = np.zeros(3)
    elif len(scene):
        lo, hi = compute_bounds(scene, inflation=0.0)
        center = 0.5 * (lo + hi)
        tz = 2.0 * max(float(np.max(hi - lo)), 1.0)
    else:
        center = np.zeros(3)
        tz = 10.0
    view = np.eye(4)
    view[:3, 3] = np.array([-center[0], -center[1], tz - center[2]])
    return default_camera(width=args.width, height=args.height, fx=args.fx,
                          view=view, near=args.near, far=args.far)


def cmd_render(args) -> int:
    with open(args.file, "rb") as f:
        scene, _, _ = parse_ply_with_header(f.read())
    cam = _camera_for(args, scene)

    wim = None
    if args.wim_scale != 1.0 or args.wim_translate is not None \
            or args.wim_yaw != 0.0:
        rotation = quat_from_axis_angle([0, 1, 0], np.radians(args.wim_yaw))
        wim = WimTransform(
            translation=(args.wim_translate if args.wim_translate is not None
                         else np.zeros(3)),
            rotation=rotation,
            scale=args.wim_scale,
        )

    pois = None
    layers = None
    if args.pois:
        with open(args.pois) as f:
            pois = PoiSet.from_docs(json.load(f)).pois
        if args.layers is not None:
            names = [s for s in args.layers.split(",") if s]
            layers = LayerState(frozenset(names))

    img = render(scene, cam, wim=wim, pois=pois, layers=layers,
                 parallel=args.parallel)
    with open(args.out, "wb") as f:
        f.write(img.to_ppm())
    print(f"wrote {cam.width}x{cam.height} image to {args.out}")
    return 0


def cmd_serve(args) -> int:
    from .server import load_config, run_server

    overrides = {
        "host": args.host,
        "port": args.port,
        "ingest_dir": args.ingest_dir,
        "chunk_size": args.chunk_size,
        "record_log": args.record,
        "poll_interval_ms": args.poll_interval_ms,
    }
    config = load_config(args.config, overrides=overrides)
    print(f"serving on {config.host}:{config.port}"
          + (f", watching {config.ingest_dir}" if config.ingest_dir else ""))
    run_server(config)
    return 0


def cmd_bench(args) -> int:
    if args.json and args.seed is None:
        print("error: --json requires an explicit --seed for reproducible "
              "artifacts", file=sys.stderr)
        return 2
    seed = args.seed if args.seed is not None else 0
    scene = benchmod.generate_scene(args.count, seed=seed,
                                    distribution=args.distribution)
    cam = default_camera(width=args.width, height=args.height)
    report = benchmod.run_pipeline_bench(
        scene, cam, runs=args.runs,
        fps_targets=tuple(args.targets),
        parallel_render=args.parallel)
    print(report.to_json() if args.json else report.to_table())
    return 0


def cmd_replay(args) -> int:
    with open(args.log, "rb") as f:
        data = f.read()
    receiver = SceneReceiver()
    offset = 0
    ordinal = 0
    while offset < len(data):
        try:
            frame, offset = protocol.decode_frame(data, offset)
        except SplatStreamError as exc:
            print(f"error: {type(exc).__name__} at frame {ordinal}: {exc}",
                  file=sys.stderr)
            return 1
        receiver.feed(frame)
        ordinal += 1
    if ordinal == 0:
        print("error: no frames in log", file=sys.stderr)
        return 1
    if receiver.scene is None:
        print("error: log contains no complete scene", file=sys.stderr)
        return 1

    reconstructed = serialize_ply(receiver.scene)
    if args.out:
        with open(args.out, "wb") as f:
            f.write(reconstructed)
    if args.verify:
        with open(args.verify, "rb") as f:
            reference = f.read()
        if reconstructed == reference:
            print(f"OK: {ordinal} frames, scene version "
                  f"{receiver.scene_version}, {len(receiver.scene)} splats, "
                  f"byte-identical to {args.verify}")
            return 0
        print(f"error: reconstructed scene differs from {args.verify}",
              file=sys.stderr)
        return 1
    print(f"replayed {ordinal} frames: scene version {receiver.scene_version}, "
          f"{len(receiver.scene)} splats, {len(receiver.pois.pois)} pois")
    return 0


# --- parser ---

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="splatstream",
        description="Gaussian-splat scene streaming and benchmarking toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("inspect", help="summarize a splat PLY file")
    p.add_argument("file")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("gen", help="generate a synthetic splat scene")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--distribution", choices=("uniform", "debris"),
                   default="uniform")
    p.add_argument("--sh-degree", type=int, default=0, choices=(0, 1, 2, 3))
    p.add_argument("--extent", type=float, default=50.0)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("render", help="render a scene to a P6 pixmap")
    p.add_argument("file")
    p.add_argument("--out", required=True)
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--height", type=int, default=256)
    p.add_argument("--fx", type=float, default=256.0)
    p.add_argument("--near", type=float, default=0.1)
    p.add_argument("--far", type=float, default=1000.0)
    p.add_argument("--camera-z", type=float, default=None,
                   help="camera distance (default: auto-frame the bounds)")
    p.add_argument("--wim-scale", type=float, default=1.0)
    p.add_argument("--wim-translate", type=_parse_vec3, default=None)
    p.add_argument("--wim-yaw", type=float, default=0.0,
                   help="degrees about +y")
    p.add_argument("--pois", help="POI JSON document file")
    p.add_argument("--layers", default=None,
                   help="comma-separated enabled classes ('' hides all)")
    p.add_argument("--parallel", action="store_true")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("serve", help="run the scene streaming server")
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--ingest-dir", default=None)
    p.add_argument("--chunk-size", type=int, default=None)
    p.add_argument("--poll-interval-ms", type=int, default=None)
    p.add_argument("--record", default=None, help="append broadcast frames "
                   "to this replay log")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("bench", help="run the frame-budget benchmark")
    p.add_argument("--count", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--runs", type=int, default=3)
    p.add_argument("--distribution", choices=("uniform", "debris"),
                   default="debris")
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--height", type=int, default=256)
    p.add_argument("--targets", type=int, nargs="+", default=[72, 30])
    p.add_argument("--parallel", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("replay", help="replay a recorded frame log")
    p.add_argument("log")
    p.add_argument("--verify", default=None,
                   help="PLY file the reconstructed scene must match byte-"
                        "for-byte")
    p.add_argument("--out", default=None, help="write reconstructed PLY here")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_replay)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SplatStreamError as exc:
        return _fail(exc)
    except OSError as exc:
        return _fail(exc)


if __name__ == "__main__":
    sys.exit(main())
