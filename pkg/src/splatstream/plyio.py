"""PLY parsing and serialization for Gaussian-splat scenes.

Recognized layout is the de-facto 3DGS export: x,y,z positions, f_dc_*
and optional f_rest_* spherical-harmonic coefficients (channel-major),
opacity logit, log-scales scale_0..2 and quaternion rot_0..3, all 32-bit
floats. Unknown properties (normals etc.) are skipped with a warning.
"""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadMagic,
    HeaderTooLarge,
    MissingProperty,
    PlyError,
    TruncatedBody,
    UnsupportedFormat,
)
from .splats import SplatScene

log = logging.getLogger(__name__)

# Guard against malformed headers promising absurd vertex counts.
DEFAULT_MAX_VERTICES = 16_000_000

_SCALAR_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}

REQUIRED_PROPERTIES = (
    "x", "y", "z",
    "f_dc_0", "f_dc_1", "f_dc_2",
    "opacity",
    "scale_0", "scale_1", "scale_2",
    "rot_0", "rot_1", "rot_2", "rot_3",
)

# rest-coefficient counts for sh degrees 0..3
_REST_COUNTS = {0: 0, 1: 9, 2: 24, 3: 45}


@dataclass
class PlyHeader:
    format: str                      # "binary_little_endian" | "ascii"
    vertex_count: int
    properties: list                 # [(name, numpy dtype string)]


def _parse_header(data: bytes):
    if not data.startswith(b"ply"):
        raise BadMagic("input does not start with 'ply'")
    end = data.find(b"end_header\n")
    if end < 0:
        raise TruncatedBody("header has no end_header line")
    body_start = end + len(b"end_header\n")
    lines = data[:end].decode("ascii", errors="replace").splitlines()

    fmt = None
    vertex_count = None
    props = []
    in_vertex = False
    try:
        for line in lines[1:]:
            parts = line.split()
            if not parts or parts[0] == "comment":
                continue
            if parts[0] == "format":
                fmt = parts[1]
            elif parts[0] == "element":
                if parts[1] == "vertex":
                    vertex_count = int(parts[2])
                    in_vertex = True
                else:
                    if int(parts[2]) > 0:
                        raise UnsupportedFormat(f"unsupported element '{parts[1]}'")
                    in_vertex = False
            elif parts[0] == "property" and in_vertex:
                if parts[1] == "list":
                    raise UnsupportedFormat("list properties are not supported")
                if parts[1] not in _SCALAR_TYPES:
                    raise UnsupportedFormat(f"unknown scalar type '{parts[1]}'")
                props.append((parts[2], _SCALAR_TYPES[parts[1]]))
    except (ValueError, IndexError) as exc:
        raise UnsupportedFormat(f"malformed header line: {exc}") from exc

    if vertex_count is not None and vertex_count < 0:
        raise UnsupportedFormat("negative vertex count")
    if fmt is None or vertex_count is None:
        raise UnsupportedFormat("header missing format or vertex element")
    if fmt == "binary_big_endian":
        raise UnsupportedFormat("big-endian PLY is not supported")
    if fmt not in ("binary_little_endian", "ascii"):
        raise UnsupportedFormat(f"unknown format '{fmt}'")
    names = [n for n, _ in props]
    if len(set(names)) != len(names):
        raise UnsupportedFormat("duplicate property names")
    return PlyHeader(fmt, vertex_count, props), body_start


def _read_columns(data: bytes, header: PlyHeader, body_start: int) -> np.ndarray:
    """Body as a (vertex_count, n_props) float32 array in property order."""
    n = header.vertex_count
    if header.format == "ascii":
        text = data[body_start:].decode("ascii", errors="replace")
        values = text.split()
        need = n * len(header.properties)
        if len(values) < need:
            raise TruncatedBody(f"expected {need} ascii values, got {len(values)}")
        try:
            arr = np.array(values[:need], np.float32)
        except ValueError as exc:
            raise PlyError(f"non-numeric ascii body value: {exc}") from exc
        return arr.reshape(n, len(header.properties))
    dtype = np.dtype([(name, "<" + t) for name, t in header.properties])
    body = data[body_start:]
    if len(body) < n * dtype.itemsize:
        raise TruncatedBody(
            f"body holds {len(body)} bytes, header promises {n * dtype.itemsize}"
        )
    recs = np.frombuffer(body, dtype=dtype, count=n)
    out = np.empty((n, len(header.properties)), np.float32)
    for j, (name, _) in enumerate(header.properties):
        out[:, j] = recs[name]
    return out


def parse_ply_with_header(data: bytes, max_vertices: int = DEFAULT_MAX_VERTICES):
    """Parse a splat PLY file.

    Returns (scene, header, ignored_property_names). Scene version is 0.
    """
    header, body_start = _parse_header(bytes(data))
    if header.vertex_count > max_vertices:
        raise HeaderTooLarge(
            f"{header.vertex_count} vertices exceeds ceiling {max_vertices}"
        )

    names = [n for n, _ in header.properties]
    col = {n: i for i, n in enumerate(names)}
    for req in REQUIRED_PROPERTIES:
        if req not in col:
            raise MissingProperty(f"required property '{req}' absent")

    rest_names = []
    i = 0
    while f"f_rest_{i}" in col:
        rest_names.append(f"f_rest_{i}")
        i += 1
    degree = None
    for d, cnt in _REST_COUNTS.items():
        if cnt == len(rest_names):
            degree = d
    if degree is None:
        raise MissingProperty(
            f"f_rest count {len(rest_names)} matches no sh degree in 0..3"
        )

    known = set(REQUIRED_PROPERTIES) | set(rest_names)
    ignored = [n for n in names if n not in known]
    if ignored:
        log.warning("ignoring %d unknown PLY properties: %s", len(ignored), ignored)

    cols = _read_columns(bytes(data), header, body_start)
    n = header.vertex_count
    m = (degree + 1) ** 2

    sh = np.zeros((n, 3, m), np.float32)
    for ch in range(3):
        sh[:, ch, 0] = cols[:, col[f"f_dc_{ch}"]]
    if rest_names:
        per_ch = m - 1
        rest = cols[:, [col[r] for r in rest_names]]
        for ch in range(3):
            sh[:, ch, 1:] = rest[:, ch * per_ch:(ch + 1) * per_ch]

    scene = SplatScene(
        positions=cols[:, [col["x"], col["y"], col["z"]]].copy(),
        raw_rotations=cols[:, [col[f"rot_{k}"] for k in range(4)]].copy(),
        raw_log_scales=cols[:, [col[f"scale_{k}"] for k in range(3)]].copy(),
        raw_opacities=cols[:, col["opacity"]].copy(),
        sh_coeffs=sh,
        sh_degree=degree,
        version=0,
    )
    return scene, header, ignored


def parse_ply(data: bytes, max_vertices: int = DEFAULT_MAX_VERTICES) -> SplatScene:
    scene, _, _ = parse_ply_with_header(data, max_vertices)
    return scene


def property_names(sh_degree: int):
    rest = _REST_COUNTS[sh_degree]
    return (
        ["x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2"]
        + [f"f_rest_{i}" for i in range(rest)]
        + ["opacity", "scale_0", "scale_1", "scale_2",
           "rot_0", "rot_1", "rot_2", "rot_3"]
    )


def serialize_ply(scene: SplatScene) -> bytes:
    """Emit binary little-endian 1.0 in the canonical property order."""
    names = property_names(scene.sh_degree)
    header = io.BytesIO()
    header.write(b"ply\nformat binary_little_endian 1.0\n")
    header.write(f"element vertex {len(scene)}\n".encode())
    for name in names:
        header.write(f"property float {name}\n".encode())
    header.write(b"end_header\n")

    n = len(scene)
    m = (scene.sh_degree + 1) ** 2
    cols = np.empty((n, len(names)), np.float32)
    cols[:, 0:3] = scene.positions
    cols[:, 3:6] = scene.sh_coeffs[:, :, 0]
    off = 6
    if m > 1:
        per_ch = m - 1
        for ch in range(3):
            cols[:, off + ch * per_ch: off + (ch + 1) * per_ch] = scene.sh_coeffs[:, ch, 1:]
        off += 3 * per_ch
    cols[:, off] = scene.raw_opacities
    cols[:, off + 1: off + 4] = scene.raw_log_scales
    cols[:, off + 4: off + 8] = scene.raw_rotations
    return header.getvalue() + cols.astype("<f4").tobytes()
