"""Gaussian splat domain types and activation functions.

Raw (storage-form) parameters follow the common 3DGS export convention:
log-scales, pre-sigmoid opacity logits, unnormalized quaternions, and
spherical-harmonic color coefficients with the DC term in channel slot 0.
Activation maps those to render-ready values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import EmptyScene, NonFiniteInput, ZeroQuaternion

# DC spherical-harmonic constant: Y_0^0 = 1 / (2 sqrt(pi))
SH_C0 = 1.0 / (2.0 * math.sqrt(math.pi))

# Default bounds inflation, in units of the largest activated scale (3 sigma).
DEFAULT_BOUNDS_INFLATION = 3.0


@dataclass
class SplatRecord:
    """One Gaussian splat in storage form.

    sh_coeffs has shape (3, (degree+1)**2): channel-major, slot 0 is the
    DC coefficient (f_dc), slots 1.. are the rest bands.
    """

    position: np.ndarray
    raw_rotation: np.ndarray
    raw_log_scale: np.ndarray
    raw_opacity: float
    sh_coeffs: np.ndarray

    @property
    def sh_degree(self) -> int:
        return int(math.isqrt(self.sh_coeffs.shape[1])) - 1


@dataclass
class ActivatedSplat:
    position: np.ndarray       # (3,)
    rotation: np.ndarray       # (4,) unit quaternion (w, x, y, z)
    scale: np.ndarray          # (3,) strictly positive
    opacity: float             # in (0, 1)
    base_color: np.ndarray     # (3,) in [0, 1], degree-0 color only


@dataclass
class SplatScene:
    """Ordered collection of splats, stored struct-of-arrays.

    All arrays are float32 and share the leading axis N. sh_coeffs has
    shape (N, 3, (sh_degree+1)**2).
    """

    positions: np.ndarray
    raw_rotations: np.ndarray
    raw_log_scales: np.ndarray
    raw_opacities: np.ndarray
    sh_coeffs: np.ndarray
    sh_degree: int = 0
    version: int = 0

    def __post_init__(self):
        n = len(self.positions)
        expect_m = (self.sh_degree + 1) ** 2
        if self.sh_coeffs.shape != (n, 3, expect_m):
            raise ValueError(
                f"sh_coeffs shape {self.sh_coeffs.shape} does not match "
                f"{n} splats at degree {self.sh_degree}"
            )

    def __len__(self) -> int:
        return len(self.positions)

    def record(self, i: int) -> SplatRecord:
        return SplatRecord(
            position=self.positions[i].copy(),
            raw_rotation=self.raw_rotations[i].copy(),
            raw_log_scale=self.raw_log_scales[i].copy(),
            raw_opacity=float(self.raw_opacities[i]),
            sh_coeffs=self.sh_coeffs[i].copy(),
        )

    def with_version(self, version: int) -> "SplatScene":
        return replace(self, version=version)

    def field_equal(self, other: "SplatScene") -> bool:
        """Exact raw-field equality, ignoring version."""
        return (
            self.sh_degree == other.sh_degree
            and len(self) == len(other)
            and np.array_equal(self.positions, other.positions)
            and np.array_equal(self.raw_rotations, other.raw_rotations)
            and np.array_equal(self.raw_log_scales, other.raw_log_scales)
            and np.array_equal(self.raw_opacities, other.raw_opacities)
            and np.array_equal(self.sh_coeffs, other.sh_coeffs)
        )


def empty_scene(sh_degree: int = 0, version: int = 0) -> SplatScene:
    m = (sh_degree + 1) ** 2
    return SplatScene(
        positions=np.zeros((0, 3), np.float32),
        raw_rotations=np.zeros((0, 4), np.float32),
        raw_log_scales=np.zeros((0, 3), np.float32),
        raw_opacities=np.zeros((0,), np.float32),
        sh_coeffs=np.zeros((0, 3, m), np.float32),
        sh_degree=sh_degree,
        version=version,
    )


def scene_from_records(records, sh_degree=None, version: int = 0) -> SplatScene:
    records = list(records)
    if not records:
        return empty_scene(0 if sh_degree is None else sh_degree, version)
    if sh_degree is None:
        sh_degree = records[0].sh_degree
    return SplatScene(
        positions=np.stack([r.position for r in records]).astype(np.float32),
        raw_rotations=np.stack([r.raw_rotation for r in records]).astype(np.float32),
        raw_log_scales=np.stack([r.raw_log_scale for r in records]).astype(np.float32),
        raw_opacities=np.array([r.raw_opacity for r in records], np.float32),
        sh_coeffs=np.stack([r.sh_coeffs for r in records]).astype(np.float32),
        sh_degree=sh_degree,
        version=version,
    )


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def activate(record: SplatRecord) -> ActivatedSplat:
    """Map storage-form parameters to render-ready values.

    sigmoid opacity, exponential scale, normalized quaternion, and
    degree-0 base color 0.5 + C0 * f_dc clamped to [0, 1].
    """
    fields = np.concatenate([
        np.asarray(record.position, np.float64).ravel(),
        np.asarray(record.raw_rotation, np.float64).ravel(),
        np.asarray(record.raw_log_scale, np.float64).ravel(),
        [float(record.raw_opacity)],
        np.asarray(record.sh_coeffs, np.float64).ravel(),
    ])
    if not np.all(np.isfinite(fields)):
        raise NonFiniteInput("splat record contains NaN or Inf")

    q = np.asarray(record.raw_rotation, np.float64)
    norm = float(np.linalg.norm(q))
    if norm < 1e-12:
        raise ZeroQuaternion(f"quaternion norm {norm} below 1e-12")

    base = 0.5 + SH_C0 * np.asarray(record.sh_coeffs, np.float64)[:, 0]
    return ActivatedSplat(
        position=np.asarray(record.position, np.float64),
        rotation=q / norm,
        scale=np.exp(np.asarray(record.raw_log_scale, np.float64)),
        opacity=float(sigmoid(float(record.raw_opacity))),
        base_color=np.clip(base, 0.0, 1.0),
    )


def activate_scene(scene: SplatScene):
    """Vectorized activation over a whole scene.

    Returns (positions (N,3), unit quaternions (N,4), scales (N,3),
    opacities (N,), base colors (N,3)), all float64.
    """
    pos = scene.positions.astype(np.float64)
    q = scene.raw_rotations.astype(np.float64)
    norms = np.linalg.norm(q, axis=1)
    if len(scene) and norms.min() < 1e-12:
        raise ZeroQuaternion("scene contains a zero-norm quaternion")
    q = q / norms[:, None] if len(scene) else q
    scales = np.exp(scene.raw_log_scales.astype(np.float64))
    opac = sigmoid(scene.raw_opacities.astype(np.float64))
    base = np.clip(0.5 + SH_C0 * scene.sh_coeffs[:, :, 0].astype(np.float64), 0.0, 1.0)
    return pos, q, scales, opac, base


def compute_bounds(scene: SplatScene, inflation: float = DEFAULT_BOUNDS_INFLATION):
    """Axis-aligned box around all splat positions.

    The tight min/max is inflated by ``inflation * max(activated scale)``
    per axis so the fuzzy Gaussian extent stays inside the box. This box
    is the manipulation proxy for WIM interaction.
    """
    if len(scene) == 0:
        raise EmptyScene("cannot bound an empty scene")
    lo = scene.positions.min(axis=0).astype(np.float64)
    hi = scene.positions.max(axis=0).astype(np.float64)
    if inflation != 0.0:
        pad = inflation * float(np.exp(scene.raw_log_scales.max()))
        lo = lo - pad
        hi = hi + pad
    return lo, hi
