"""World-in-Miniature manipulation math.

Two-pointer grips drive a translate / rotate / uniform-scale transform on
the miniature map: the scale factor is the ratio of inter-hand distances,
the rotation is the minimal rotation between the inter-hand directions,
and the grip midpoint is carried along. Quaternions are (w, x, y, z).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGrip

GRIP_EPSILON = 1e-4
SCALE_MIN = 0.01
SCALE_MAX = 100.0


# --- quaternion helpers ---

def quat_normalize(q):
    q = np.asarray(q, np.float64)
    return q / np.linalg.norm(q)


def quat_multiply(a, b):
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_rotate(q, v):
    """Rotate 3-vector(s) v by unit quaternion q."""
    w, x, y, z = q
    u = np.array([x, y, z])
    v = np.asarray(v, np.float64)
    return v + 2.0 * np.cross(u, np.cross(u, v) + w * v)


def quat_from_axis_angle(axis, angle):
    axis = np.asarray(axis, np.float64)
    axis = axis / np.linalg.norm(axis)
    half = 0.5 * angle
    return np.concatenate([[np.cos(half)], np.sin(half) * axis])


def quat_to_matrix(q):
    w, x, y, z = quat_normalize(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def _minimal_rotation(u, v):
    """Unit quaternion rotating unit vector u onto unit vector v by the
    shortest arc. Antiparallel inputs rotate pi about a deterministic
    axis orthogonal to u (smallest-index basis vector, orthogonalized)."""
    d = float(np.dot(u, v))
    if d < -1.0 + 1e-12:
        for i in range(3):
            e = np.zeros(3)
            e[i] = 1.0
            if abs(np.dot(e, u)) < 1.0 - 1e-9:
                axis = e - np.dot(e, u) * u
                return quat_from_axis_angle(axis, np.pi)
    c = np.cross(u, v)
    q = np.array([1.0 + d, c[0], c[1], c[2]])
    return quat_normalize(q)


# --- transform types ---

@dataclass
class WimTransform:
    """Pose of the miniature map: p -> rotation * (scale * p) + translation."""

    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rotation: np.ndarray = field(default_factory=lambda: np.array([1.0, 0, 0, 0]))
    scale: float = 1.0
    scale_min: float = SCALE_MIN
    scale_max: float = SCALE_MAX

    def apply_point(self, p):
        return quat_rotate(self.rotation, np.asarray(p, np.float64) * self.scale) \
            + self.translation

    def to_matrix(self) -> np.ndarray:
        """Row-major 4x4, T(translation) . R(rotation) . S(scale)."""
        m = np.eye(4)
        m[:3, :3] = quat_to_matrix(self.rotation) * self.scale
        m[:3, 3] = self.translation
        return m


@dataclass
class GripPair:
    left_prev: np.ndarray
    right_prev: np.ndarray
    left_curr: np.ndarray
    right_curr: np.ndarray


@dataclass
class TransformDelta:
    """User-space delta about a pivot:
    x -> rotation * (scale * (x - pivot)) + pivot + translation."""

    scale: float
    rotation: np.ndarray
    translation: np.ndarray
    pivot: np.ndarray

    def apply_point(self, x):
        x = np.asarray(x, np.float64)
        return quat_rotate(self.rotation, self.scale * (x - self.pivot)) \
            + self.pivot + self.translation


def identity_delta(pivot=(0.0, 0.0, 0.0)) -> TransformDelta:
    return TransformDelta(1.0, np.array([1.0, 0, 0, 0]), np.zeros(3),
                          np.asarray(pivot, np.float64))


def solve_grip(grip: GripPair, grip_epsilon: float = GRIP_EPSILON) -> TransformDelta:
    """Solve the two-pointer grip into a transform delta.

    Applying the delta to the previous hand positions reproduces the
    current midpoint and inter-hand vector exactly.
    """
    lp = np.asarray(grip.left_prev, np.float64)
    rp = np.asarray(grip.right_prev, np.float64)
    lc = np.asarray(grip.left_curr, np.float64)
    rc = np.asarray(grip.right_curr, np.float64)

    prev_vec = rp - lp
    curr_vec = rc - lc
    prev_len = float(np.linalg.norm(prev_vec))
    if prev_len <= grip_epsilon:
        raise DegenerateGrip(f"previous hands coincident (separation {prev_len})")
    curr_len = float(np.linalg.norm(curr_vec))

    scale = curr_len / prev_len
    if curr_len <= grip_epsilon:
        rotation = np.array([1.0, 0, 0, 0])
    else:
        rotation = _minimal_rotation(prev_vec / prev_len, curr_vec / curr_len)

    pivot = 0.5 * (lp + rp)
    translation = 0.5 * (lc + rc) - pivot
    return TransformDelta(scale, rotation, translation, pivot)


def single_hand_delta(prev: np.ndarray, curr: np.ndarray) -> TransformDelta:
    """One-pointer drag: pure translation, solved through the same grip
    path with a stationary synthetic anchor offset from the hand."""
    prev = np.asarray(prev, np.float64)
    curr = np.asarray(curr, np.float64)
    anchor = prev + np.array([1.0, 0.0, 0.0])
    grip = GripPair(prev, anchor, curr, anchor + (curr - prev))
    return solve_grip(grip)


def apply_delta(state: WimTransform, delta: TransformDelta) -> WimTransform:
    """Compose delta after state, clamping scale to the state's limits.

    Clamping rescales about the pivot, so the pivot's world image is the
    same whether or not the clamp engaged.
    """
    raw_scale = delta.scale * state.scale
    clamped = min(max(raw_scale, state.scale_min), state.scale_max)
    eff_delta_scale = clamped / state.scale if state.scale != 0 else delta.scale

    rotation = quat_normalize(quat_multiply(delta.rotation, state.rotation))
    translation = (
        quat_rotate(delta.rotation, eff_delta_scale * (state.translation - delta.pivot))
        + delta.pivot + delta.translation
    )
    return WimTransform(
        translation=translation,
        rotation=rotation,
        scale=clamped,
        scale_min=state.scale_min,
        scale_max=state.scale_max,
    )


def reset(state: WimTransform, home: WimTransform | None = None) -> WimTransform:
    """Restore the map pose to its default (or a configured home pose)."""
    if home is not None:
        return WimTransform(
            translation=np.asarray(home.translation, np.float64).copy(),
            rotation=quat_normalize(home.rotation),
            scale=home.scale,
            scale_min=state.scale_min,
            scale_max=state.scale_max,
        )
    return WimTransform(scale_min=state.scale_min, scale_max=state.scale_max)
