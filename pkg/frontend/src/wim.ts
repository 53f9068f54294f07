/**
 * World-in-miniature manipulation math, a direct port of the server-side
 * grip contract: scale = inter-pointer distance ratio, rotation = minimal
 * rotation between inter-pointer directions, pivot = previous midpoint.
 * Quaternions are [w, x, y, z].
 */

export const GRIP_EPSILON = 1e-4;
export const SCALE_MIN = 0.01;
export const SCALE_MAX = 100.0;

export type Vec3 = [number, number, number];
export type Quat = [number, number, number, number];

export class DegenerateGrip extends Error {}

export function quatNormalize(q: Quat): Quat {
  const n = Math.hypot(q[0], q[1], q[2], q[3]);
  return [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
}

export function quatMultiply(a: Quat, b: Quat): Quat {
  const [aw, ax, ay, az] = a;
  const [bw, bx, by, bz] = b;
  return [
    aw * bw - ax * bx - ay * by - az * bz,
    aw * bx + ax * bw + ay * bz - az * by,
    aw * by - ax * bz + ay * bw + az * bx,
    aw * bz + ax * by - ay * bx + az * bw,
  ];
}

function cross(a: Vec3, b: Vec3): Vec3 {
  return [
    a[1] * b[2] - a[2] * b[1],
    a[2] * b[0] - a[0] * b[2],
    a[0] * b[1] - a[1] * b[0],
  ];
}

function dot(a: Vec3, b: Vec3): number {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

export function quatRotate(q: Quat, v: Vec3): Vec3 {
  // v + 2 u x (u x v + w v) for unit q = (w, u)
  const u: Vec3 = [q[1], q[2], q[3]];
  const w = q[0];
  const inner: Vec3 = [
    u[1] * v[2] - u[2] * v[1] + w * v[0],
    u[2] * v[0] - u[0] * v[2] + w * v[1],
    u[0] * v[1] - u[1] * v[0] + w * v[2],
  ];
  const outer = cross(u, inner);
  return [v[0] + 2 * outer[0], v[1] + 2 * outer[1], v[2] + 2 * outer[2]];
}

export function quatFromAxisAngle(axis: Vec3, angle: number): Quat {
  const n = Math.hypot(axis[0], axis[1], axis[2]);
  const half = 0.5 * angle;
  const s = Math.sin(half) / n;
  return [Math.cos(half), axis[0] * s, axis[1] * s, axis[2] * s];
}

export function quatToMatrix(q: Quat): number[][] {
  const [w, x, y, z] = quatNormalize(q);
  return [
    [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
    [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
    [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
  ];
}

function minimalRotation(u: Vec3, v: Vec3): Quat {
  const d = dot(u, v);
  if (d < -1.0 + 1e-12) {
    // antiparallel: pi about the smallest-index basis vector
    // orthogonalized against u
    for (let i = 0; i < 3; i++) {
      const e: Vec3 = [0, 0, 0];
      e[i] = 1;
      if (Math.abs(dot(e, u)) < 1.0 - 1e-9) {
        const proj = dot(e, u);
        const axis: Vec3 = [
          e[0] - proj * u[0],
          e[1] - proj * u[1],
          e[2] - proj * u[2],
        ];
        return quatFromAxisAngle(axis, Math.PI);
      }
    }
  }
  const c = cross(u, v);
  return quatNormalize([1.0 + d, c[0], c[1], c[2]]);
}

export interface WimTransform {
  translation: Vec3;
  rotation: Quat;
  scale: number;
  scaleMin: number;
  scaleMax: number;
}

export function identityTransform(
  scaleMin = SCALE_MIN,
  scaleMax = SCALE_MAX,
): WimTransform {
  return {
    translation: [0, 0, 0],
    rotation: [1, 0, 0, 0],
    scale: 1.0,
    scaleMin,
    scaleMax,
  };
}

export function applyPoint(t: WimTransform, p: Vec3): Vec3 {
  const scaled: Vec3 = [p[0] * t.scale, p[1] * t.scale, p[2] * t.scale];
  const rotated = quatRotate(t.rotation, scaled);
  return [
    rotated[0] + t.translation[0],
    rotated[1] + t.translation[1],
    rotated[2] + t.translation[2],
  ];
}

/** Row-major 4x4, T(translation) . R(rotation) . S(scale). */
export function toMatrix(t: WimTransform): number[][] {
  const r = quatToMatrix(t.rotation);
  return [
    [r[0][0] * t.scale, r[0][1] * t.scale, r[0][2] * t.scale, t.translation[0]],
    [r[1][0] * t.scale, r[1][1] * t.scale, r[1][2] * t.scale, t.translation[1]],
    [r[2][0] * t.scale, r[2][1] * t.scale, r[2][2] * t.scale, t.translation[2]],
    [0, 0, 0, 1],
  ];
}

export interface GripPair {
  leftPrev: Vec3;
  rightPrev: Vec3;
  leftCurr: Vec3;
  rightCurr: Vec3;
}

export interface TransformDelta {
  scale: number;
  rotation: Quat;
  translation: Vec3;
  pivot: Vec3;
}

export function deltaApplyPoint(d: TransformDelta, x: Vec3): Vec3 {
  const local: Vec3 = [
    d.scale * (x[0] - d.pivot[0]),
    d.scale * (x[1] - d.pivot[1]),
    d.scale * (x[2] - d.pivot[2]),
  ];
  const rotated = quatRotate(d.rotation, local);
  return [
    rotated[0] + d.pivot[0] + d.translation[0],
    rotated[1] + d.pivot[1] + d.translation[1],
    rotated[2] + d.pivot[2] + d.translation[2],
  ];
}

export function solveGrip(
  grip: GripPair,
  gripEpsilon = GRIP_EPSILON,
): TransformDelta {
  const { leftPrev: lp, rightPrev: rp, leftCurr: lc, rightCurr: rc } = grip;
  const prevVec: Vec3 = [rp[0] - lp[0], rp[1] - lp[1], rp[2] - lp[2]];
  const currVec: Vec3 = [rc[0] - lc[0], rc[1] - lc[1], rc[2] - lc[2]];
  const prevLen = Math.hypot(...prevVec);
  if (prevLen <= gripEpsilon) {
    throw new DegenerateGrip(`previous pointers coincident (${prevLen})`);
  }
  const currLen = Math.hypot(...currVec);
  const scale = currLen / prevLen;
  let rotation: Quat = [1, 0, 0, 0];
  if (currLen > gripEpsilon) {
    rotation = minimalRotation(
      [prevVec[0] / prevLen, prevVec[1] / prevLen, prevVec[2] / prevLen],
      [currVec[0] / currLen, currVec[1] / currLen, currVec[2] / currLen],
    );
  }
  const pivot: Vec3 = [
    0.5 * (lp[0] + rp[0]),
    0.5 * (lp[1] + rp[1]),
    0.5 * (lp[2] + rp[2]),
  ];
  const translation: Vec3 = [
    0.5 * (lc[0] + rc[0]) - pivot[0],
    0.5 * (lc[1] + rc[1]) - pivot[1],
    0.5 * (lc[2] + rc[2]) - pivot[2],
  ];
  return { scale, rotation, translation, pivot };
}

/**
 * Compose delta after state, clamping scale to the state's limits;
 * clamping rescales about the pivot so the pivot's world image is the
 * same whether or not the clamp engaged.
 */
export function applyDelta(
  state: WimTransform,
  delta: TransformDelta,
): WimTransform {
  const rawScale = delta.scale * state.scale;
  const clamped = Math.min(Math.max(rawScale, state.scaleMin), state.scaleMax);
  const effDeltaScale = state.scale !== 0 ? clamped / state.scale : delta.scale;

  const rotation = quatNormalize(quatMultiply(delta.rotation, state.rotation));
  const offset: Vec3 = [
    effDeltaScale * (state.translation[0] - delta.pivot[0]),
    effDeltaScale * (state.translation[1] - delta.pivot[1]),
    effDeltaScale * (state.translation[2] - delta.pivot[2]),
  ];
  const rotated = quatRotate(delta.rotation, offset);
  const translation: Vec3 = [
    rotated[0] + delta.pivot[0] + delta.translation[0],
    rotated[1] + delta.pivot[1] + delta.translation[1],
    rotated[2] + delta.pivot[2] + delta.translation[2],
  ];
  return {
    translation,
    rotation,
    scale: clamped,
    scaleMin: state.scaleMin,
    scaleMax: state.scaleMax,
  };
}

export function reset(
  state: WimTransform,
  home: WimTransform | null = null,
): WimTransform {
  if (home !== null) {
    return {
      translation: [...home.translation],
      rotation: quatNormalize(home.rotation),
      scale: home.scale,
      scaleMin: state.scaleMin,
      scaleMax: state.scaleMax,
    };
  }
  return identityTransform(state.scaleMin, state.scaleMax);
}
