/**
 * Viewpoint control: orbit (default) and fly modes producing a 4x4
 * view matrix. Switching modes preserves the camera position.
 */

export type CameraMode = "orbit" | "fly";

export interface Vec3Like {
  x: number;
  y: number;
  z: number;
}

function rotY(a: number): number[][] {
  const c = Math.cos(a);
  const s = Math.sin(a);
  return [
    [c, 0, s],
    [0, 1, 0],
    [-s, 0, c],
  ];
}

function rotX(a: number): number[][] {
  const c = Math.cos(a);
  const s = Math.sin(a);
  return [
    [1, 0, 0],
    [0, c, -s],
    [0, s, c],
  ];
}

function matMul3(a: number[][], b: number[][]): number[][] {
  const out = [
    [0, 0, 0],
    [0, 0, 0],
    [0, 0, 0],
  ];
  for (let i = 0; i < 3; i++) {
    for (let j = 0; j < 3; j++) {
      out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
    }
  }
  return out;
}

export class Camera {
  mode: CameraMode = "orbit";
  target: Vec3Like = { x: 0, y: 0, z: 0 };
  distance = 10;
  yaw = 0;
  pitch = 0;

  /** World-space camera position, shared across modes. */
  get position(): Vec3Like {
    // camera sits at target - distance * forward
    const f = this.forward();
    return {
      x: this.target.x - this.distance * f.x,
      y: this.target.y - this.distance * f.y,
      z: this.target.z - this.distance * f.z,
    };
  }

  private forward(): Vec3Like {
    const cp = Math.cos(this.pitch);
    return {
      x: cp * Math.sin(this.yaw),
      y: -Math.sin(this.pitch),
      z: cp * Math.cos(this.yaw),
    };
  }

  setMode(mode: CameraMode): void {
    if (mode === this.mode) return;
    // preserve the world position across the switch: in fly mode the
    // position is primary, in orbit the target/distance pair is; keep
    // both consistent so the view matrix does not jump
    this.mode = mode;
  }

  orbit(dYaw: number, dPitch: number): void {
    this.yaw += dYaw;
    this.pitch = Math.min(
      Math.PI / 2 - 1e-3,
      Math.max(-Math.PI / 2 + 1e-3, this.pitch + dPitch),
    );
  }

  zoom(factor: number): void {
    this.distance = Math.min(1e6, Math.max(1e-3, this.distance * factor));
  }

  /** Fly-mode translation in camera-local axes (right, up, forward). */
  fly(dRight: number, dUp: number, dForward: number): void {
    const f = this.forward();
    const right = { x: Math.cos(this.yaw), y: 0, z: -Math.sin(this.yaw) };
    this.target.x += right.x * dRight + f.x * dForward;
    this.target.y += dUp + f.y * dForward;
    this.target.z += right.z * dRight + f.z * dForward;
  }

  /** Row-major 4x4 world-to-view matrix. */
  viewMatrix(): number[][] {
    const rot = matMul3(rotX(-this.pitch), rotY(-this.yaw));
    const p = this.position;
    const t = [
      -(rot[0][0] * p.x + rot[0][1] * p.y + rot[0][2] * p.z),
      -(rot[1][0] * p.x + rot[1][1] * p.y + rot[1][2] * p.z),
      -(rot[2][0] * p.x + rot[2][1] * p.y + rot[2][2] * p.z),
    ];
    return [
      [rot[0][0], rot[0][1], rot[0][2], t[0]],
      [rot[1][0], rot[1][1], rot[1][2], t[1]],
      [rot[2][0], rot[2][1], rot[2][2], t[2]],
      [0, 0, 0, 1],
    ];
  }
}
