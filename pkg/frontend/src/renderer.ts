/**
 * Canvas point-sprite renderer: splats drawn front to back in the
 * depth-sorted order, POI markers overlaid with class colors subject to
 * the layer state. Exposes the draw order used for the last frame so it
 * can be compared against the server's debug sort export.
 */

import { Camera } from "./camera.js";
import { sceneDrawOrder } from "./depthsort.js";
import { filterPois, LayerState, markerColor } from "./pois.js";
import { PoiDoc } from "./protocol.js";
import { baseColor, opacityLogit, position, Scene } from "./scene.js";
import { applyPoint, WimTransform } from "./wim.js";

export interface RendererConfig {
  near: number;
  far: number;
  keyBits: 16 | 32;
  focalPx: number;
  pointScale: number;
  markerRadiusPx: number;
}

export const DEFAULT_RENDERER_CONFIG: RendererConfig = {
  near: 0.1,
  far: 1000.0,
  keyBits: 16,
  focalPx: 600,
  pointScale: 2.0,
  markerRadiusPx: 6,
};

export interface Ctx2D {
  canvas: { width: number; height: number };
  fillStyle: string | unknown;
  globalAlpha: number;
  fillRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fill(): void;
  stroke(): void;
  strokeStyle: string | unknown;
  lineWidth: number;
}

function sigmoid(x: number): number {
  return 1 / (1 + Math.exp(-x));
}

function cssColor(rgb: [number, number, number]): string {
  const c = (v: number) => Math.round(255 * Math.min(1, Math.max(0, v)));
  return `rgb(${c(rgb[0])},${c(rgb[1])},${c(rgb[2])})`;
}

export class SplatRenderer {
  lastDrawOrder: Uint32Array = new Uint32Array(0);

  constructor(readonly config: RendererConfig = DEFAULT_RENDERER_CONFIG) {}

  /** Front-to-back order for the scene under the camera and WIM state. */
  drawOrder(
    scene: Scene,
    camera: Camera,
    wim: WimTransform | null = null,
  ): Uint32Array {
    return sceneDrawOrder(
      scene,
      camera.viewMatrix(),
      this.config.near,
      this.config.far,
      this.config.keyBits,
      wim,
    );
  }

  render(
    ctx: Ctx2D,
    scene: Scene | null,
    camera: Camera,
    pois: PoiDoc[],
    layers: LayerState,
    wim: WimTransform | null = null,
  ): void {
    const w = ctx.canvas.width;
    const h = ctx.canvas.height;
    ctx.globalAlpha = 1;
    ctx.fillStyle = "#101418";
    ctx.fillRect(0, 0, w, h);
    const view = camera.viewMatrix();
    if (scene) {
      const order = this.drawOrder(scene, camera, wim);
      this.lastDrawOrder = order;
      for (let k = 0; k < order.length; k++) {
        const i = order[k];
        let p = position(scene, i);
        if (wim) p = applyPoint(wim, p);
        const vx = view[0][0] * p[0] + view[0][1] * p[1] + view[0][2] * p[2] + view[0][3];
        const vy = view[1][0] * p[0] + view[1][1] * p[1] + view[1][2] * p[2] + view[1][3];
        const vz = view[2][0] * p[0] + view[2][1] * p[1] + view[2][2] * p[2] + view[2][3];
        if (vz <= this.config.near) continue;
        const sx = w / 2 + (this.config.focalPx * vx) / vz;
        const sy = h / 2 - (this.config.focalPx * vy) / vz;
        if (sx < -8 || sx > w + 8 || sy < -8 || sy > h + 8) continue;
        const r = Math.max(1, this.config.pointScale * (this.config.focalPx / vz) * 0.05);
        ctx.globalAlpha = sigmoid(opacityLogit(scene, i));
        ctx.fillStyle = cssColor(baseColor(scene, i));
        ctx.beginPath();
        ctx.arc(sx, sy, r, 0, 2 * Math.PI);
        ctx.fill();
      }
    }
    // POI markers on top, class-filtered
    ctx.globalAlpha = 1;
    for (const poi of filterPois(pois, layers)) {
      let p: [number, number, number] = [
        poi.position[0],
        poi.position[1],
        poi.position[2],
      ];
      if (wim) p = applyPoint(wim, p);
      const vx = view[0][0] * p[0] + view[0][1] * p[1] + view[0][2] * p[2] + view[0][3];
      const vy = view[1][0] * p[0] + view[1][1] * p[1] + view[1][2] * p[2] + view[1][3];
      const vz = view[2][0] * p[0] + view[2][1] * p[1] + view[2][2] * p[2] + view[2][3];
      if (vz <= this.config.near) continue;
      const sx = w / 2 + (this.config.focalPx * vx) / vz;
      const sy = h / 2 - (this.config.focalPx * vy) / vz;
      ctx.fillStyle = cssColor(markerColor(poi.class));
      ctx.strokeStyle = "#ffffff";
      ctx.lineWidth = 1.5;
      ctx.beginPath();
      ctx.arc(sx, sy, this.config.markerRadiusPx, 0, 2 * Math.PI);
      ctx.fill();
      ctx.stroke();
    }
  }

  /** Markers that would be drawn for the given layer state. */
  visibleMarkers(pois: PoiDoc[], layers: LayerState): PoiDoc[] {
    return filterPois(pois, layers);
  }
}
