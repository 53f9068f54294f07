/**
 * POI layer state: purely client-side class visibility filtering over
 * the POI documents broadcast by the server.
 */

import { PoiDoc } from "./protocol.js";

export const BUILTIN_CLASSES = [
  "Fire",
  "Smoke",
  "Debris",
  "Victim",
  "AccessRoute",
] as const;

export const CLASS_COLORS: Record<string, [number, number, number]> = {
  Fire: [1.0, 0.2, 0.0],
  Smoke: [0.6, 0.6, 0.6],
  Debris: [0.7, 0.5, 0.2],
  Victim: [1.0, 0.0, 1.0],
  AccessRoute: [0.0, 0.8, 0.2],
};
export const OTHER_COLOR: [number, number, number] = [0.2, 0.4, 1.0];

export function markerColor(hazardClass: string): [number, number, number] {
  return CLASS_COLORS[hazardClass] ?? OTHER_COLOR;
}

export class LayerState {
  readonly enabled: ReadonlySet<string>;

  constructor(enabled?: Iterable<string>) {
    this.enabled = new Set(enabled ?? BUILTIN_CLASSES);
  }

  withClass(name: string, on: boolean): LayerState {
    const next = new Set(this.enabled);
    if (on) next.add(name);
    else next.delete(name);
    return new LayerState(next);
  }

  toggle(name: string): LayerState {
    return this.withClass(name, !this.enabled.has(name));
  }

  has(name: string): boolean {
    return this.enabled.has(name);
  }
}

/** POIs whose class is enabled, original order preserved. */
export function filterPois(pois: PoiDoc[], layers: LayerState): PoiDoc[] {
  return pois.filter((p) => layers.has(p.class));
}
