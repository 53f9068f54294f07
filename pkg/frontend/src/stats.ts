/**
 * HUD frame statistics over a sliding window of the most recent frame
 * times: fps_equiv = 1000 / mean, the same arithmetic as the server
 * benchmark harness.
 */

export const HUD_WINDOW = 120;

export class FrameStats {
  private samples: number[] = [];

  constructor(readonly window: number = HUD_WINDOW) {}

  push(frameMs: number): void {
    this.samples.push(frameMs);
    if (this.samples.length > this.window) {
      this.samples.splice(0, this.samples.length - this.window);
    }
  }

  get count(): number {
    return this.samples.length;
  }

  get meanMs(): number | null {
    if (this.samples.length === 0) return null;
    let sum = 0;
    for (const s of this.samples) sum += s;
    return sum / this.samples.length;
  }

  get fpsEquiv(): number | null {
    const mean = this.meanMs;
    return mean === null ? null : 1000.0 / mean;
  }
}
