/**
 * Gesture capture: pixel points collected between pointer-down and pointer-up,
 * converted to keyboard units using the rendered board rectangle, and
 * downsampled by uniform index selection with both endpoints pinned.
 */

export interface BoardRect {
  left: number;
  top: number;
  width: number; // pixels spanned by keyboard x in [0, 1]
  height: number; // pixels spanned by keyboard y in [0, aspect]
  aspect: number;
}

export const MAX_POINTS = 256;

/** Round to a fixed number of decimals so payloads are byte-stable. */
export function quantize(value: number, decimals = 6): number {
  const f = 10 ** decimals;
  return Math.round(value * f) / f;
}

export function pixelToUnit(rect: BoardRect, px: number, py: number): [number, number] {
  const x = ((px - rect.left) / rect.width) * 1.0;
  const y = ((py - rect.top) / rect.height) * rect.aspect;
  return [quantize(x), quantize(y)];
}

/**
 * Uniform-index downsampling that always keeps the first and last samples.
 * Deterministic: the same input always produces the same output.
 */
export function downsample<T>(points: T[], maxPoints: number = MAX_POINTS): T[] {
  if (points.length <= maxPoints) return points.slice();
  if (maxPoints < 2) throw new Error("need room for both endpoints");
  const out: T[] = [];
  const last = points.length - 1;
  for (let i = 0; i < maxPoints; i++) {
    const idx = Math.round((i * last) / (maxPoints - 1));
    out.push(points[idx]);
  }
  out[0] = points[0];
  out[out.length - 1] = points[last];
  return out;
}

export class TraceRecorder {
  private pixels: [number, number][] = [];
  private active = false;

  start(px: number, py: number): void {
    this.pixels = [[px, py]];
    this.active = true;
  }

  extend(px: number, py: number): void {
    if (!this.active) return;
    this.pixels.push([px, py]);
  }

  get isActive(): boolean {
    return this.active;
  }

  get pixelCount(): number {
    return this.pixels.length;
  }

  /**
   * Finish the gesture and produce the normalized payload points, or null
   * for degenerate single-point taps (no decode request should be sent).
   */
  finish(rect: BoardRect): [number, number][] | null {
    this.active = false;
    if (this.pixels.length < 2) return null;
    const units = this.pixels.map(([px, py]) => pixelToUnit(rect, px, py));
    return downsample(units, MAX_POINTS);
  }

  cancel(): void {
    this.active = false;
    this.pixels = [];
  }
}
