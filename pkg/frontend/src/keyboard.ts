import type { BoardRect } from "./trace.js";
import type { LayoutDocument, LayoutKey } from "./types.js";

/**
 * Fit the unit-width board into a canvas, preserving the layout aspect ratio.
 * The returned rect is also the pixel->unit transform for trace capture, so
 * what the user sees and what the engine decodes always agree.
 */
export function boardRect(doc: LayoutDocument, canvasWidth: number, canvasHeight: number): BoardRect {
  const scale = Math.min(canvasWidth, canvasHeight / doc.aspect);
  const width = scale;
  const height = scale * doc.aspect;
  return {
    left: (canvasWidth - width) / 2,
    top: (canvasHeight - height) / 2,
    width,
    height,
    aspect: doc.aspect,
  };
}

export function keyAt(doc: LayoutDocument, ux: number, uy: number): LayoutKey | null {
  for (const key of doc.keys) {
    if (
      Math.abs(ux - key.cx) <= key.w / 2 &&
      Math.abs(uy - key.cy) <= key.h / 2
    ) {
      return key;
    }
  }
  return null;
}

export class KeyboardRenderer {
  highlighted: string | null = null;

  constructor(private canvas: HTMLCanvasElement, private doc: LayoutDocument) {}

  get rect(): BoardRect {
    return boardRect(this.doc, this.canvas.width, this.canvas.height);
  }

  draw(strokePixels: [number, number][] = []): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    const rect = this.rect;
    ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
    ctx.font = `${Math.round(rect.width / 28)}px sans-serif`;
    ctx.textAlign = "center";
    ctx.textBaseline = "middle";
    for (const key of this.doc.keys) {
      const x = rect.left + (key.cx - key.w / 2) * rect.width;
      const y = rect.top + ((key.cy - key.h / 2) / this.doc.aspect) * rect.height;
      const w = key.w * rect.width;
      const h = (key.h / this.doc.aspect) * rect.height;
      ctx.fillStyle = key.char === this.highlighted ? "#cfe3ff" : "#f4f4f4";
      ctx.fillRect(x + 1, y + 1, w - 2, h - 2);
      ctx.strokeStyle = "#999";
      ctx.strokeRect(x + 1, y + 1, w - 2, h - 2);
      ctx.fillStyle = "#222";
      ctx.fillText(key.char, x + w / 2, y + h / 2);
    }
    if (strokePixels.length > 1) {
      ctx.beginPath();
      ctx.moveTo(strokePixels[0][0], strokePixels[0][1]);
      for (const [px, py] of strokePixels.slice(1)) ctx.lineTo(px, py);
      ctx.strokeStyle = "#4878a8";
      ctx.lineWidth = 3;
      ctx.stroke();
      ctx.lineWidth = 1;
    }
  }
}
