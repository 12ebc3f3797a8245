// Footprint plot: the driven path in world metres mapped onto canvas pixels
// with equal aspect, auto-fit bounds and the newest point highlighted.

import type { TracePoint } from "./state.js";

export interface Viewport {
  scale: number;   // pixels per metre (same for both axes)
  offsetX: number;
  offsetY: number;
}

export interface Bounds {
  minX: number;
  maxX: number;
  minY: number;
  maxY: number;
}

export function traceBounds(points: Array<{ x_m: number; y_m: number }>): Bounds {
  let minX = Infinity, maxX = -Infinity, minY = Infinity, maxY = -Infinity;
  for (const p of points) {
    minX = Math.min(minX, p.x_m);
    maxX = Math.max(maxX, p.x_m);
    minY = Math.min(minY, p.y_m);
    maxY = Math.max(maxY, p.y_m);
  }
  return { minX, maxX, minY, maxY };
}

/** Equal-aspect world-to-pixel transform that fits the bounds with padding. */
export function fitViewport(
  bounds: Bounds, width: number, height: number, paddingPx = 20,
): Viewport {
  const spanX = Math.max(bounds.maxX - bounds.minX, 1e-6);
  const spanY = Math.max(bounds.maxY - bounds.minY, 1e-6);
  const scale = Math.min(
    (width - 2 * paddingPx) / spanX,
    (height - 2 * paddingPx) / spanY,
  );
  const midX = (bounds.minX + bounds.maxX) / 2;
  const midY = (bounds.minY + bounds.maxY) / 2;
  return {
    scale,
    offsetX: width / 2 - midX * scale,
    offsetY: height / 2 + midY * scale, // north (+y) is up on screen
  };
}

export function toPixel(
  view: Viewport, x_m: number, y_m: number,
): [number, number] {
  return [view.offsetX + x_m * view.scale, view.offsetY - y_m * view.scale];
}

/** Pixel-space polyline for the whole trace (the testable geometry). */
export function tracePolyline(
  points: Array<{ x_m: number; y_m: number }>, width: number, height: number,
): Array<[number, number]> {
  if (points.length === 0) {
    return [];
  }
  const view = fitViewport(traceBounds(points), width, height);
  return points.map((p) => toPixel(view, p.x_m, p.y_m));
}

export function drawFootprint(
  ctx: CanvasRenderingContext2D, trace: TracePoint[], width: number, height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  ctx.strokeStyle = "#ccd";
  ctx.strokeRect(0.5, 0.5, width - 1, height - 1);
  if (trace.length === 0) {
    return;
  }
  const line = tracePolyline(trace, width, height);
  ctx.strokeStyle = "#27c";
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(line[0][0], line[0][1]);
  for (const [x, y] of line.slice(1)) {
    ctx.lineTo(x, y);
  }
  ctx.stroke();
  const [nx, ny] = line[line.length - 1];
  ctx.fillStyle = "#d33";
  ctx.beginPath();
  ctx.arc(nx, ny, 5, 0, 2 * Math.PI);
  ctx.fill();
}
