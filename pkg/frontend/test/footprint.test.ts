import { describe, expect, it } from "vitest";

import { fitViewport, toPixel, traceBounds, tracePolyline } from "../src/footprint.js";

/** Simulated square path: four 1 m legs, clockwise, back to the origin. */
function squareTrace(): Array<{ x_m: number; y_m: number }> {
  const points: Array<{ x_m: number; y_m: number }> = [];
  const legs: Array<[number, number]> = [[0, 1], [1, 0], [0, -1], [-1, 0]];
  let x = 0;
  let y = 0;
  for (const [dx, dy] of legs) {
    for (let i = 1; i <= 10; i += 1) {
      points.push({ x_m: x + (dx * i) / 10, y_m: y + (dy * i) / 10 });
    }
    x += dx;
    y += dy;
  }
  return points;
}

describe("footprint plot", () => {
  it("renders a closed square for the square-path trace", () => {
    const trace = squareTrace();
    const line = tracePolyline(trace, 420, 420);
    const last = line[line.length - 1];
    const dist = (a: [number, number], b: [number, number]) =>
      Math.hypot(a[0] - b[0], a[1] - b[1]);
    // closure: the final point returns to within a pixel of the path origin
    const view = fitViewport(traceBounds(trace), 420, 420);
    const origin = toPixel(view, 0, 0);
    expect(dist(last, origin)).toBeLessThan(1);
    // four distinct corners, one per leg end
    const corners = [9, 19, 29, 39].map((i) => line[i]);
    for (let i = 0; i < corners.length; i += 1) {
      for (let j = i + 1; j < corners.length; j += 1) {
        expect(dist(corners[i], corners[j])).toBeGreaterThan(50);
      }
    }
    // the square spans both axes equally in pixel space (equal aspect)
    const xs = line.map((p) => p[0]);
    const ys = line.map((p) => p[1]);
    const spanX = Math.max(...xs) - Math.min(...xs);
    const spanY = Math.max(...ys) - Math.min(...ys);
    expect(Math.abs(spanX - spanY)).toBeLessThan(1e-6);
  });

  it("equal aspect: one metre maps to the same pixel count on both axes", () => {
    const view = fitViewport({ minX: 0, maxX: 2, minY: 0, maxY: 1 }, 400, 400);
    const [x0, y0] = toPixel(view, 0, 0);
    const [x1] = toPixel(view, 1, 0);
    const [, y1] = toPixel(view, 0, 1);
    expect(Math.abs(x1 - x0)).toBeCloseTo(Math.abs(y0 - y1), 9);
  });

  it("north is up on screen", () => {
    const view = fitViewport({ minX: -1, maxX: 1, minY: -1, maxY: 1 }, 400, 400);
    const [, ySouth] = toPixel(view, 0, -1);
    const [, yNorth] = toPixel(view, 0, 1);
    expect(yNorth).toBeLessThan(ySouth);
  });

  it("single point and empty traces do not blow up", () => {
    expect(tracePolyline([], 400, 400)).toEqual([]);
    const dot = tracePolyline([{ x_m: 0, y_m: 0 }], 400, 400);
    expect(dot).toHaveLength(1);
    expect(dot[0][0]).toBeCloseTo(200, 6);
    expect(dot[0][1]).toBeCloseTo(200, 6);
  });

  it("auto-fits bounds with padding inside the canvas", () => {
    const line = tracePolyline(squareTrace(), 420, 300);
    for (const [x, y] of line) {
      expect(x).toBeGreaterThanOrEqual(20 - 1e-9);
      expect(x).toBeLessThanOrEqual(400 + 1e-9);
      expect(y).toBeGreaterThanOrEqual(20 - 1e-9);
      expect(y).toBeLessThanOrEqual(280 + 1e-9);
    }
  });
});
