// Per-channel sensor views: time-series line chart (graph mode) and
// aggregate rows (table mode). Values pass through untouched; all
// filtering/aggregation happens on the robot side.

import type { SeriesPoint } from "./api.js";

export interface ChartGeometry {
  line: Array<[number, number]>;
  vMin: number;
  vMax: number;
  tMin: number;
  tMax: number;
}

/** Map a series into pixel space; value scaling never alters the values. */
export function chartGeometry(
  points: SeriesPoint[], width: number, height: number, paddingPx = 24,
): ChartGeometry {
  if (points.length === 0) {
    return { line: [], vMin: 0, vMax: 0, tMin: 0, tMax: 0 };
  }
  const times = points.map(([t]) => t);
  const values = points.map(([, v]) => v);
  const tMin = Math.min(...times);
  const tMax = Math.max(...times);
  let vMin = Math.min(...values);
  let vMax = Math.max(...values);
  if (vMax === vMin) {
    vMax += 0.5; // flat series still renders mid-chart
    vMin -= 0.5;
  }
  const spanT = Math.max(tMax - tMin, 1);
  const line = points.map(([t, v]): [number, number] => [
    paddingPx + ((t - tMin) / spanT) * (width - 2 * paddingPx),
    height - paddingPx - ((v - vMin) / (vMax - vMin)) * (height - 2 * paddingPx),
  ]);
  return { line, vMin, vMax, tMin, tMax };
}

export interface TableRow {
  t_s: string;
  value: string;
}

/** Table mode: aggregate rows exactly as the API returned them. */
export function tableRows(rows: SeriesPoint[], digits = 3): TableRow[] {
  return rows.map(([t_us, value]) => ({
    t_s: (t_us / 1e6).toFixed(1),
    value: Number.isFinite(value) ? value.toFixed(digits) : "saturated",
  }));
}

export function drawChart(
  ctx: CanvasRenderingContext2D, points: SeriesPoint[], unit: string,
  width: number, height: number,
): void {
  ctx.clearRect(0, 0, width, height);
  ctx.strokeStyle = "#ccd";
  ctx.strokeRect(0.5, 0.5, width - 1, height - 1);
  if (points.length === 0) {
    ctx.fillStyle = "#889";
    ctx.font = "12px system-ui, sans-serif";
    ctx.fillText("no samples yet", 10, 20);
    return;
  }
  const geometry = chartGeometry(points, width, height);
  ctx.strokeStyle = "#2a7";
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.moveTo(geometry.line[0][0], geometry.line[0][1]);
  for (const [x, y] of geometry.line.slice(1)) {
    ctx.lineTo(x, y);
  }
  ctx.stroke();
  ctx.fillStyle = "#445";
  ctx.font = "11px system-ui, sans-serif";
  ctx.textAlign = "left";
  ctx.fillText(`${geometry.vMax.toFixed(2)} ${unit}`, 4, 12);
  ctx.fillText(`${geometry.vMin.toFixed(2)} ${unit}`, 4, height - 4);
  const last = points[points.length - 1];
  ctx.textAlign = "right";
  ctx.fillText(`${last[1].toFixed(2)} ${unit}`, width - 6, 12);
}
