// Virtual compass dial: needle angle mirrors the robot heading, clockwise
// from North (straight up).

export interface NeedleGeometry {
  x1: number;
  y1: number;
  x2: number;
  y2: number;
  tailX: number;
  tailY: number;
}

/** Canvas rotation angle (radians) for a heading in degrees; 0 points up. */
export function needleAngleRad(headingDeg: number): number {
  return ((headingDeg % 360) + 360) % 360 * Math.PI / 180;
}

/** Needle endpoints in canvas pixels for a dial centred at (cx, cy). */
export function needleGeometry(
  headingDeg: number, cx: number, cy: number, radius: number,
): NeedleGeometry {
  const angle = needleAngleRad(headingDeg);
  // canvas y grows downward, so "up" is -cos
  const tipX = cx + radius * Math.sin(angle);
  const tipY = cy - radius * Math.cos(angle);
  const tail = radius * 0.25;
  return {
    x1: cx, y1: cy,
    x2: tipX, y2: tipY,
    tailX: cx - tail * Math.sin(angle),
    tailY: cy + tail * Math.cos(angle),
  };
}

const CARDINALS: Array<[string, number]> = [["N", 0], ["E", 90], ["S", 180], ["W", 270]];

export function drawCompass(
  ctx: CanvasRenderingContext2D, headingDeg: number, size: number,
): void {
  const cx = size / 2;
  const cy = size / 2;
  const radius = size * 0.38;
  ctx.clearRect(0, 0, size, size);

  ctx.strokeStyle = "#445";
  ctx.lineWidth = 2;
  ctx.beginPath();
  ctx.arc(cx, cy, radius + 6, 0, 2 * Math.PI);
  ctx.stroke();

  ctx.fillStyle = "#889";
  ctx.font = `${Math.round(size * 0.09)}px system-ui, sans-serif`;
  ctx.textAlign = "center";
  ctx.textBaseline = "middle";
  for (const [label, deg] of CARDINALS) {
    const a = needleAngleRad(deg);
    ctx.fillStyle = label === "N" ? "#d33" : "#889";
    ctx.fillText(label,
      cx + (radius + 18) * Math.sin(a),
      cy - (radius + 18) * Math.cos(a));
  }

  const needle = needleGeometry(headingDeg, cx, cy, radius);
  ctx.strokeStyle = "#d33";
  ctx.lineWidth = 3;
  ctx.beginPath();
  ctx.moveTo(needle.tailX, needle.tailY);
  ctx.lineTo(needle.x2, needle.y2);
  ctx.stroke();
  ctx.fillStyle = "#223";
  ctx.beginPath();
  ctx.arc(cx, cy, 4, 0, 2 * Math.PI);
  ctx.fill();

  ctx.fillStyle = "#223";
  ctx.font = `${Math.round(size * 0.11)}px system-ui, sans-serif`;
  ctx.fillText(`${headingDeg.toFixed(1)}°`, cx, cy + radius * 0.55);
}
