/** Canvas sparkline for a timed vital series, with optional event markers. */

import { VitalPoint } from "./state.js";

export interface SparklineOptions {
  color?: string;
  min?: number;
  max?: number;
  markers?: number[]; // sim times to flag (medication events)
  label?: string;
}

export function drawSparkline(
  canvas: HTMLCanvasElement,
  points: readonly VitalPoint[],
  options: SparklineOptions = {},
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  if (points.length === 0) {
    ctx.fillStyle = "#556";
    ctx.font = "10px sans-serif";
    ctx.fillText("no data", 4, height / 2);
    return;
  }

  const t0 = points[0].t;
  const t1 = points[points.length - 1].t;
  const tSpan = Math.max(t1 - t0, 1e-9);
  const values = points.map((p) => p.v);
  const vMin = options.min ?? Math.min(...values);
  const vMax = options.max ?? Math.max(...values);
  const vSpan = Math.max(vMax - vMin, 1e-9);

  const px = (t: number) => 2 + ((t - t0) / tSpan) * (width - 4);
  const py = (v: number) => height - 3 - ((v - vMin) / vSpan) * (height - 6);

  ctx.strokeStyle = options.color ?? "#6cf";
  ctx.lineWidth = 1.2;
  ctx.beginPath();
  points.forEach((p, i) => {
    if (i === 0) ctx.moveTo(px(p.t), py(p.v));
    else ctx.lineTo(px(p.t), py(p.v));
  });
  ctx.stroke();

  ctx.fillStyle = options.color ?? "#6cf";
  const last = points[points.length - 1];
  ctx.beginPath();
  ctx.arc(px(last.t), py(last.v), 2, 0, Math.PI * 2);
  ctx.fill();

  for (const markerT of options.markers ?? []) {
    if (markerT < t0 || markerT > t1) continue;
    ctx.strokeStyle = "#fa0";
    ctx.beginPath();
    ctx.moveTo(px(markerT), 2);
    ctx.lineTo(px(markerT), height - 2);
    ctx.stroke();
  }

  if (options.label) {
    ctx.fillStyle = "#9ab";
    ctx.font = "10px sans-serif";
    ctx.fillText(`${options.label} ${last.v.toFixed(1)}`, 4, 10);
  }
}
