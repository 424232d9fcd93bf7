// Telemetry chart buffers plus a minimal canvas line renderer.
//
// Buffers are pure data merged from gateway telemetry tails, so the
// "chart shows exactly what the gateway serves" property is testable
// without a DOM; only drawLine touches the canvas.

import type { TelemetryTail } from "./types.js";

export interface ChartBuffer {
  series: string;
  capacity: number;
  points: [number, number][];
}

export function newBuffer(series: string, capacity = 120): ChartBuffer {
  return { series, capacity, points: [] };
}

/** Merge a served tail into the buffer, dedup by timestamp, keep the tail. */
export function mergeTail(buffer: ChartBuffer, tail: TelemetryTail): ChartBuffer {
  if (tail.series !== buffer.series) {
    throw new Error(`buffer ${buffer.series} fed with ${tail.series}`);
  }
  const byTime = new Map<number, number>(buffer.points);
  for (const [t, v] of tail.points) {
    byTime.set(t, v);
  }
  const merged = [...byTime.entries()].sort((a, b) => a[0] - b[0]);
  return { ...buffer, points: merged.slice(-buffer.capacity) };
}

export function lastN(buffer: ChartBuffer, n: number): [number, number][] {
  return buffer.points.slice(-n);
}

const SERIES_COLORS = ["#2563eb", "#16a34a", "#dc2626", "#9333ea", "#ea580c"];

export function seriesColor(index: number): string {
  return SERIES_COLORS[index % SERIES_COLORS.length];
}

/** Draw one or more buffers as line charts on a canvas. */
export function drawLines(
  canvas: HTMLCanvasElement,
  buffers: ChartBuffer[],
  label: string,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  const all = buffers.flatMap((b) => b.points);
  if (!all.length) {
    ctx.fillStyle = "#888";
    ctx.fillText(`${label}: waiting for telemetry`, 8, 16);
    return;
  }
  const ts = all.map((p) => p[0]);
  const vs = all.map((p) => p[1]);
  const t0 = Math.min(...ts);
  const t1 = Math.max(...ts);
  const vMax = Math.max(1e-9, ...vs);
  const pad = 24;
  const sx = (t: number) =>
    pad + (t1 === t0 ? 0.5 : (t - t0) / (t1 - t0)) * (width - 2 * pad);
  const sy = (v: number) => height - pad - (v / (vMax * 1.1)) * (height - 2 * pad);
  ctx.strokeStyle = "#ccc";
  ctx.strokeRect(pad, pad, width - 2 * pad, height - 2 * pad);
  buffers.forEach((buffer, i) => {
    if (!buffer.points.length) return;
    ctx.strokeStyle = seriesColor(i);
    ctx.lineWidth = 1.5;
    ctx.beginPath();
    buffer.points.forEach(([t, v], j) => {
      if (j === 0) ctx.moveTo(sx(t), sy(v));
      else ctx.lineTo(sx(t), sy(v));
    });
    ctx.stroke();
    ctx.fillStyle = seriesColor(i);
    ctx.fillText(buffer.series, pad + 4, pad + 12 + 12 * i);
  });
  ctx.fillStyle = "#444";
  ctx.fillText(label, 8, 12);
  ctx.fillText(vMax.toFixed(1), 2, pad + 8);
}
