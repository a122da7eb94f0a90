/** Minimal SVG line chart: pure geometry, no rendering dependencies. */

import { toCents } from './money.js';
import type { CurvePoint } from './whatif.js';

export interface ChartGeometry {
  width: number;
  height: number;
  path: string;
  markers: { x: number; y: number; label: string }[];
  yTicks: { y: number; label: string }[];
  xTicks: { x: number; label: string }[];
}

const MARGIN = { left: 70, right: 16, top: 12, bottom: 28 };

export function curveGeometry(points: CurvePoint[], width = 560, height = 300): ChartGeometry {
  if (points.length === 0) {
    return { width, height, path: '', markers: [], yTicks: [], xTicks: [] };
  }
  const xs = points.map((p) => p.controlPercent);
  const ys = points.map((p) => toCents(p.crb));
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const ySpread = Math.max(...ys) - Math.min(...ys);
  const yPad = ySpread > 0 ? ySpread * 0.1 : Math.max(Math.max(...ys) * 0.1, 100);
  const yMin = Math.min(...ys) - yPad;
  const yMax = Math.max(...ys) + yPad;

  const plotW = width - MARGIN.left - MARGIN.right;
  const plotH = height - MARGIN.top - MARGIN.bottom;
  const toX = (v: number) => MARGIN.left + (xMax === xMin ? 0.5 : (v - xMin) / (xMax - xMin)) * plotW;
  const toY = (v: number) => MARGIN.top + (1 - (v - yMin) / (yMax - yMin)) * plotH;

  const path = points
    .map((p, i) => `${i === 0 ? 'M' : 'L'}${toX(p.controlPercent).toFixed(1)},${toY(toCents(p.crb)).toFixed(1)}`)
    .join(' ');
  const markers = points.map((p) => ({
    x: toX(p.controlPercent),
    y: toY(toCents(p.crb)),
    label: p.crb,
  }));
  const yTicks = [yMin + yPad, (yMin + yMax) / 2, yMax - yPad].map((v) => ({
    y: toY(v),
    label: `$${Math.round(v / 100).toLocaleString('en-US')}`,
  }));
  const xTicks = points.map((p) => ({ x: toX(p.controlPercent), label: `${p.controlPercent}%` }));
  return { width, height, path, markers, yTicks, xTicks };
}
