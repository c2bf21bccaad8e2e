/**
 * Benchmark sweep figure: solution cost against online runtime, one point
 * per CSV row, series colored by cost threshold, smoothed runs drawn as
 * filled squares and unsmoothed as open circles.
 */

import { SweepRow } from "./schemas.js";
import { SvgDoc, linearScale, padded, ticks } from "./svg.js";

const WIDTH = 860;
const HEIGHT = 600;
const MARGIN = { left: 70, right: 170, top: 30, bottom: 52 };

const SERIES_COLORS = ["#0b5ed7", "#1a7f37", "#b8860b", "#a333c8", "#d9480f", "#0aa2c0"];

export interface SweepRender {
  svg: string;
  plotted: number;
  clipped: number;
}

export function renderSweep(rows: SweepRow[]): SweepRender {
  const usable = rows.filter((r) => r.outcome === "success" && r.costMps !== null);
  const xs = usable.map((r) => r.onlineSeconds);
  const ys = usable.map((r) => r.costMps as number);
  const bx = padded(Math.min(...(xs.length ? xs : [0])), Math.max(...(xs.length ? xs : [1])));
  const by = padded(Math.min(...(ys.length ? ys : [0])), Math.max(...(ys.length ? ys : [1])));
  const sx = linearScale(bx, [MARGIN.left, WIDTH - MARGIN.right]);
  const sy = linearScale(by, [HEIGHT - MARGIN.bottom, MARGIN.top]);
  const doc = new SvgDoc(WIDTH, HEIGHT);

  const x0 = MARGIN.left;
  const x1 = WIDTH - MARGIN.right;
  const y0 = HEIGHT - MARGIN.bottom;
  const y1 = MARGIN.top;
  doc.line(x0, y0, x1, y0, 'stroke="black" stroke-width="1"');
  doc.line(x0, y0, x0, y1, 'stroke="black" stroke-width="1"');
  for (const t of ticks(bx, 6)) {
    doc.line(sx(t), y0, sx(t), y0 + 5, 'stroke="black" stroke-width="1"');
    doc.text(sx(t), y0 + 18, t.toFixed(2), 'font-size="11" text-anchor="middle" font-family="sans-serif"');
  }
  for (const t of ticks(by, 6)) {
    doc.line(x0 - 5, sy(t), x0, sy(t), 'stroke="black" stroke-width="1"');
    doc.text(x0 - 8, sy(t) + 4, t.toFixed(2), 'font-size="11" text-anchor="end" font-family="sans-serif"');
  }
  doc.text((x0 + x1) / 2, HEIGHT - 14, "online runtime [s]", 'font-size="13" text-anchor="middle" font-family="sans-serif"');
  doc.text(18, (y0 + y1) / 2, "cost [m/s]", `font-size="13" text-anchor="middle" font-family="sans-serif" transform="rotate(-90 18 ${(y0 + y1) / 2})"`);

  const jValues = [...new Set(usable.map((r) => r.jBar))].sort((p, q) => p - q);
  const colorOf = new Map(jValues.map((j, i) => [j, SERIES_COLORS[i % SERIES_COLORS.length]]));

  let plotted = 0;
  let clipped = 0;
  for (const r of usable) {
    const px = sx(r.onlineSeconds);
    const py = sy(r.costMps as number);
    if (px < x0 || px > x1 || py < y1 || py > y0) {
      clipped += 1;
      continue;
    }
    const color = colorOf.get(r.jBar) ?? "#444";
    if (r.smoothed) {
      doc.add(`<rect class="pt" x="${(px - 3).toFixed(3)}" y="${(py - 3).toFixed(3)}" width="6" height="6" fill="${color}" stroke="none"/>`);
    } else {
      doc.circle(px, py, 3.4, `class="pt" fill="none" stroke="${color}" stroke-width="1.5"`);
    }
    plotted += 1;
  }

  // legend: one line per cost-threshold series plus the two smoothing states
  let ly = MARGIN.top + 8;
  const lx = WIDTH - MARGIN.right + 16;
  for (const j of jValues) {
    const color = colorOf.get(j) as string;
    doc.line(lx, ly - 4, lx + 18, ly - 4, `stroke="${color}" stroke-width="3"`);
    doc.text(lx + 24, ly, `J = ${j}`, 'font-size="12" font-family="sans-serif"');
    ly += 18;
  }
  ly += 6;
  doc.circle(lx + 6, ly - 4, 3.4, 'fill="none" stroke="#444" stroke-width="1.5"');
  doc.text(lx + 24, ly, "unsmoothed", 'font-size="12" font-family="sans-serif"');
  ly += 18;
  doc.add(`<rect x="${lx + 3}" y="${ly - 10}" width="6" height="6" fill="#444" stroke="none"/>`);
  doc.text(lx + 24, ly, "smoothed", 'font-size="12" font-family="sans-serif"');

  doc.text(MARGIN.left + 6, MARGIN.top + 2, `${plotted} runs`, 'font-size="12" font-family="sans-serif"');
  return { svg: doc.render(), plotted, clipped };
}
