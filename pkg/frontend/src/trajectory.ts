/**
 * LVLH trajectory figures.
 *
 * Planar view: in-track displacement on the horizontal axis, radial on the
 * vertical (the usual rendezvous-plot orientation, target at the origin).
 * The 3-d view projects states through a fixed isometric camera.  Both draw
 * the keep-out ellipsoid, antenna cones, one marker + arrow per burn row,
 * and dashed abort overlays (coast arc to the circularization burn and one
 * period of post-abort drift) when a cam file is supplied.
 */

import { BurnRow, CamFile, TrajPoint } from "./schemas.js";
import { SvgDoc, linearScale, padded, ticks, fmt } from "./svg.js";

export interface ObstacleSpec {
  kozSemiAxes: [number, number, number];
  cones: Array<{
    apex: [number, number, number];
    axis: [number, number, number];
    halfAngleRad: number;
    height: number;
  }>;
}

/** Default obstacle geometry matching the canonical scenario (chaser-radius inflated). */
export const DEFAULT_OBSTACLES: ObstacleSpec = {
  kozSemiAxes: [37.333, 53.333, 16.0],
  cones: [{ apex: [2.0, 0, 0], axis: [-1, 0, 0], halfAngleRad: (30 * Math.PI) / 180, height: 78.0 }],
};

const WIDTH = 860;
const HEIGHT = 640;
const MARGIN = { left: 64, right: 24, top: 28, bottom: 48 };

interface Bounds {
  xlo: number;
  xhi: number;
  ylo: number;
  yhi: number;
}

function planarBounds(traj: TrajPoint[], cam: CamFile | null, obs: ObstacleSpec): Bounds {
  let xs: number[] = [obs.kozSemiAxes[1], -obs.kozSemiAxes[1]];
  let ys: number[] = [obs.kozSemiAxes[0], -obs.kozSemiAxes[0]];
  for (const c of obs.cones) {
    ys.push(c.apex[0] + c.axis[0] * c.height);
  }
  for (const p of traj) {
    xs.push(p.r[1]);
    ys.push(p.r[0]);
  }
  if (cam) {
    for (const b of cam.burns) {
      for (const arc of [b.coast_arc ?? [], b.post_arc ?? []]) {
        for (const q of arc) {
          xs.push(q[1]);
          ys.push(q[0]);
        }
      }
    }
  }
  const [xlo, xhi] = padded(Math.min(...xs), Math.max(...xs));
  const [ylo, yhi] = padded(Math.min(...ys), Math.max(...ys));
  return { xlo, xhi, ylo, yhi };
}

function axes(doc: SvgDoc, sx: (v: number) => number, sy: (v: number) => number,
              bx: [number, number], by: [number, number], xlabel: string, ylabel: string): void {
  const x0 = MARGIN.left;
  const x1 = WIDTH - MARGIN.right;
  const y0 = HEIGHT - MARGIN.bottom;
  const y1 = MARGIN.top;
  doc.line(x0, y0, x1, y0, 'stroke="black" stroke-width="1"');
  doc.line(x0, y0, x0, y1, 'stroke="black" stroke-width="1"');
  for (const t of ticks(bx, 6)) {
    const px = sx(t);
    doc.line(px, y0, px, y0 + 5, 'stroke="black" stroke-width="1"');
    doc.text(px, y0 + 18, t.toFixed(0), 'font-size="11" text-anchor="middle" font-family="sans-serif"');
  }
  for (const t of ticks(by, 6)) {
    const py = sy(t);
    doc.line(x0 - 5, py, x0, py, 'stroke="black" stroke-width="1"');
    doc.text(x0 - 8, py + 4, t.toFixed(0), 'font-size="11" text-anchor="end" font-family="sans-serif"');
  }
  doc.text((x0 + x1) / 2, HEIGHT - 12, xlabel, 'font-size="13" text-anchor="middle" font-family="sans-serif"');
  doc.text(16, (y0 + y1) / 2, ylabel, `font-size="13" text-anchor="middle" font-family="sans-serif" transform="rotate(-90 16 ${fmt((y0 + y1) / 2)})"`);
}

export function renderPlanar(traj: TrajPoint[], burns: BurnRow[], cam: CamFile | null,
                             obs: ObstacleSpec = DEFAULT_OBSTACLES): string {
  const b = planarBounds(traj, cam, obs);
  const sx = linearScale([b.xlo, b.xhi], [MARGIN.left, WIDTH - MARGIN.right]);
  const sy = linearScale([b.ylo, b.yhi], [HEIGHT - MARGIN.bottom, MARGIN.top]);
  const doc = new SvgDoc(WIDTH, HEIGHT);

  // keep-out zone cross-section (dy horizontal, dx vertical)
  doc.ellipse(sx(0), sy(0), Math.abs(sx(obs.kozSemiAxes[1]) - sx(0)),
              Math.abs(sy(obs.kozSemiAxes[0]) - sy(0)),
              'fill="#f3c6c6" stroke="#a33" stroke-width="1"');
  for (const cone of obs.cones) {
    // planar silhouette of an axis-aligned cone: apex plus the base chord
    const tip = cone.apex[0];
    const base = cone.apex[0] + cone.axis[0] * cone.height;
    const halfWidth = Math.tan(cone.halfAngleRad) * cone.height;
    doc.polygon(
      [
        [sx(cone.apex[1]), sy(tip)],
        [sx(cone.apex[1] - halfWidth), sy(base)],
        [sx(cone.apex[1] + halfWidth), sy(base)],
      ],
      'fill="#f8e3b9" stroke="#b80" stroke-width="1"',
    );
  }

  if (cam) {
    for (const burn of cam.burns) {
      for (const [arc, dash] of [[burn.coast_arc, "6,4"], [burn.post_arc, "2,4"]] as const) {
        if (!arc || arc.length === 0) continue;
        doc.polyline(arc.map((q) => [sx(q[1]), sy(q[0])] as [number, number]),
                     `fill="none" stroke="#8648b5" stroke-width="1" stroke-dasharray="${dash}"`);
      }
    }
  }

  doc.polyline(traj.map((p) => [sx(p.r[1]), sy(p.r[0])] as [number, number]),
               'fill="none" stroke="#1a7f37" stroke-width="1.8"');

  const trajByTime = new Map(traj.map((p) => [p.t, p]));
  for (const burn of burns) {
    const at = trajByTime.get(burn.tau) ?? nearestByTime(traj, burn.tau);
    if (!at) continue;
    const px = sx(at.r[1]);
    const py = sy(at.r[0]);
    doc.circle(px, py, 3.2, 'class="burn-marker" fill="#0b5ed7" stroke="none"');
    const scale = 120.0; // pixels per m/s
    doc.line(px, py, px + burn.dv[1] * scale, py - burn.dv[0] * scale,
             'stroke="#0b5ed7" stroke-width="1.4"');
  }

  doc.circle(sx(0), sy(0), 2.5, 'fill="black" stroke="none"');
  axes(doc, sx, sy, [b.xlo, b.xhi], [b.ylo, b.yhi], "in-track dy [m]", "radial dx [m]");
  doc.text(MARGIN.left + 6, MARGIN.top + 4,
           `trajectory (${traj.length} states, ${burns.length} burns)`,
           'font-size="12" font-family="sans-serif"');
  return doc.render();
}

function nearestByTime(traj: TrajPoint[], t: number): TrajPoint | null {
  let best: TrajPoint | null = null;
  let bestD = Infinity;
  for (const p of traj) {
    const d = Math.abs(p.t - t);
    if (d < bestD) {
      bestD = d;
      best = p;
    }
  }
  return best;
}

// fixed isometric camera for the 3-d view
const ISO_C = Math.SQRT1_2;

function project3(r: [number, number, number]): [number, number] {
  const [dx, dy, dz] = r;
  return [(dy - dx) * ISO_C, dz + (dy + dx) * 0.5 * ISO_C * 0.8];
}

export function renderIso(traj: TrajPoint[], burns: BurnRow[], cam: CamFile | null,
                          obs: ObstacleSpec = DEFAULT_OBSTACLES): string {
  const pts2 = traj.map((p) => project3(p.r));
  const extra: Array<[number, number]> = [];
  const [a, bAx, c] = obs.kozSemiAxes;
  for (let k = 0; k <= 32; k++) {
    const th = (2 * Math.PI * k) / 32;
    extra.push(project3([a * Math.cos(th), bAx * Math.sin(th), 0]));
    extra.push(project3([a * Math.cos(th), 0, c * Math.sin(th)]));
    extra.push(project3([0, bAx * Math.cos(th), c * Math.sin(th)]));
  }
  if (cam) {
    for (const burn of cam.burns) {
      for (const arc of [burn.coast_arc ?? [], burn.post_arc ?? []]) {
        for (const q of arc) extra.push(project3(q as [number, number, number]));
      }
    }
  }
  const all = pts2.concat(extra);
  const [xlo, xhi] = padded(Math.min(...all.map((p) => p[0])), Math.max(...all.map((p) => p[0])));
  const [ylo, yhi] = padded(Math.min(...all.map((p) => p[1])), Math.max(...all.map((p) => p[1])));
  const sx = linearScale([xlo, xhi], [MARGIN.left, WIDTH - MARGIN.right]);
  const sy = linearScale([ylo, yhi], [HEIGHT - MARGIN.bottom, MARGIN.top]);
  const doc = new SvgDoc(WIDTH, HEIGHT);

  for (let ring = 0; ring < 3; ring++) {
    const pts: Array<[number, number]> = [];
    for (let k = 0; k <= 32; k++) {
      const th = (2 * Math.PI * k) / 32;
      const q: [number, number, number] =
        ring === 0
          ? [a * Math.cos(th), bAx * Math.sin(th), 0]
          : ring === 1
            ? [a * Math.cos(th), 0, c * Math.sin(th)]
            : [0, bAx * Math.cos(th), c * Math.sin(th)];
      const pr = project3(q);
      pts.push([sx(pr[0]), sy(pr[1])]);
    }
    doc.polyline(pts, 'fill="none" stroke="#a33" stroke-width="1"');
  }

  if (cam) {
    for (const burn of cam.burns) {
      for (const [arc, dash] of [[burn.coast_arc, "6,4"], [burn.post_arc, "2,4"]] as const) {
        if (!arc || arc.length === 0) continue;
        doc.polyline(
          arc.map((q) => {
            const pr = project3(q as [number, number, number]);
            return [sx(pr[0]), sy(pr[1])] as [number, number];
          }),
          `fill="none" stroke="#8648b5" stroke-width="1" stroke-dasharray="${dash}"`,
        );
      }
    }
  }

  doc.polyline(pts2.map((p) => [sx(p[0]), sy(p[1])] as [number, number]),
               'fill="none" stroke="#1a7f37" stroke-width="1.8"');
  const trajTimes = traj.map((p) => p.t);
  for (const burn of burns) {
    let idx = 0;
    let bestD = Infinity;
    for (let i = 0; i < trajTimes.length; i++) {
      const d = Math.abs(trajTimes[i] - burn.tau);
      if (d < bestD) {
        bestD = d;
        idx = i;
      }
    }
    const pr = pts2[idx];
    doc.circle(sx(pr[0]), sy(pr[1]), 3.2, 'class="burn-marker" fill="#0b5ed7" stroke="none"');
  }
  doc.circle(sx(project3([0, 0, 0])[0]), sy(project3([0, 0, 0])[1]), 2.5, 'fill="black" stroke="none"');
  doc.text(MARGIN.left + 6, MARGIN.top + 4,
           `isometric view (${traj.length} states, ${burns.length} burns)`,
           'font-size="12" font-family="sans-serif"');
  return doc.render();
}
