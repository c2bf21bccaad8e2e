/**
 * Input schemas for the planner's documented file formats.
 *
 * The CSV files are strict: fixed header, comma separation, no quoting.
 * Every parse failure throws SchemaError with a message naming the file
 * and the offending row/field, which the CLI turns into a nonzero exit.
 */

import { z } from "zod";

export class SchemaError extends Error {}

const finite = z.number().finite();

export interface TrajPoint {
  t: number;
  r: [number, number, number];
  v: [number, number, number];
}

export interface BurnRow {
  tau: number;
  dv: [number, number, number];
  norm: number;
  fuelAllocated: number;
}

export interface SweepRow {
  n: number;
  jBar: number;
  smoothed: boolean;
  costMps: number | null;
  onlineSeconds: number;
  outcome: string;
}

const camBurnSchema = z
  .object({
    tau_s: finite,
    state: z.array(finite).length(6),
    overall_safe: z.boolean(),
    modes_feasible: z.number().int().nonnegative(),
    n_modes: z.number().int().positive(),
    theta_star_rad: finite.optional(),
    coast_horizon_s: finite.optional(),
    dv_circ_mps: z.array(finite).length(3).optional(),
    post_state: z.array(finite).length(6).optional(),
    coast_arc: z.array(z.array(finite).length(3)).optional(),
    post_arc: z.array(z.array(finite).length(3)).optional(),
  })
  .strict();

const camFileSchema = z
  .object({
    schema_version: z.literal(1),
    burns: z.array(camBurnSchema),
  })
  .strict();

export type CamFile = z.infer<typeof camFileSchema>;

function splitCsv(text: string, path: string, header: string): string[][] {
  const lines = text.replace(/\r\n/g, "\n").split("\n").filter((l) => l.length > 0);
  if (lines.length === 0) {
    throw new SchemaError(`${path}: empty file`);
  }
  if (lines[0] !== header) {
    throw new SchemaError(`${path}: bad header; expected "${header}"`);
  }
  return lines.slice(1).map((l) => l.split(","));
}

function num(raw: string, path: string, row: number, col: string): number {
  const v = Number(raw);
  if (raw.trim() === "" || !Number.isFinite(v)) {
    throw new SchemaError(`${path}: row ${row}: field ${col} is not a finite number (${raw})`);
  }
  return v;
}

export function parseTrajCsv(text: string, path: string): TrajPoint[] {
  const rows = splitCsv(text, path, "t,dx,dy,dz,dvx_state,dvy_state,dvz_state");
  return rows.map((cells, i) => {
    if (cells.length !== 7) {
      throw new SchemaError(`${path}: row ${i + 1}: expected 7 fields, got ${cells.length}`);
    }
    const f = cells.map((c, k) => num(c, path, i + 1, `#${k}`));
    return { t: f[0], r: [f[1], f[2], f[3]], v: [f[4], f[5], f[6]] };
  });
}

export function parseBurnsCsv(text: string, path: string): BurnRow[] {
  const rows = splitCsv(text, path, "tau,dvx,dvy,dvz,norm,fuel_allocated");
  return rows.map((cells, i) => {
    if (cells.length !== 6) {
      throw new SchemaError(`${path}: row ${i + 1}: expected 6 fields, got ${cells.length}`);
    }
    const f = cells.map((c, k) => num(c, path, i + 1, `#${k}`));
    return { tau: f[0], dv: [f[1], f[2], f[3]], norm: f[4], fuelAllocated: f[5] };
  });
}

export function parseSweepCsv(text: string, path: string): SweepRow[] {
  const rows = splitCsv(text, path, "n,j_bar,smoothed,cost_mps,online_seconds,outcome");
  return rows.map((cells, i) => {
    if (cells.length !== 6) {
      throw new SchemaError(`${path}: row ${i + 1}: expected 6 fields, got ${cells.length}`);
    }
    const smoothedRaw = cells[2];
    if (smoothedRaw !== "true" && smoothedRaw !== "false") {
      throw new SchemaError(`${path}: row ${i + 1}: smoothed must be true/false`);
    }
    const cost = cells[3].trim() === "" ? null : num(cells[3], path, i + 1, "cost_mps");
    return {
      n: num(cells[0], path, i + 1, "n"),
      jBar: num(cells[1], path, i + 1, "j_bar"),
      smoothed: smoothedRaw === "true",
      costMps: cost,
      onlineSeconds: num(cells[4], path, i + 1, "online_seconds"),
      outcome: cells[5],
    };
  });
}

export function parseCamJson(text: string, path: string): CamFile {
  let doc: unknown;
  try {
    doc = JSON.parse(text);
  } catch (err) {
    throw new SchemaError(`${path}: not valid JSON: ${(err as Error).message}`);
  }
  const res = camFileSchema.safeParse(doc);
  if (!res.success) {
    const issue = res.error.issues[0];
    throw new SchemaError(`${path}: ${issue.path.join(".")}: ${issue.message}`);
  }
  return res.data;
}
