import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import {
  SchemaError,
  parseBurnsCsv,
  parseCamJson,
  parseSweepCsv,
  parseTrajCsv,
} from "../src/schemas.js";

const TD = new URL("../testdata/", import.meta.url).pathname;

describe("traj csv", () => {
  it("parses the golden run", () => {
    const pts = parseTrajCsv(readFileSync(TD + "golden.traj.csv", "utf-8"), "traj");
    expect(pts.length).toBeGreaterThan(100);
    expect(pts[0].t).toBe(0);
    const ts = pts.map((p) => p.t);
    expect([...ts].sort((a, b) => a - b)).toEqual(ts);
  });

  it("rejects a wrong header", () => {
    expect(() => parseTrajCsv("a,b,c\n1,2,3\n", "x")).toThrow(SchemaError);
  });

  it("rejects a short row", () => {
    const good = "t,dx,dy,dz,dvx_state,dvy_state,dvz_state\n";
    expect(() => parseTrajCsv(good + "0,1,2\n", "x")).toThrow(/expected 7 fields/);
  });

  it("rejects non-numeric fields", () => {
    const good = "t,dx,dy,dz,dvx_state,dvy_state,dvz_state\n";
    expect(() => parseTrajCsv(good + "0,1,2,3,4,five,6\n", "x")).toThrow(/not a finite number/);
  });
});

describe("burns csv", () => {
  it("parses the golden run and matches the norm column", () => {
    const rows = parseBurnsCsv(readFileSync(TD + "golden.burns.csv", "utf-8"), "burns");
    expect(rows.length).toBeGreaterThan(2);
    for (const r of rows) {
      const n = Math.hypot(...r.dv);
      expect(Math.abs(n - r.norm)).toBeLessThan(1e-9);
      expect(r.fuelAllocated).toBeGreaterThanOrEqual(r.norm - 1e-9);
    }
  });

  it("accepts a header-only file as zero burns", () => {
    expect(parseBurnsCsv("tau,dvx,dvy,dvz,norm,fuel_allocated\n", "x")).toEqual([]);
  });
});

describe("cam json", () => {
  it("parses the golden abort plans", () => {
    const cam = parseCamJson(readFileSync(TD + "golden.cam.json", "utf-8"), "cam");
    expect(cam.schema_version).toBe(1);
    for (const b of cam.burns) {
      expect(b.overall_safe).toBe(true);
      expect(b.coast_arc?.length).toBe(65);
      expect(b.modes_feasible).toBe(b.n_modes);
    }
  });

  it("rejects unknown fields (fail closed)", () => {
    const doc = JSON.parse(readFileSync(TD + "golden.cam.json", "utf-8"));
    doc.burns[0].surprise = 1;
    expect(() => parseCamJson(JSON.stringify(doc), "cam")).toThrow(SchemaError);
  });

  it("rejects invalid json", () => {
    expect(() => parseCamJson("{oops", "cam")).toThrow(/not valid JSON/);
  });
});

describe("sweep csv", () => {
  it("parses the 45-cell fixture", () => {
    const rows = parseSweepCsv(readFileSync(TD + "sweep45.csv", "utf-8"), "sweep");
    expect(rows.length).toBe(45);
    expect(rows.every((r) => r.outcome === "success")).toBe(true);
  });

  it("allows empty cost on failed cells", () => {
    const text = "n,j_bar,smoothed,cost_mps,online_seconds,outcome\n100,0.3,false,,1.5,failure\n";
    const rows = parseSweepCsv(text, "sweep");
    expect(rows[0].costMps).toBeNull();
  });

  it("rejects bad smoothed flags", () => {
    const text = "n,j_bar,smoothed,cost_mps,online_seconds,outcome\n100,0.3,maybe,1,1,success\n";
    expect(() => parseSweepCsv(text, "sweep")).toThrow(/smoothed/);
  });
});
