import { createHash } from "node:crypto";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { main, parseArgs, run } from "../src/cli.js";
import { parseBurnsCsv, parseCamJson, parseSweepCsv, parseTrajCsv } from "../src/schemas.js";
import { renderSweep } from "../src/sweep.js";
import { renderIso, renderPlanar } from "../src/trajectory.js";

const TD = new URL("../testdata/", import.meta.url).pathname;
const GOLDEN_HASHES = JSON.parse(readFileSync(TD + "golden_hashes.json", "utf-8"));

function sha256(s: string): string {
  return createHash("sha256").update(s, "utf-8").digest("hex");
}

function loadGolden() {
  return {
    traj: parseTrajCsv(readFileSync(TD + "golden.traj.csv", "utf-8"), "traj"),
    burns: parseBurnsCsv(readFileSync(TD + "golden.burns.csv", "utf-8"), "burns"),
    cam: parseCamJson(readFileSync(TD + "golden.cam.json", "utf-8"), "cam"),
  };
}

describe("planar figure", () => {
  it("one marker per burn row", () => {
    const { traj, burns, cam } = loadGolden();
    const svg = renderPlanar(traj, burns, cam);
    const markers = svg.match(/class="burn-marker"/g) ?? [];
    expect(markers.length).toBe(burns.length);
  });

  it("empty burns file gives a trajectory-only figure", () => {
    const { traj, cam } = loadGolden();
    const svg = renderPlanar(traj, [], cam);
    expect(svg).toContain("<polyline");
    expect(svg.match(/class="burn-marker"/g)).toBeNull();
  });

  it("golden hash is stable across renders", () => {
    const { traj, burns, cam } = loadGolden();
    const a = renderPlanar(traj, burns, cam);
    const b = renderPlanar(traj, burns, cam);
    expect(sha256(a)).toBe(sha256(b));
    expect(sha256(a)).toBe(GOLDEN_HASHES.planar);
  });
});

describe("isometric figure", () => {
  it("renders with markers and matches the golden hash", () => {
    const { traj, burns, cam } = loadGolden();
    const svg = renderIso(traj, burns, cam);
    expect((svg.match(/class="burn-marker"/g) ?? []).length).toBe(burns.length);
    expect(sha256(svg)).toBe(GOLDEN_HASHES.iso);
  });
});

describe("sweep figure", () => {
  it("plots all 45 cells with both smoothing states in the legend", () => {
    const rows = parseSweepCsv(readFileSync(TD + "sweep45.csv", "utf-8"), "sweep");
    const res = renderSweep(rows);
    expect(res.plotted).toBe(45);
    expect(res.clipped).toBe(0);
    expect(res.svg).toContain("unsmoothed");
    expect(res.svg).toContain("smoothed");
    expect(sha256(res.svg)).toBe(GOLDEN_HASHES.sweep45);
  });

  it("no point is clipped by the axes (bounding-box assertion)", () => {
    const rows = parseSweepCsv(readFileSync(TD + "sweep45.csv", "utf-8"), "sweep");
    const res = renderSweep(rows);
    const circles = [...res.svg.matchAll(/<circle cx="([\d.-]+)" cy="([\d.-]+)" r="[\d.]+" class="pt"/g)];
    const rects = [...res.svg.matchAll(/<rect class="pt" x="([\d.-]+)" y="([\d.-]+)"/g)];
    expect(circles.length + rects.length).toBe(45);
    for (const m of circles) {
      expect(Number(m[1])).toBeGreaterThanOrEqual(70);
      expect(Number(m[1])).toBeLessThanOrEqual(860 - 170);
      expect(Number(m[2])).toBeGreaterThanOrEqual(30);
      expect(Number(m[2])).toBeLessThanOrEqual(600 - 52);
    }
  });

  it("a single-row csv yields a single point", () => {
    const text = "n,j_bar,smoothed,cost_mps,online_seconds,outcome\n400,0.3,false,0.8,1.25,success\n";
    const res = renderSweep(parseSweepCsv(text, "sweep"));
    expect(res.plotted).toBe(1);
  });
});

describe("cli", () => {
  it("parses arguments", () => {
    const args = parseArgs(["planar", "--in", "a.csv", "b.csv", "c.json", "--out", "o.svg"]);
    expect(args.view).toBe("planar");
    expect(args.inputs).toEqual(["a.csv", "b.csv", "c.json"]);
  });

  it("rejects bad views, missing output, and non-svg output", () => {
    expect(() => parseArgs(["volumetric", "--out", "o.svg"])).toThrow(/unknown view/);
    expect(() => parseArgs(["sweep", "--in", "x.csv"])).toThrow(/--out/);
    expect(() => parseArgs(["sweep", "--in", "x.csv", "--out", "o.png"])).toThrow(/svg/);
  });

  it("writes the figure end to end and exits zero", () => {
    const dir = mkdtempSync(join(tmpdir(), "viz-"));
    const out = join(dir, "fig.svg");
    const rc = main([
      "planar",
      "--in", TD + "golden.traj.csv", TD + "golden.burns.csv", TD + "golden.cam.json",
      "--out", out,
    ]);
    expect(rc).toBe(0);
    expect(readFileSync(out, "utf-8")).toContain("<svg");
  });

  it("schema violations exit nonzero", () => {
    const dir = mkdtempSync(join(tmpdir(), "viz-"));
    const bad = join(dir, "bad.csv");
    writeFileSync(bad, "not,a,real,header\n1,2,3,4\n");
    const rc = main(["sweep", "--in", bad, "--out", join(dir, "o.svg")]);
    expect(rc).toBe(1);
    const rc2 = main(["planar", "--in", bad, bad, "--out", join(dir, "o.svg")]);
    expect(rc2).toBe(1);
  });
});
