/**
 * viz <view> --in <paths...> --out <svg path>
 *
 * Views:
 *   planar  --in traj.csv burns.csv [cam.json]
 *   3d      --in traj.csv burns.csv [cam.json]
 *   sweep   --in bench.csv
 *
 * Schema violations and malformed arguments exit nonzero with a message.
 * Output is SVG (deterministic for fixed inputs).
 */

import { readFileSync, writeFileSync } from "node:fs";

import { SchemaError, parseBurnsCsv, parseCamJson, parseSweepCsv, parseTrajCsv } from "./schemas.js";
import { renderIso, renderPlanar } from "./trajectory.js";
import { renderSweep } from "./sweep.js";

export interface CliArgs {
  view: "planar" | "3d" | "sweep";
  inputs: string[];
  out: string;
}

export function parseArgs(argv: string[]): CliArgs {
  const [view, ...rest] = argv;
  if (view !== "planar" && view !== "3d" && view !== "sweep") {
    throw new SchemaError(`unknown view ${JSON.stringify(view)}; expected planar | 3d | sweep`);
  }
  const inputs: string[] = [];
  let out: string | null = null;
  let mode: "none" | "in" | "out" = "none";
  for (const tok of rest) {
    if (tok === "--in") mode = "in";
    else if (tok === "--out") mode = "out";
    else if (mode === "in") inputs.push(tok);
    else if (mode === "out") {
      out = tok;
      mode = "none";
    } else throw new SchemaError(`unexpected argument ${tok}`);
  }
  if (!out) throw new SchemaError("missing --out <path>");
  if (!out.endsWith(".svg")) {
    throw new SchemaError("only .svg output is supported");
  }
  const want = view === "sweep" ? [1, 1] : [2, 3];
  if (inputs.length < want[0] || inputs.length > want[1]) {
    throw new SchemaError(`view ${view} expects ${want[0] === want[1] ? want[0] : `${want[0]}-${want[1]}`} --in paths, got ${inputs.length}`);
  }
  return { view, inputs, out };
}

export function run(args: CliArgs): string {
  if (args.view === "sweep") {
    const rows = parseSweepCsv(readFileSync(args.inputs[0], "utf-8"), args.inputs[0]);
    const res = renderSweep(rows);
    if (res.clipped > 0) {
      throw new SchemaError(`internal: ${res.clipped} points fell outside the plot area`);
    }
    return res.svg;
  }
  const traj = parseTrajCsv(readFileSync(args.inputs[0], "utf-8"), args.inputs[0]);
  const burns = parseBurnsCsv(readFileSync(args.inputs[1], "utf-8"), args.inputs[1]);
  const cam = args.inputs.length > 2
    ? parseCamJson(readFileSync(args.inputs[2], "utf-8"), args.inputs[2])
    : null;
  return args.view === "planar" ? renderPlanar(traj, burns, cam) : renderIso(traj, burns, cam);
}

export function main(argv: string[]): number {
  try {
    const args = parseArgs(argv);
    const svg = run(args);
    writeFileSync(args.out, svg, "utf-8");
    console.log(`wrote ${args.out}`);
    return 0;
  } catch (err) {
    if (err instanceof SchemaError || err instanceof Error) {
      console.error(`viz: ${(err as Error).message}`);
      return 1;
    }
    throw err;
  }
}

const invokedDirectly = process.argv[1] && process.argv[1].endsWith("cli.js");
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
