#!/usr/bin/env node
/**
 * plot --csv <file> --kind <regret_curves|final_vs_delay> --out <img>
 *      [--cells id ...] [--policies name ...]
 *
 * Reads a results CSV, renders one SVG, writes it to --out. Repeatable flags
 * and comma-separated values both work for the filters.
 */

import { readFileSync, realpathSync, writeFileSync } from "node:fs";
import { pathToFileURL } from "node:url";
import { parseArgs } from "node:util";

import { parseResultsCsv } from "./csv.js";
import { type FigureKind, render } from "./plot.js";

function splitList(values: string[] | undefined): string[] | undefined {
  if (!values) return undefined;
  const flat = values.flatMap((v) => v.split(",")).map((v) => v.trim()).filter(Boolean);
  return flat.length > 0 ? flat : undefined;
}

export function run(argv: string[]): number {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      options: {
        csv: { type: "string" },
        kind: { type: "string" },
        out: { type: "string" },
        cells: { type: "string", multiple: true },
        policies: { type: "string", multiple: true },
      },
      allowPositionals: false,
    });
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
  const { csv, kind, out, cells, policies } = parsed.values;
  if (!csv || !kind || !out) {
    console.error("usage: plot --csv <file> --kind <k> --out <img> [--cells ...] [--policies ...]");
    return 1;
  }
  if (kind !== "regret_curves" && kind !== "final_vs_delay") {
    console.error(`error: unknown figure kind: ${kind} (use regret_curves or final_vs_delay)`);
    return 1;
  }
  try {
    const rows = parseResultsCsv(readFileSync(csv, "utf8"));
    const image = render({
      rows,
      kind: kind as FigureKind,
      cells: splitList(cells),
      policies: splitList(policies),
    });
    writeFileSync(out, image);
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
  console.log(`wrote ${out}`);
  return 0;
}

const invokedPath = process.argv[1] ? pathToFileURL(realpathSync(process.argv[1])).href : "";
if (import.meta.url === invokedPath) {
  process.exit(run(process.argv.slice(2)));
}
