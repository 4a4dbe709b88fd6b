/**
 * Results-CSV parsing and cell-id decoding.
 *
 * The producer writes one row per (cell, policy, recorded round) with the
 * exact column set below, and encodes each cell's geometry and delay model
 * in its id, e.g. "c01_d5_identity_exponential100".
 */

import Papa from "papaparse";

export const REQUIRED_COLUMNS = [
  "cell_id",
  "policy",
  "round",
  "mean_cum_regret",
  "se_cum_regret",
  "mean_pending",
  "coverage_rate",
] as const;

export interface ResultRow {
  cellId: string;
  policy: string;
  round: number;
  meanCumRegret: number;
  seCumRegret: number;
  meanPending: number;
  coverageRate: number;
}

export interface CellInfo {
  d: number;
  link: string;
  delayKind: string;
  /** the model's mean parameter, as printed in the id */
  delayMean: number;
  /** expected delay: pareto delays sit on [1, inf), so its mean is 1 + parameter */
  analyticDelayMean: number;
}

const CELL_ID = /^c\d+_d(\d+)_([a-z]+)_([a-z]+)((?:\d|\.)[\d.eE+-]*)$/;

export function parseCellId(cellId: string): CellInfo {
  const m = CELL_ID.exec(cellId);
  if (!m) throw new Error(`malformed cell id: ${cellId}`);
  const delayKind = m[3]!;
  const delayMean = Number(m[4]);
  if (!Number.isFinite(delayMean)) throw new Error(`malformed cell id: ${cellId}`);
  return {
    d: Number(m[1]),
    link: m[2]!,
    delayKind,
    delayMean,
    analyticDelayMean: delayKind === "pareto" ? 1 + delayMean : delayMean,
  };
}

function toNumber(value: string | undefined, column: string, line: number): number {
  const x = Number(value);
  if (value === undefined || value.trim() === "" || !Number.isFinite(x)) {
    throw new Error(`row ${line}: column ${column} is not a finite number: ${value}`);
  }
  return x;
}

export function parseResultsCsv(text: string): ResultRow[] {
  const parsed = Papa.parse<Record<string, string>>(text, {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const e = parsed.errors[0]!;
    throw new Error(`CSV parse error at row ${e.row}: ${e.message}`);
  }
  const fields = parsed.meta.fields ?? [];
  const missing = REQUIRED_COLUMNS.filter((c) => !fields.includes(c));
  if (missing.length > 0) {
    throw new Error(`missing columns: ${missing.join(", ")}`);
  }
  return parsed.data.map((row, i) => ({
    cellId: row.cell_id ?? "",
    policy: row.policy ?? "",
    round: toNumber(row.round, "round", i + 2),
    meanCumRegret: toNumber(row.mean_cum_regret, "mean_cum_regret", i + 2),
    seCumRegret: toNumber(row.se_cum_regret, "se_cum_regret", i + 2),
    meanPending: toNumber(row.mean_pending, "mean_pending", i + 2),
    coverageRate: toNumber(row.coverage_rate, "coverage_rate", i + 2),
  }));
}

/** First-appearance order; the CSV's row order drives panel and color order. */
export function uniqueInOrder(values: string[]): string[] {
  const seen = new Set<string>();
  const out: string[] = [];
  for (const v of values) {
    if (!seen.has(v)) {
      seen.add(v);
      out.push(v);
    }
  }
  return out;
}
