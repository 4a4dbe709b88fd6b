/**
 * Figure rendering. Two kinds:
 *
 * - regret_curves: one panel per cell, mean cumulative regret per policy over
 *   rounds with a +-1 SE band.
 * - final_vs_delay: one panel per (d, link, delay kind) group, final-round
 *   regret per policy against the expected delay, points sorted x-ascending.
 *
 * Rendering is a pure function of the parsed rows; the SVG has fixed styling
 * and no timestamps, so identical CSV input gives identical bytes.
 */

import { type ResultRow, parseCellId, uniqueInOrder } from "./csv.js";
import {
  type Frame,
  bandPath,
  circle,
  document as svgDocument,
  line,
  polyline,
  scaleX,
  scaleY,
  text,
  tickLabel,
  ticks,
} from "./svg.js";

export type FigureKind = "regret_curves" | "final_vs_delay";

export interface PlotJob {
  rows: ResultRow[];
  kind: FigureKind;
  cells?: string[];
  policies?: string[];
}

export interface SeriesPoint {
  x: number;
  mean: number;
  se: number;
}

const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
  "#17becf",
  "#7f7f7f",
];

const PANEL_W = 360;
const PANEL_H = 250;
const MARGIN = { left: 60, right: 14, top: 30, bottom: 44 };
const COLS = 3;

function applyFilters(job: PlotJob): ResultRow[] {
  let rows = job.rows;
  if (job.cells && job.cells.length > 0) {
    const keep = new Set(job.cells);
    rows = rows.filter((r) => keep.has(r.cellId));
  }
  if (job.policies && job.policies.length > 0) {
    const keep = new Set(job.policies);
    rows = rows.filter((r) => keep.has(r.policy));
  }
  if (rows.length === 0) throw new Error("empty selection after cell/policy filters");
  return rows;
}

/**
 * Final-round points grouped into panels keyed by "d<d> <link> <delay kind>".
 * Exposed separately so the x-ordering and delay-mean decoding are testable
 * without parsing path data out of the SVG.
 */
export function finalVsDelaySeries(
  rows: ResultRow[],
): Map<string, Map<string, SeriesPoint[]>> {
  const finalRound = new Map<string, number>();
  for (const r of rows) {
    const t = finalRound.get(r.cellId);
    if (t === undefined || r.round > t) finalRound.set(r.cellId, r.round);
  }
  const panels = new Map<string, Map<string, SeriesPoint[]>>();
  for (const r of rows) {
    if (r.round !== finalRound.get(r.cellId)) continue;
    const info = parseCellId(r.cellId);
    const key = `d${info.d} ${info.link} ${info.delayKind}`;
    let panel = panels.get(key);
    if (!panel) panels.set(key, (panel = new Map()));
    let series = panel.get(r.policy);
    if (!series) panel.set(r.policy, (series = []));
    series.push({ x: info.analyticDelayMean, mean: r.meanCumRegret, se: r.seCumRegret });
  }
  for (const panel of panels.values()) {
    for (const series of panel.values()) {
      series.sort((a, b) => a.x - b.x);
    }
  }
  return panels;
}

interface PanelSpec {
  title: string;
  xLabel: string;
  yLabel: string;
  series: Map<string, SeriesPoint[]>;
  markers: boolean;
  xFromZero: boolean;
}

function panelFrame(col: number, row: number): Frame {
  return {
    x0: col * PANEL_W + MARGIN.left,
    y0: row * PANEL_H + MARGIN.top,
    width: PANEL_W - MARGIN.left - MARGIN.right,
    height: PANEL_H - MARGIN.top - MARGIN.bottom,
    xMin: 0,
    xMax: 1,
    yMin: 0,
    yMax: 1,
  };
}

function renderPanel(spec: PanelSpec, col: number, row: number, colors: Map<string, string>): string {
  const f = panelFrame(col, row);
  const all = [...spec.series.values()].flat();
  const xs = all.map((p) => p.x);
  f.xMin = spec.xFromZero ? 0 : Math.min(...xs);
  f.xMax = Math.max(...xs);
  f.yMin = 0;
  f.yMax = Math.max(...all.map((p) => p.mean + p.se), 1e-9);

  const parts: string[] = [];
  // axes
  parts.push(line(f.x0, f.y0, f.x0, f.y0 + f.height, "#444"));
  parts.push(line(f.x0, f.y0 + f.height, f.x0 + f.width, f.y0 + f.height, "#444"));
  for (const tx of ticks(f.xMin, f.xMax)) {
    const px = scaleX(f, tx);
    parts.push(line(px, f.y0 + f.height, px, f.y0 + f.height + 4, "#444"));
    parts.push(text(px, f.y0 + f.height + 16, tickLabel(tx), "middle", 10));
  }
  for (const ty of ticks(f.yMin, f.yMax)) {
    const py = scaleY(f, ty);
    parts.push(line(f.x0 - 4, py, f.x0, py, "#444"));
    parts.push(text(f.x0 - 7, py + 3, tickLabel(ty), "end", 10));
  }
  parts.push(text(f.x0 + f.width / 2, f.y0 + f.height + 32, spec.xLabel, "middle"));
  parts.push(
    `<g transform="rotate(-90 ${f.x0 - 44} ${f.y0 + f.height / 2})">` +
      text(f.x0 - 44, f.y0 + f.height / 2, spec.yLabel, "middle") +
      `</g>`,
  );
  parts.push(text(f.x0 + f.width / 2, f.y0 - 10, spec.title, "middle"));

  // bands first so every mean line stays on top
  for (const [policy, series] of spec.series) {
    const color = colors.get(policy)!;
    const upper = series.map((p): [number, number] => [scaleX(f, p.x), scaleY(f, p.mean + p.se)]);
    const lower = series.map((p): [number, number] => [scaleX(f, p.x), scaleY(f, p.mean - p.se)]);
    parts.push(bandPath(upper, lower, color));
  }
  for (const [policy, series] of spec.series) {
    const color = colors.get(policy)!;
    const pts = series.map((p): [number, number] => [scaleX(f, p.x), scaleY(f, p.mean)]);
    parts.push(polyline(pts, color));
    if (spec.markers) {
      for (const [px, py] of pts) parts.push(circle(px, py, 2.5, color));
    }
  }

  // legend: one entry per policy, upper left of the data area
  let ly = f.y0 + 12;
  for (const [policy] of spec.series) {
    const color = colors.get(policy)!;
    parts.push(line(f.x0 + 8, ly - 3, f.x0 + 28, ly - 3, color));
    parts.push(text(f.x0 + 33, ly, policy, "start", 10));
    ly += 14;
  }
  return `<g class="panel">${parts.join("")}</g>`;
}

export function render(job: PlotJob): string {
  if (job.kind !== "regret_curves" && job.kind !== "final_vs_delay") {
    throw new Error(`unknown figure kind: ${job.kind}`);
  }
  const rows = applyFilters(job);
  const policyOrder = uniqueInOrder(rows.map((r) => r.policy));
  const colors = new Map(policyOrder.map((p, i) => [p, PALETTE[i % PALETTE.length]!]));

  const specs: PanelSpec[] = [];
  if (job.kind === "regret_curves") {
    for (const cellId of uniqueInOrder(rows.map((r) => r.cellId))) {
      const series = new Map<string, SeriesPoint[]>();
      for (const policy of policyOrder) {
        const pts = rows
          .filter((r) => r.cellId === cellId && r.policy === policy)
          .map((r): SeriesPoint => ({ x: r.round, mean: r.meanCumRegret, se: r.seCumRegret }))
          .sort((a, b) => a.x - b.x);
        if (pts.length > 0) series.set(policy, pts);
      }
      specs.push({
        title: cellId,
        xLabel: "round",
        yLabel: "cumulative regret",
        series,
        markers: false,
        xFromZero: true,
      });
    }
  } else {
    for (const [key, panel] of finalVsDelaySeries(rows)) {
      specs.push({
        title: key,
        xLabel: "expected delay",
        yLabel: "final regret",
        series: panel,
        markers: true,
        xFromZero: false,
      });
    }
  }

  const cols = Math.min(COLS, specs.length);
  const rowsCount = Math.ceil(specs.length / cols);
  const body = specs
    .map((spec, i) => renderPanel(spec, i % cols, Math.floor(i / cols), colors))
    .join("");
  return svgDocument(cols * PANEL_W + 10, rowsCount * PANEL_H + 10, body);
}
