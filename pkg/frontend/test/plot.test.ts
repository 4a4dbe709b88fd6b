import { readFileSync } from "node:fs";

import { describe, expect, it } from "vitest";

import { parseResultsCsv } from "../src/csv.js";
import { finalVsDelaySeries, render } from "../src/plot.js";

const FIXTURE = readFileSync(new URL("fixtures/results.csv", import.meta.url), "utf8");
const rows = parseResultsCsv(FIXTURE);

const HEADER =
  "cell_id,policy,round,mean_cum_regret,se_cum_regret,mean_pending,coverage_rate";

function count(haystack: string, needle: string): number {
  return haystack.split(needle).length - 1;
}

describe("render regret_curves", () => {
  const svg = render({ rows, kind: "regret_curves" });

  it("emits one panel per cell and one series per policy", () => {
    expect(svg.startsWith("<svg")).toBe(true);
    expect(count(svg, '<g class="panel">')).toBe(6);
    expect(count(svg, "<polyline")).toBe(6 * 2); // legend swatches are <line>, not <polyline>
  });

  it("labels both policies in each legend", () => {
    expect(count(svg, ">delayed_ofu_glm</text>")).toBe(6);
    expect(count(svg, ">random</text>")).toBe(6);
  });

  it("draws one SE band per series", () => {
    expect(count(svg, 'fill-opacity="0.25"')).toBe(12);
  });

  it("is a pure function of the rows", () => {
    expect(render({ rows, kind: "regret_curves" })).toBe(svg);
  });

  it("honors cell and policy filters", () => {
    const filtered = render({
      rows,
      kind: "regret_curves",
      cells: ["c00_d3_identity_exponential5"],
      policies: ["random"],
    });
    expect(count(filtered, '<g class="panel">')).toBe(1);
    expect(count(filtered, ">random</text>")).toBe(1);
    expect(filtered).not.toContain(">delayed_ofu_glm</text>");
  });

  it("rejects an empty selection", () => {
    expect(() => render({ rows, kind: "regret_curves", cells: ["absent"] })).toThrow(
      /empty selection/,
    );
  });

  it("rejects unknown figure kinds", () => {
    expect(() => render({ rows, kind: "pie" as never })).toThrow(/unknown figure kind/);
  });

  it("renders a zero-width band from a single-run CSV", () => {
    const single = parseResultsCsv(
      `${HEADER}\n` +
        "c00_d2_identity_zero0,p,1,1.0,0.0,0.0,1.0\n" +
        "c00_d2_identity_zero0,p,2,2.0,0.0,0.0,1.0\n",
    );
    const out = render({ rows: single, kind: "regret_curves" });
    const band = /<path [^>]*d="([^"]+)"/.exec(out);
    expect(band).not.toBeNull();
    // upper edge equals lower edge point-for-point: the polygon closes on itself
    const coords = band![1]!
      .replace(/[MLZ]/g, "")
      .trim()
      .split(/\s+/)
      .map(Number);
    const pts: Array<[number, number]> = [];
    for (let i = 0; i < coords.length; i += 2) pts.push([coords[i]!, coords[i + 1]!]);
    const n = pts.length;
    for (let i = 0; i < n / 2; i++) {
      expect(pts[i]).toEqual(pts[n - 1 - i]);
    }
  });
});

describe("finalVsDelaySeries", () => {
  const panels = finalVsDelaySeries(rows);

  it("groups cells by dimension, link, and delay kind", () => {
    expect([...panels.keys()]).toEqual(["d3 identity exponential", "d3 identity pareto"]);
  });

  it("orders each series by expected delay", () => {
    const exp = panels.get("d3 identity exponential")!;
    for (const policy of ["delayed_ofu_glm", "random"]) {
      const xs = exp.get(policy)!.map((p) => p.x);
      expect(xs).toEqual([5, 10, 15, 20]); // 4-point line, ascending
    }
  });

  it("converts pareto means to expected delays", () => {
    const par = panels.get("d3 identity pareto")!;
    expect(par.get("random")!.map((p) => p.x)).toEqual([5, 10]);
  });

  it("keeps only the final recorded round", () => {
    const exp = panels.get("d3 identity exponential")!;
    const final = rows
      .filter((r) => r.cellId === "c00_d3_identity_exponential5" && r.policy === "random")
      .reduce((a, b) => (a.round > b.round ? a : b));
    expect(exp.get("random")![0]!.mean).toBe(final.meanCumRegret);
  });
});

describe("render final_vs_delay", () => {
  it("draws a marker per delay cell and a panel per group", () => {
    const svg = render({ rows, kind: "final_vs_delay" });
    expect(count(svg, '<g class="panel">')).toBe(2);
    // 2 policies x (4 exponential + 2 pareto) points
    expect(count(svg, "<circle")).toBe(12);
    expect(render({ rows, kind: "final_vs_delay" })).toBe(svg);
  });
});
