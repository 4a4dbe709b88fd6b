/**
 * Minimal deterministic SVG assembly: plain string building, fixed styling,
 * no timestamps or ids, so one input always yields one byte sequence.
 */

export interface Frame {
  /** pixel box of the data area */
  x0: number;
  y0: number;
  width: number;
  height: number;
  /** data ranges */
  xMin: number;
  xMax: number;
  yMin: number;
  yMax: number;
}

/** Round to 2 decimals; enough for pixel work and keeps files small. */
export function fmt(x: number): string {
  const r = Math.round(x * 100) / 100;
  // normalize -0 so mirrored geometry can't differ in sign only
  return (Object.is(r, -0) ? 0 : r).toString();
}

export function esc(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function scaleX(f: Frame, x: number): number {
  const span = f.xMax - f.xMin || 1;
  return f.x0 + ((x - f.xMin) / span) * f.width;
}

export function scaleY(f: Frame, y: number): number {
  const span = f.yMax - f.yMin || 1;
  return f.y0 + f.height - ((y - f.yMin) / span) * f.height;
}

export function polyline(points: Array<[number, number]>, stroke: string, width = 1.5): string {
  const pts = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
  return `<polyline fill="none" stroke="${stroke}" stroke-width="${width}" points="${pts}"/>`;
}

/** Closed band: forward along the upper edge, back along the lower. */
export function bandPath(
  upper: Array<[number, number]>,
  lower: Array<[number, number]>,
  fill: string,
): string {
  const fwd = upper.map(([x, y], i) => `${i === 0 ? "M" : "L"}${fmt(x)} ${fmt(y)}`);
  const back = [...lower].reverse().map(([x, y]) => `L${fmt(x)} ${fmt(y)}`);
  return `<path fill="${fill}" fill-opacity="0.25" stroke="none" d="${[...fwd, ...back].join(" ")} Z"/>`;
}

export function circle(x: number, y: number, r: number, fill: string): string {
  return `<circle cx="${fmt(x)}" cy="${fmt(y)}" r="${fmt(r)}" fill="${fill}"/>`;
}

export function text(
  x: number,
  y: number,
  s: string,
  anchor: "start" | "middle" | "end" = "start",
  size = 11,
): string {
  return (
    `<text x="${fmt(x)}" y="${fmt(y)}" font-family="Helvetica,Arial,sans-serif" ` +
    `font-size="${size}" text-anchor="${anchor}" fill="#222">${esc(s)}</text>`
  );
}

export function line(x1: number, y1: number, x2: number, y2: number, stroke = "#999"): string {
  return `<line x1="${fmt(x1)}" y1="${fmt(y1)}" x2="${fmt(x2)}" y2="${fmt(y2)}" stroke="${stroke}" stroke-width="1"/>`;
}

/** Evenly spaced ticks including both ends. */
export function ticks(min: number, max: number, n = 4): number[] {
  if (max <= min) return [min];
  const out: number[] = [];
  for (let i = 0; i <= n; i++) out.push(min + ((max - min) * i) / n);
  return out;
}

/** Compact tick label: integers as-is, large values in thousands. */
export function tickLabel(x: number): string {
  if (Math.abs(x) >= 10_000) return `${fmt(x / 1000)}k`;
  if (Number.isInteger(x)) return x.toString();
  return fmt(x);
}

export function document(width: number, height: number, body: string): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}">` +
    `<rect width="${width}" height="${height}" fill="#ffffff"/>` +
    body +
    `</svg>\n`
  );
}
