/**
 * Minimal deterministic SVG chart primitives: two renders of the same data
 * are byte-identical (fixed precision, no timestamps, no randomness).
 */

export interface Scale {
  (value: number): number;
  ticks: number[];
}

export const WIDTH = 640;
export const HEIGHT = 420;
export const MARGIN = { left: 64, right: 16, top: 40, bottom: 48 };

export const SERIES_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

const fmt = (x: number): string => {
  if (!Number.isFinite(x)) return "0";
  return x.toFixed(2).replace(/-0\.00/, "0.00");
};

export function niceTicks(lo: number, hi: number, count = 6): number[] {
  if (!(hi > lo)) return [lo];
  const span = hi - lo;
  const step0 = span / Math.max(count - 1, 1);
  const mag = 10 ** Math.floor(Math.log10(step0));
  const step = [1, 2, 2.5, 5, 10].map((m) => m * mag).find((s) => span / s <= count) ?? mag * 10;
  const start = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let v = start; v <= hi + 1e-12 * span; v += step) {
    ticks.push(Math.abs(v) < step * 1e-9 ? 0 : v);
  }
  return ticks;
}

export function linearScale(lo: number, hi: number, outLo: number, outHi: number): Scale {
  const span = hi - lo || 1;
  const scale = ((value: number) =>
    outLo + ((value - lo) / span) * (outHi - outLo)) as Scale;
  scale.ticks = niceTicks(lo, hi);
  return scale;
}

export function logScale(lo: number, hi: number, outLo: number, outHi: number): Scale {
  const llo = Math.log10(lo);
  const lhi = Math.log10(hi);
  const span = lhi - llo || 1;
  const scale = ((value: number) =>
    outLo + ((Math.log10(value) - llo) / span) * (outHi - outLo)) as Scale;
  const ticks: number[] = [];
  for (let d = Math.ceil(llo - 1e-9); d <= Math.floor(lhi + 1e-9); d++) {
    ticks.push(10 ** d);
  }
  scale.ticks = ticks.length >= 2 ? ticks : [lo, hi];
  return scale;
}

export function polyline(xs: number[], ys: number[], color: string, width = 1.5, dash = ""): string {
  const points = xs.map((x, i) => `${fmt(x)},${fmt(ys[i])}`).join(" ");
  const dashAttr = dash ? ` stroke-dasharray="${dash}"` : "";
  return `<polyline fill="none" stroke="${color}" stroke-width="${width}"${dashAttr} points="${points}"/>`;
}

export function bandPolygon(xs: number[], upper: number[], lower: number[], color: string): string {
  const forward = xs.map((x, i) => `${fmt(x)},${fmt(upper[i])}`);
  const backward = xs.map((x, i) => `${fmt(x)},${fmt(lower[i])}`).reverse();
  return `<polygon fill="${color}" fill-opacity="0.25" stroke="none" points="${forward.concat(backward).join(" ")}"/>`;
}

export function circles(xs: number[], ys: number[], color: string, radius = 3.5): string {
  return xs
    .map((x, i) => `<circle cx="${fmt(x)}" cy="${fmt(ys[i])}" r="${radius}" fill="${color}"/>`)
    .join("");
}

export function text(
  x: number,
  y: number,
  content: string,
  options: { anchor?: string; size?: number; color?: string } = {},
): string {
  const anchor = options.anchor ?? "start";
  const size = options.size ?? 12;
  const color = options.color ?? "#222222";
  return (
    `<text x="${fmt(x)}" y="${fmt(y)}" font-family="Helvetica, Arial, sans-serif" ` +
    `font-size="${size}" fill="${color}" text-anchor="${anchor}">${escapeXml(content)}</text>`
  );
}

export function escapeXml(value: string): string {
  return value
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function tickLabel(value: number): string {
  if (value !== 0 && (Math.abs(value) >= 1e4 || Math.abs(value) < 1e-3)) {
    return value.toExponential(0).replace("+", "");
  }
  return Number(value.toPrecision(4)).toString();
}

export function axes(
  xScale: Scale,
  yScale: Scale,
  xLabel: string,
  yLabel: string,
  options: { xLog?: boolean; yLog?: boolean } = {},
): string {
  const parts: string[] = [];
  const x0 = MARGIN.left;
  const x1 = WIDTH - MARGIN.right;
  const y0 = HEIGHT - MARGIN.bottom;
  const y1 = MARGIN.top;
  parts.push(polyline([x0, x1], [y0, y0], "#222222", 1));
  parts.push(polyline([x0, x0], [y0, y1], "#222222", 1));
  for (const v of xScale.ticks) {
    const x = xScale(v);
    parts.push(polyline([x, x], [y0, y0 + 5], "#222222", 1));
    parts.push(text(x, y0 + 18, tickLabel(v), { anchor: "middle", size: 10 }));
  }
  for (const v of yScale.ticks) {
    const y = yScale(v);
    parts.push(polyline([x0 - 5, x0], [y, y], "#222222", 1));
    parts.push(text(x0 - 8, y + 3.5, tickLabel(v), { anchor: "end", size: 10 }));
  }
  parts.push(text((x0 + x1) / 2, HEIGHT - 12, xLabel, { anchor: "middle" }));
  parts.push(
    `<g transform="rotate(-90 16 ${(y0 + y1) / 2})">` +
      text(16, (y0 + y1) / 2, yLabel, { anchor: "middle" }) +
      "</g>",
  );
  return parts.join("\n");
}

export function document(title: string, body: string): string {
  return (
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
    `viewBox="0 0 ${WIDTH} ${HEIGHT}">\n` +
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="#ffffff"/>\n` +
    text(MARGIN.left, 22, title, { size: 14 }) +
    "\n" +
    body +
    "\n</svg>\n"
  );
}
