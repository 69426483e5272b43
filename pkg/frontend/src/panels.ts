/**
 * The three figure panels: labeled time series, the |delta|-vs-M log-log
 * slope fit, and mean/standard-error bands over instance runs.
 */
import { RunTable, SchemaError, column } from "./schema.js";
import { loglogFit, mean, meanStderr } from "./stats.js";
import {
  HEIGHT,
  MARGIN,
  SERIES_COLORS,
  WIDTH,
  axes,
  bandPolygon,
  circles,
  document,
  linearScale,
  logScale,
  polyline,
  text,
} from "./svg.js";

export interface LabeledTable {
  label: string;
  table: RunTable;
}

const PLOT_X0 = MARGIN.left;
const PLOT_X1 = WIDTH - MARGIN.right;
const PLOT_Y0 = HEIGHT - MARGIN.bottom;
const PLOT_Y1 = MARGIN.top;

function extent(values: number[]): [number, number] {
  const finite = values.filter(Number.isFinite);
  if (finite.length === 0) throw new SchemaError("no finite values to plot");
  return [Math.min(...finite), Math.max(...finite)];
}

function padded([lo, hi]: [number, number]): [number, number] {
  const pad = (hi - lo || Math.abs(hi) || 1) * 0.06;
  return [lo - pad, hi + pad];
}

function legend(labels: string[]): string {
  const parts: string[] = [];
  labels.forEach((label, i) => {
    const y = MARGIN.top + 14 + 16 * i;
    const x = PLOT_X1 - 150;
    parts.push(polyline([x, x + 22], [y - 4, y - 4], SERIES_COLORS[i % SERIES_COLORS.length], 2));
    parts.push(text(x + 28, y, label, { size: 11 }));
  });
  return parts.join("\n");
}

/** One observable column over layers, one curve per CSV. */
export function renderTimeseries(series: LabeledTable[], columnName: string): string {
  if (series.length === 0) throw new SchemaError("no input series");
  const allS = series.flatMap(({ table }) => column(table, "s"));
  const allY = series.flatMap(({ table }) => column(table, columnName));
  const xScale = linearScale(...extent(allS), PLOT_X0, PLOT_X1);
  const yScale = linearScale(...padded(extent(allY)), PLOT_Y0, PLOT_Y1);
  const body: string[] = [axes(xScale, yScale, "layer s", columnName)];
  series.forEach(({ table }, i) => {
    const xs = column(table, "s").map(xScale);
    const ys = column(table, columnName).map(yScale);
    body.push(polyline(xs, ys, SERIES_COLORS[i % SERIES_COLORS.length], 1.8));
  });
  body.push(legend(series.map((s) => s.label)));
  return document(`${columnName} per layer`, body.join("\n"));
}

/**
 * Time-averaged |delta| against trajectory count on log-log axes with the
 * fitted slope annotated.  Input: one run CSV per trajectory count.
 */
export function renderLoglogSlope(points: { m: number; table: RunTable }[]): {
  svg: string;
  slope: number;
} {
  if (points.length < 2) throw new SchemaError("need at least two sweep points");
  const ms = points.map((p) => p.m);
  const deltas = points.map(({ table }) => {
    const values = column(table, "delta").slice(1).map(Math.abs);
    return mean(values);
  });
  const { slope, intercept } = loglogFit(ms, deltas);
  const xScale = logScale(Math.min(...ms) / 1.3, Math.max(...ms) * 1.3, PLOT_X0, PLOT_X1);
  const [dLo, dHi] = extent(deltas);
  const yScale = logScale(dLo / 1.5, dHi * 1.5, PLOT_Y0, PLOT_Y1);
  const body: string[] = [
    axes(xScale, yScale, "trajectories M", "time-averaged |delta|", { xLog: true, yLog: true }),
  ];
  const fitY = ms.map((m) => Math.exp(intercept + slope * Math.log(m)));
  body.push(polyline(ms.map(xScale), fitY.map(yScale), "#888888", 1.2, "5,4"));
  body.push(circles(ms.map(xScale), deltas.map(yScale), SERIES_COLORS[0]));
  body.push(
    text(PLOT_X1 - 10, MARGIN.top + 14, `slope = ${slope.toFixed(2)}`, {
      anchor: "end",
      size: 13,
    }),
  );
  return { svg: document("Monte Carlo scaling of the trace error", body.join("\n")), slope };
}

/** Mean curve with a standard-error band across instance CSVs. */
export function renderEnsembleBand(tables: RunTable[], columnName: string): string {
  if (tables.length < 2) throw new SchemaError("need at least two instance runs for a band");
  const layers = column(tables[0], "s");
  for (const table of tables.slice(1)) {
    if (column(table, "s").length !== layers.length) {
      throw new SchemaError("instance runs have different layer counts");
    }
  }
  const means: number[] = [];
  const stderrs: number[] = [];
  for (let i = 0; i < layers.length; i++) {
    const { mean: m, stderr } = meanStderr(tables.map((t) => column(t, columnName)[i]));
    means.push(m);
    stderrs.push(stderr);
  }
  const upper = means.map((m, i) => m + stderrs[i]);
  const lower = means.map((m, i) => m - stderrs[i]);
  const xScale = linearScale(...extent(layers), PLOT_X0, PLOT_X1);
  const yScale = linearScale(...padded(extent([...upper, ...lower])), PLOT_Y0, PLOT_Y1);
  const body: string[] = [
    axes(xScale, yScale, "layer s", `${columnName} (mean over ${tables.length} instances)`),
    bandPolygon(layers.map(xScale), upper.map(yScale), lower.map(yScale), SERIES_COLORS[0]),
    polyline(layers.map(xScale), means.map(yScale), SERIES_COLORS[0], 1.8),
  ];
  return document(`${columnName} with standard-error band`, body.join("\n"));
}
