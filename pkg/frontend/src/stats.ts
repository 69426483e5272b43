/** Small statistics helpers shared by the panels. */

export function mean(values: number[]): number {
  if (values.length === 0) return 0;
  return values.reduce((a, b) => a + b, 0) / values.length;
}

export function meanStderr(values: number[]): { mean: number; stderr: number } {
  const m = mean(values);
  if (values.length < 2) return { mean: m, stderr: 0 };
  const variance =
    values.reduce((a, b) => a + (b - m) ** 2, 0) / (values.length - 1);
  return { mean: m, stderr: Math.sqrt(variance / values.length) };
}

/** Ordinary least squares slope of y against x. */
export function olsSlope(xs: number[], ys: number[]): number {
  if (xs.length !== ys.length || xs.length < 2) {
    throw new Error("need at least two matched points for a slope");
  }
  const mx = mean(xs);
  const my = mean(ys);
  let num = 0;
  let den = 0;
  for (let i = 0; i < xs.length; i++) {
    num += (xs[i] - mx) * (ys[i] - my);
    den += (xs[i] - mx) ** 2;
  }
  return num / den;
}

/** OLS slope on log-log axes, with the matching intercept for the fit line. */
export function loglogFit(
  xs: number[],
  ys: number[],
): { slope: number; intercept: number } {
  const lx = xs.map(Math.log);
  const ly = ys.map(Math.log);
  const slope = olsSlope(lx, ly);
  const intercept = mean(ly) - slope * mean(lx);
  return { slope, intercept };
}
