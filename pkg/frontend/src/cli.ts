#!/usr/bin/env node
/**
 * Figure CLI: one subcommand per panel kind.
 *
 *   nafqa-plots timeseries    --column r --out fig.svg Label=run.csv ...
 *   nafqa-plots loglog-slope  --out fig.svg 500=sweep_M500.csv 2000=...
 *   nafqa-plots ensemble-band --column r --out fig.svg instance*.csv
 *
 * Exit codes: 0 success, 2 usage or schema error.
 */
import { readFileSync, writeFileSync } from "fs";

import { parseRunCsv, SchemaError } from "./schema.js";
import { renderEnsembleBand, renderLoglogSlope, renderTimeseries } from "./panels.js";

interface Flags {
  out?: string;
  column: string;
  positional: string[];
}

function parseFlags(argv: string[]): Flags {
  const flags: Flags = { column: "r", positional: [] };
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg === "--out") flags.out = argv[++i];
    else if (arg === "--column") flags.column = argv[++i];
    else if (arg.startsWith("--")) throw new SchemaError(`unknown flag '${arg}'`);
    else flags.positional.push(arg);
  }
  if (!flags.out) throw new SchemaError("--out is required");
  return flags;
}

function loadTable(path: string) {
  return parseRunCsv(readFileSync(path, "utf8"), path);
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  try {
    if (command === "timeseries") {
      const flags = parseFlags(rest);
      const series = flags.positional.map((spec) => {
        const eq = spec.indexOf("=");
        const label = eq >= 0 ? spec.slice(0, eq) : spec;
        const path = eq >= 0 ? spec.slice(eq + 1) : spec;
        return { label, table: loadTable(path) };
      });
      writeFileSync(flags.out!, renderTimeseries(series, flags.column));
    } else if (command === "loglog-slope") {
      const flags = parseFlags(rest);
      const points = flags.positional.map((spec) => {
        const eq = spec.indexOf("=");
        if (eq < 0) throw new SchemaError(`expected M=path, got '${spec}'`);
        const m = Number(spec.slice(0, eq));
        if (!Number.isFinite(m) || m <= 0) {
          throw new SchemaError(`bad trajectory count in '${spec}'`);
        }
        return { m, table: loadTable(spec.slice(eq + 1)) };
      });
      const { svg, slope } = renderLoglogSlope(points);
      writeFileSync(flags.out!, svg);
      console.log(`slope = ${slope.toFixed(4)}`);
    } else if (command === "ensemble-band") {
      const flags = parseFlags(rest);
      const tables = flags.positional.map(loadTable);
      writeFileSync(flags.out!, renderEnsembleBand(tables, flags.column));
    } else {
      console.error(
        "usage: nafqa-plots <timeseries|loglog-slope|ensemble-band> --out FILE ...",
      );
      return 2;
    }
  } catch (err) {
    if (err instanceof SchemaError || (err as NodeJS.ErrnoException).code === "ENOENT") {
      console.error(`error: ${(err as Error).message}`);
      return 2;
    }
    throw err;
  }
  return 0;
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  process.exit(main(process.argv.slice(2)));
}
