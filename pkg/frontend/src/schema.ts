/**
 * Parsing and validation of run CSVs.
 *
 * The fixed column contract is: s, t, r, phi, purity, trace, delta, beta,
 * followed by zero or more gamma_<PauliString> columns.
 */

export const REQUIRED_COLUMNS = [
  "s",
  "t",
  "r",
  "phi",
  "purity",
  "trace",
  "delta",
  "beta",
] as const;

const GAMMA_PATTERN = /^gamma_[IXYZ]+$/;

export class SchemaError extends Error {}

export interface RunTable {
  columns: string[];
  gammaColumns: string[];
  rows: Record<string, number>[];
}

export function validateHeader(columns: string[]): string[] {
  for (let i = 0; i < REQUIRED_COLUMNS.length; i++) {
    if (columns[i] !== REQUIRED_COLUMNS[i]) {
      throw new SchemaError(
        `missing or misplaced required column '${REQUIRED_COLUMNS[i]}'` +
          (columns[i] !== undefined ? ` (found '${columns[i]}')` : ""),
      );
    }
  }
  const extras = columns.slice(REQUIRED_COLUMNS.length);
  for (const name of extras) {
    if (!GAMMA_PATTERN.test(name)) {
      throw new SchemaError(`unexpected column '${name}'`);
    }
  }
  return extras;
}

export function parseRunCsv(text: string, source = "<csv>"): RunTable {
  const lines = text.split(/\r?\n/).filter((line) => line.trim() !== "");
  if (lines.length < 2) {
    throw new SchemaError(`${source}: need a header row and at least one data row`);
  }
  const columns = lines[0].split(",").map((c) => c.trim());
  const gammaColumns = validateHeader(columns);
  const rows: Record<string, number>[] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== columns.length) {
      throw new SchemaError(
        `${source}: row ${i} has ${cells.length} cells, header has ${columns.length}`,
      );
    }
    const row: Record<string, number> = {};
    for (let j = 0; j < columns.length; j++) {
      const value = Number(cells[j]);
      if (Number.isNaN(value) && cells[j].trim() !== "nan") {
        throw new SchemaError(`${source}: row ${i} column '${columns[j]}' is not numeric`);
      }
      row[columns[j]] = value;
    }
    rows.push(row);
  }
  return { columns, gammaColumns, rows };
}

export function column(table: RunTable, name: string): number[] {
  if (!table.columns.includes(name)) {
    throw new SchemaError(`missing required column '${name}'`);
  }
  return table.rows.map((row) => row[name]);
}
