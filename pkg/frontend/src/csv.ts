import { readFileSync } from "fs";
import Papa from "papaparse";

export type Row = Record<string, string | number | boolean | null>;

export class SchemaError extends Error {}

/** Parse a CSV file and verify the required columns exist. */
export function readCsv(path: string, required: string[]): Row[] {
  const text = readFileSync(path, "utf8");
  const parsed = Papa.parse<Row>(text.trim(), {
    header: true,
    dynamicTyping: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    throw new SchemaError(`cannot parse ${path}: ${parsed.errors[0].message}`);
  }
  const fields = parsed.meta.fields ?? [];
  for (const column of required) {
    if (!fields.includes(column)) {
      throw new SchemaError(`missing column "${column}" in ${path}`);
    }
  }
  return parsed.data;
}

export function numeric(row: Row, column: string): number {
  const value = row[column];
  if (typeof value !== "number" || !Number.isFinite(value)) {
    throw new SchemaError(`column "${column}" holds a non-numeric value: ${value}`);
  }
  return value;
}

/** Distinct values of a column, in first-appearance order. */
export function distinct(rows: Row[], column: string): number[] {
  const seen: number[] = [];
  for (const row of rows) {
    const value = numeric(row, column);
    if (!seen.includes(value)) seen.push(value);
  }
  return seen;
}
