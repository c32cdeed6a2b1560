/**
 * Report loading: locates a scenario's summary JSON and CSV tables inside a
 * report directory, validates the schema version, and parses the delimited
 * tables.  Figures consume only this CSV/JSON contract, never the binary
 * state checkpoints.
 */

import { readFileSync, readdirSync } from "fs";
import { join } from "path";

export const SUPPORTED_SCHEMA = "maglab-report/1";

export class SchemaMismatchError extends Error {
  constructor(public found: string | undefined, public expected: string) {
    super(
      `report schema ${found ?? "<missing>"} does not match renderer schema ${expected}`,
    );
  }
}

export class MissingColumnsError extends Error {
  constructor(public table: string, public columns: string[]) {
    super(`table ${table} is missing required columns: ${columns.join(", ")}`);
  }
}

export interface Summary {
  schema?: string;
  headline: Record<string, unknown>;
  assertions: Array<Record<string, unknown>>;
  metadata: Record<string, unknown>;
  files: string[];
}

export type Row = Record<string, string | number>;

export interface Report {
  dir: string;
  base: string; // "<scenario>__<gridsig>"
  summary: Summary;
  tables: Map<string, Row[]>;
}

function parseCsv(text: string): Row[] {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) return [];
  const header = lines[0].split(",");
  return lines.slice(1).map((line) => {
    const cells = line.split(",");
    const row: Row = {};
    header.forEach((name, i) => {
      const raw = cells[i] ?? "";
      const num = Number(raw);
      row[name] = raw !== "" && Number.isFinite(num) ? num : raw;
    });
    return row;
  });
}

export function listReportBases(dir: string): string[] {
  const bases = new Set<string>();
  for (const name of readdirSync(dir)) {
    const m = name.match(/^(.+)__summary\.json$/);
    if (m) bases.add(m[1]);
  }
  return [...bases].sort();
}

export function loadReport(dir: string, base?: string): Report {
  const bases = listReportBases(dir);
  if (bases.length === 0) {
    throw new Error(`no summary JSON found under ${dir}`);
  }
  let chosen = base;
  if (!chosen) {
    if (bases.length > 1) {
      throw new Error(
        `report directory holds several runs (${bases.join(", ")}); pass --scenario`,
      );
    }
    chosen = bases[0];
  } else if (!bases.some((b) => b === chosen || b.startsWith(chosen + "__"))) {
    throw new Error(`no run matching ${chosen} in ${dir}; have: ${bases.join(", ")}`);
  } else {
    chosen = bases.find((b) => b === chosen || b.startsWith(chosen + "__"))!;
  }

  const summary = JSON.parse(
    readFileSync(join(dir, `${chosen}__summary.json`), "utf8"),
  ) as Summary;
  if (summary.schema !== SUPPORTED_SCHEMA) {
    throw new SchemaMismatchError(summary.schema, SUPPORTED_SCHEMA);
  }

  const tables = new Map<string, Row[]>();
  for (const name of readdirSync(dir)) {
    const m = name.match(new RegExp(`^${chosen.replace(/[.*+?^${}()|[\]\\]/g, "\\$&")}__(\\w+)\\.csv$`));
    if (m) tables.set(m[1], parseCsv(readFileSync(join(dir, name), "utf8")));
  }
  return { dir, base: chosen, summary, tables };
}

export function requireColumns(report: Report, table: string, columns: string[]): Row[] {
  const rows = report.tables.get(table);
  if (!rows || rows.length === 0) {
    throw new MissingColumnsError(table, columns);
  }
  const have = new Set(Object.keys(rows[0]));
  const missing = columns.filter((c) => !have.has(c));
  if (missing.length > 0) {
    throw new MissingColumnsError(table, missing);
  }
  return rows;
}
