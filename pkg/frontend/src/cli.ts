#!/usr/bin/env node
/**
 * maglab-render: turn a scenario's CSV/JSON report into SVG figures.
 *
 *   maglab-render --report DIR --kind local-energy --out figure.svg
 *   maglab-render --report DIR --kind all --out figures/ [--scenario ID]
 */

import { mkdirSync, writeFileSync } from "fs";
import { dirname, join } from "path";

import { FIGURE_KINDS, FigureKind, render } from "./figures.js";
import { MissingColumnsError, loadReport } from "./report.js";

interface Args {
  report?: string;
  kind?: string;
  out?: string;
  scenario?: string;
}

function parseArgs(argv: string[]): Args {
  const args: Args = {};
  for (let i = 0; i < argv.length; i++) {
    const key = argv[i];
    if (!key.startsWith("--")) continue;
    const name = key.slice(2) as keyof Args;
    args[name] = argv[++i];
  }
  return args;
}

export function main(argv: string[]): number {
  const args = parseArgs(argv);
  if (!args.report || !args.kind || !args.out) {
    process.stderr.write(
      "usage: maglab-render --report DIR --kind KIND|all --out FILE|DIR [--scenario ID]\n" +
        `kinds: ${FIGURE_KINDS.join(", ")}\n`,
    );
    return 2;
  }
  let report;
  try {
    report = loadReport(args.report, args.scenario);
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    return 1;
  }

  const kinds: FigureKind[] =
    args.kind === "all" ? [...FIGURE_KINDS] : [args.kind as FigureKind];
  for (const kind of kinds) {
    if (!FIGURE_KINDS.includes(kind)) {
      process.stderr.write(
        `error: unknown figure kind ${kind}; choose from ${FIGURE_KINDS.join(", ")}\n`,
      );
      return 2;
    }
  }

  for (const kind of kinds) {
    let result;
    try {
      result = render(report, kind);
    } catch (err) {
      if (args.kind === "all" && err instanceof MissingColumnsError) {
        // scenarios emit only the tables their suites produce
        process.stdout.write(`skipped ${kind}: ${err.message}\n`);
        continue;
      }
      process.stderr.write(`error rendering ${kind}: ${(err as Error).message}\n`);
      return 1;
    }
    const path =
      args.kind === "all" ? join(args.out, `${report.base}__${kind}.svg`) : args.out;
    mkdirSync(dirname(path), { recursive: true });
    writeFileSync(path, result.svg);
    process.stdout.write(`wrote ${path}\n`);
  }
  return 0;
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
