import { mkdtempSync, readFileSync, writeFileSync, cpSync, rmSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";
import { afterAll, describe, expect, it } from "vitest";

import { FIGURE_KINDS, render } from "../src/figures.js";
import {
  MissingColumnsError,
  SchemaMismatchError,
  listReportBases,
  loadReport,
} from "../src/report.js";
import { main as cliMain } from "../src/cli.js";

const FIXTURES = join(__dirname, "..", "fixtures", "report");
const FREE = "free-schrodinger__n3N32L12o0.5spectral";
const WAVE = "smooth-decay-wave__n3N48L16o0.5spectral";

const scratch: string[] = [];
afterAll(() => {
  for (const dir of scratch) rmSync(dir, { recursive: true, force: true });
});

function tempDir(): string {
  const dir = mkdtempSync(join(tmpdir(), "maglab-fig-"));
  scratch.push(dir);
  return dir;
}

describe("report loading", () => {
  it("lists both fixture runs", () => {
    expect(listReportBases(FIXTURES)).toEqual([FREE, WAVE].sort());
  });

  it("loads a chosen scenario with schema check", () => {
    const rep = loadReport(FIXTURES, "free-schrodinger");
    expect(rep.summary.schema).toBe("maglab-report/1");
    expect(rep.tables.has("virial")).toBe(true);
  });

  it("requires --scenario when ambiguous", () => {
    expect(() => loadReport(FIXTURES)).toThrow(/several runs/);
  });

  it("rejects a schema mismatch with a versioned error", () => {
    const dir = tempDir();
    cpSync(FIXTURES, dir, { recursive: true });
    const path = join(dir, `${FREE}__summary.json`);
    const summary = JSON.parse(readFileSync(path, "utf8"));
    summary.schema = "maglab-report/999";
    writeFileSync(path, JSON.stringify(summary));
    expect(() => loadReport(dir, "free-schrodinger")).toThrow(SchemaMismatchError);
    expect(() => loadReport(dir, "free-schrodinger")).toThrow(/maglab-report\/999/);
  });
});

describe("figure kinds", () => {
  it("renders every kind from the shipped fixture report without error", () => {
    const free = loadReport(FIXTURES, "free-schrodinger");
    const wave = loadReport(FIXTURES, "smooth-decay-wave");
    for (const kind of FIGURE_KINDS) {
      const rep = kind === "dyadic" ? wave : free;
      const out = render(rep, kind);
      expect(out.svg).toContain("<svg");
      expect(out.svg).toContain("</svg>");
    }
  });

  it("overlay residual read-back matches the JSON headline", () => {
    const rep = loadReport(FIXTURES, "free-schrodinger");
    const { svg, readback } = render(rep, "virial-overlay");
    const headline = rep.summary.headline["virial_residual_max"] as number;
    expect(readback).toBeCloseTo(headline, 12);
    const m = svg.match(/max \|residual\| = ([0-9.e+-]+)/);
    expect(m).not.toBeNull();
    expect(Number(m![1])).toBeCloseTo(headline, 6);
  });

  it("names missing columns explicitly", () => {
    const rep = loadReport(FIXTURES, "free-schrodinger");
    const crippled = {
      ...rep,
      tables: new Map(rep.tables),
    };
    crippled.tables.set(
      "virial",
      (rep.tables.get("virial") ?? []).map((row) => {
        const { residual: _dropped, ...rest } = row as Record<string, number>;
        return rest;
      }),
    );
    try {
      render(crippled, "virial-overlay");
      expect.unreachable("must throw");
    } catch (err) {
      expect(err).toBeInstanceOf(MissingColumnsError);
      expect((err as Error).message).toContain("residual");
    }
  });

  it("zero-valued series produce flat-line figures, not exceptions", () => {
    const rep = loadReport(FIXTURES, "smooth-decay-wave");
    const zeroed = { ...rep, tables: new Map(rep.tables) };
    zeroed.tables.set(
      "dyadic",
      (rep.tables.get("dyadic") ?? []).map((row) => ({ ...row, l2l2: 0, contribution: 0 })),
    );
    zeroed.tables.set(
      "virial",
      (rep.tables.get("virial") ?? []).map((row) => {
        const out: Record<string, number | string> = {};
        for (const [k, v] of Object.entries(row)) {
          out[k] = k === "t" ? v : 0;
        }
        return out;
      }),
    );
    expect(render(zeroed, "dyadic").svg).toContain("<svg");
    expect(render(zeroed, "virial-overlay").svg).toContain("<svg");
  });

  it("deterministic output for identical input", () => {
    const rep = loadReport(FIXTURES, "free-schrodinger");
    const a = render(rep, "local-energy").svg;
    const b = render(rep, "local-energy").svg;
    expect(a).toBe(b);
  });
});

describe("cli", () => {
  it("renders a single kind to a file", () => {
    const dir = tempDir();
    const out = join(dir, "fig.svg");
    const rc = cliMain(["--report", FIXTURES, "--kind", "hardy",
                        "--out", out, "--scenario", "free-schrodinger"]);
    expect(rc).toBe(0);
    expect(readFileSync(out, "utf8")).toContain("<svg");
  });

  it("renders all kinds into a directory", () => {
    const dir = tempDir();
    const rc = cliMain(["--report", FIXTURES, "--kind", "all",
                        "--out", dir, "--scenario", "smooth-decay-wave"]);
    expect(rc).toBe(0);
    for (const kind of ["virial-overlay", "dyadic", "certificates"]) {
      expect(readFileSync(join(dir, `${WAVE}__${kind}.svg`), "utf8")).toContain("<svg");
    }
  });

  it("bad usage and unknown kinds exit nonzero", () => {
    expect(cliMain([])).toBe(2);
    expect(
      cliMain(["--report", FIXTURES, "--kind", "nope", "--out", "x.svg",
               "--scenario", "free-schrodinger"]),
    ).toBe(2);
  });
});
