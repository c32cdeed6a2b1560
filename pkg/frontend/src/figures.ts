/**
 * The five figure kinds rendered from a scenario report:
 *
 *   local-energy  : windowed local energy versus ball radius
 *   virial-overlay: differenced theta'' against the assembled right-hand
 *                   side, with the residual in a sub-panel
 *   hardy         : histogram of weighted-mass/gradient ratios
 *   dyadic        : per-annulus source contributions (log2 radius axis)
 *   certificates  : smallness-certificate summary table
 *
 * Rendering is read-only over the report files and deterministic.
 */

import { Panel, Series, document as svgDocument, range } from "./svg.js";
import { Report, requireColumns } from "./report.js";

export const FIGURE_KINDS = [
  "local-energy",
  "virial-overlay",
  "hardy",
  "dyadic",
  "certificates",
] as const;

export type FigureKind = (typeof FIGURE_KINDS)[number];

export interface RenderResult {
  svg: string;
  /** headline value echoed into the figure, when the kind defines one */
  readback?: number;
}

function num(v: string | number): number {
  return typeof v === "number" ? v : Number(v);
}

function renderLocalEnergy(report: Report): RenderResult {
  const rows = requireColumns(report, "smoothing",
    ["R", "local_energy", "local_energy_normalized"]);
  const R = rows.map((r) => num(r.R));
  const le = rows.map((r) => num(r.local_energy_normalized));
  const panel = new Panel(
    {
      title: `local energy vs radius - ${report.base}`,
      xLabel: "ball radius R (dyadic)",
      yLabel: "(1/R) int int |grad_A u|^2 / datum norm",
      logX: true,
    },
    [Math.min(...R) / 1.2, Math.max(...R) * 1.2],
    range([0, ...le]),
    0,
  );
  panel.frame();
  panel.polyline({ x: R, y: le, color: "#1f77b4", label: "normalized" });
  panel.bars(R, le, "#1f77b433", 10);
  return { svg: svgDocument([panel]) };
}

function renderVirialOverlay(report: Report): RenderResult {
  const rows = requireColumns(report, "virial",
    ["t", "theta_ddot", "rhs_total", "residual"]);
  const t = rows.map((r) => num(r.t));
  const d2 = rows.map((r) => num(r.theta_ddot));
  const rhs = rows.map((r) => num(r.rhs_total));
  const res = rows.map((r) => num(r.residual));
  const maxRes = Math.max(...res.map(Math.abs));

  const top = new Panel(
    {
      title: `virial identity overlay - ${report.base}`,
      xLabel: "",
      yLabel: "theta'' and assembled RHS",
      height: 300,
    },
    range(t, 0.02),
    range([...d2, ...rhs]),
    0,
  );
  top.frame();
  const overlay: Series[] = [
    { x: t, y: d2, color: "#d62728", label: "theta'' (differenced)", width: 2.4 },
    { x: t, y: rhs, color: "#1f77b4", label: "RHS (itemized sum)", dash: "6 4", width: 1.6 },
  ];
  overlay.forEach((s) => top.polyline(s));
  top.legend(overlay);

  const bottom = new Panel(
    {
      title: "residual",
      xLabel: "t",
      yLabel: "theta'' - RHS",
      height: 200,
    },
    range(t, 0.02),
    range(res),
    300,
  );
  bottom.frame();
  bottom.polyline({ x: t, y: res, color: "#2ca02c", label: "residual" });
  bottom.annotate(`max |residual| = ${maxRes.toExponential(6)}`);
  const svg = svgDocument([top, bottom], {
    "residual-max": maxRes.toExponential(12),
  });
  return { svg, readback: maxRes };
}

function renderHardy(report: Report): RenderResult {
  const rows = requireColumns(report, "hardy", ["field", "ratio"]);
  const ratios = rows.map((r) => num(r.ratio));
  const nbins = 10;
  const lo = 0;
  const hi = Math.max(4.0, Math.max(...ratios)) * 1.05;
  const counts = new Array<number>(nbins).fill(0);
  for (const v of ratios) {
    const idx = Math.min(nbins - 1, Math.floor(((v - lo) / (hi - lo)) * nbins));
    counts[idx] += 1;
  }
  const centers = counts.map((_, i) => lo + ((i + 0.5) * (hi - lo)) / nbins);
  const panel = new Panel(
    {
      title: `weighted-mass/gradient ratio histogram - ${report.base}`,
      xLabel: "ratio (sharp constant 4 marked)",
      yLabel: "count",
    },
    [lo, hi],
    [0, Math.max(...counts) + 1],
    0,
  );
  panel.frame();
  panel.bars(centers, counts, "#9467bd88", 28);
  const x4 = panel.sx(4.0);
  panel.parts.push(
    `<line x1="${x4.toFixed(2)}" y1="${panel.sy(0)}" x2="${x4.toFixed(2)}" y2="${panel.sy(Math.max(...counts) + 1)}" stroke="#d62728" stroke-dasharray="4 3"/>`,
  );
  return { svg: svgDocument([panel]) };
}

function renderDyadic(report: Report): RenderResult {
  const rows = requireColumns(report, "dyadic", ["j", "contribution"]);
  const j = rows.map((r) => num(r.j));
  const contrib = rows.map((r) => num(r.contribution));
  const panel = new Panel(
    {
      title: `dyadic source contributions - ${report.base}`,
      xLabel: "annulus index j  (|x| in [2^j, 2^(j+1)))",
      yLabel: "2^(j/2) ||F_j||",
    },
    [Math.min(...j) - 0.7, Math.max(...j) + 0.7],
    range([0, ...contrib]),
    0,
  );
  panel.frame();
  panel.bars(j, contrib, "#ff7f0e88", 30);
  const total = contrib.reduce((a, b) => a + b, 0);
  panel.annotate(`total = ${total.toExponential(4)}`);
  return { svg: svgDocument([panel]), readback: total };
}

function renderCertificates(report: Report): RenderResult {
  const rows = requireColumns(report, "certificates", ["mode", "value", "threshold", "verdict"]);
  const lineH = 26;
  const height = 90 + rows.length * lineH;
  const cols = [40, 280, 420, 560];
  const header = ["mode", "value", "threshold", "verdict"];
  const parts: string[] = [
    `<text x="40" y="34" font-size="14" font-family="DejaVu Sans, Helvetica, sans-serif">smallness certificates - ${report.base}</text>`,
  ];
  header.forEach((h, i) =>
    parts.push(
      `<text x="${cols[i]}" y="64" font-size="12" font-weight="bold" font-family="DejaVu Sans, Helvetica, sans-serif">${h}</text>`,
    ),
  );
  rows.forEach((row, r) => {
    const y = 64 + (r + 1) * lineH;
    const verdict = String(row.verdict);
    const color = verdict === "fails" ? "#d62728" : "#2ca02c";
    const cells = [
      String(row.mode),
      num(row.value).toExponential(4),
      num(row.threshold).toPrecision(4),
      verdict,
    ];
    cells.forEach((c, i) =>
      parts.push(
        `<text x="${cols[i]}" y="${y}" font-size="12" fill="${i === 3 ? color : "#111"}" font-family="DejaVu Sans, Helvetica, sans-serif">${c}</text>`,
      ),
    );
  });
  const svg = [
    `<?xml version="1.0" encoding="UTF-8"?>`,
    `<svg xmlns="http://www.w3.org/2000/svg" width="720" height="${height}" viewBox="0 0 720 ${height}">`,
    `  <rect width="720" height="${height}" fill="white"/>`,
    ...parts.map((p) => "  " + p),
    `</svg>`,
    "",
  ].join("\n");
  return { svg };
}

export function render(report: Report, kind: FigureKind): RenderResult {
  switch (kind) {
    case "local-energy":
      return renderLocalEnergy(report);
    case "virial-overlay":
      return renderVirialOverlay(report);
    case "hardy":
      return renderHardy(report);
    case "dyadic":
      return renderDyadic(report);
    case "certificates":
      return renderCertificates(report);
    default:
      throw new Error(`unknown figure kind ${kind as string}`);
  }
}
