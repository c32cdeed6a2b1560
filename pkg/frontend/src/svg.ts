/**
 * Minimal deterministic SVG chart builder: fixed fonts, fixed layout, no
 * randomness, so identical inputs produce identical bytes.
 */

export interface Series {
  x: number[];
  y: number[];
  color: string;
  label: string;
  width?: number;
  dash?: string;
}

export interface PanelOptions {
  title: string;
  xLabel: string;
  yLabel: string;
  logX?: boolean;
  height?: number;
}

const FONT = "font-family=\"DejaVu Sans, Helvetica, sans-serif\"";
const W = 720;
const MARGIN = { left: 72, right: 24, top: 34, bottom: 44 };

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 0.01 && a < 10000) return String(Number(v.toPrecision(4)));
  return v.toExponential(1);
}

function ticks(lo: number, hi: number, n = 5): number[] {
  if (!(hi > lo)) return [lo];
  const out: number[] = [];
  for (let i = 0; i <= n; i++) out.push(lo + ((hi - lo) * i) / n);
  return out;
}

export class Panel {
  parts: string[] = [];
  constructor(
    public opts: PanelOptions,
    public xRange: [number, number],
    public yRange: [number, number],
    public y0: number,
  ) {}

  get height(): number {
    return this.opts.height ?? 260;
  }

  sx(x: number): number {
    const [lo, hi] = this.xRange;
    const t = this.opts.logX
      ? (Math.log(x) - Math.log(lo)) / (Math.log(hi) - Math.log(lo) || 1)
      : (x - lo) / (hi - lo || 1);
    return MARGIN.left + t * (W - MARGIN.left - MARGIN.right);
  }

  sy(y: number): number {
    const [lo, hi] = this.yRange;
    const t = (y - lo) / (hi - lo || 1);
    return this.y0 + this.height - MARGIN.bottom - t * (this.height - MARGIN.top - MARGIN.bottom);
  }

  frame(): void {
    const x0 = MARGIN.left;
    const x1 = W - MARGIN.right;
    const yTop = this.y0 + MARGIN.top;
    const yBot = this.y0 + this.height - MARGIN.bottom;
    this.parts.push(
      `<rect x="${x0}" y="${yTop}" width="${x1 - x0}" height="${yBot - yTop}" fill="none" stroke="#888" stroke-width="1"/>`,
      `<text x="${(x0 + x1) / 2}" y="${this.y0 + 20}" text-anchor="middle" font-size="14" ${FONT}>${this.opts.title}</text>`,
      `<text x="${(x0 + x1) / 2}" y="${yBot + 32}" text-anchor="middle" font-size="12" ${FONT}>${this.opts.xLabel}</text>`,
      `<text x="16" y="${(yTop + yBot) / 2}" text-anchor="middle" font-size="12" ${FONT} transform="rotate(-90 16 ${(yTop + yBot) / 2})">${this.opts.yLabel}</text>`,
    );
    for (const tx of this.opts.logX
      ? logTicks(this.xRange[0], this.xRange[1])
      : ticks(this.xRange[0], this.xRange[1])) {
      const px = this.sx(tx);
      this.parts.push(
        `<line x1="${px.toFixed(2)}" y1="${yBot}" x2="${px.toFixed(2)}" y2="${yBot + 4}" stroke="#555"/>`,
        `<text x="${px.toFixed(2)}" y="${yBot + 16}" text-anchor="middle" font-size="10" ${FONT}>${fmt(tx)}</text>`,
      );
    }
    for (const ty of ticks(this.yRange[0], this.yRange[1])) {
      const py = this.sy(ty);
      this.parts.push(
        `<line x1="${x0 - 4}" y1="${py.toFixed(2)}" x2="${x0}" y2="${py.toFixed(2)}" stroke="#555"/>`,
        `<text x="${x0 - 7}" y="${(py + 3).toFixed(2)}" text-anchor="end" font-size="10" ${FONT}>${fmt(ty)}</text>`,
      );
    }
  }

  polyline(s: Series): void {
    const pts = s.x
      .map((x, i) => `${this.sx(x).toFixed(2)},${this.sy(s.y[i]).toFixed(2)}`)
      .join(" ");
    const dash = s.dash ? ` stroke-dasharray="${s.dash}"` : "";
    this.parts.push(
      `<polyline points="${pts}" fill="none" stroke="${s.color}" stroke-width="${s.width ?? 1.6}"${dash}/>`,
    );
  }

  bars(x: number[], y: number[], color: string, widthPx: number): void {
    const base = this.sy(Math.max(this.yRange[0], 0));
    x.forEach((xv, i) => {
      const px = this.sx(xv) - widthPx / 2;
      const py = this.sy(y[i]);
      this.parts.push(
        `<rect x="${px.toFixed(2)}" y="${Math.min(py, base).toFixed(2)}" width="${widthPx}" height="${Math.abs(base - py).toFixed(2)}" fill="${color}" stroke="#333" stroke-width="0.5"/>`,
      );
    });
  }

  legend(series: Series[]): void {
    let y = this.y0 + MARGIN.top + 14;
    for (const s of series) {
      this.parts.push(
        `<line x1="${W - 190}" y1="${y - 4}" x2="${W - 160}" y2="${y - 4}" stroke="${s.color}" stroke-width="2"${s.dash ? ` stroke-dasharray="${s.dash}"` : ""}/>`,
        `<text x="${W - 152}" y="${y}" font-size="11" ${FONT}>${s.label}</text>`,
      );
      y += 16;
    }
  }

  annotate(text: string): void {
    this.parts.push(
      `<text x="${MARGIN.left + 8}" y="${this.y0 + MARGIN.top + 14}" font-size="11" ${FONT} fill="#333">${text}</text>`,
    );
  }
}

function logTicks(lo: number, hi: number): number[] {
  const out: number[] = [];
  let v = Math.pow(2, Math.ceil(Math.log2(lo)));
  while (v <= hi * 1.0001) {
    out.push(v);
    v *= 2;
  }
  return out.length > 0 ? out : [lo, hi];
}

export function range(values: number[], padFrac = 0.06): [number, number] {
  let lo = Math.min(...values);
  let hi = Math.max(...values);
  if (!(hi > lo)) {
    hi = lo + 1;
    lo = lo - 1;
  }
  const pad = (hi - lo) * padFrac;
  return [lo - pad, hi + pad];
}

export function document(panels: Panel[], metadata: Record<string, string> = {}): string {
  const height = panels.reduce((acc, p) => acc + p.height, 0) + 8;
  const meta = Object.entries(metadata)
    .map(([k, v]) => `<metadata id="${k}">${v}</metadata>`)
    .join("\n  ");
  return [
    `<?xml version="1.0" encoding="UTF-8"?>`,
    `<svg xmlns="http://www.w3.org/2000/svg" width="${W}" height="${height}" viewBox="0 0 ${W} ${height}">`,
    `  <rect width="${W}" height="${height}" fill="white"/>`,
    meta ? `  ${meta}` : "",
    ...panels.flatMap((p) => p.parts.map((s) => "  " + s)),
    `</svg>`,
    "",
  ]
    .filter((s) => s !== "")
    .join("\n");
}
