// Minimal SVG charts. Each appended snapshot contributes one marker circle
// per series (class "pt"), which also makes point counts directly testable.

import type { BandPoint, TracePoint } from "./view.js";

const NS = "http://www.w3.org/2000/svg";
export const WIDTH = 640;
export const HEIGHT = 260;
const PAD = 36;

function el(name: string, attrs: Record<string, string | number>): SVGElement {
  const node = document.createElementNS(NS, name);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, String(v));
  return node;
}

interface Scale {
  x(t: number): number;
  y(v: number): number;
}

function makeScale(tMax: number, vMin: number, vMax: number): Scale {
  const span = vMax - vMin || 1;
  return {
    x: (t) => PAD + ((WIDTH - 2 * PAD) * t) / Math.max(tMax, 1),
    y: (v) => HEIGHT - PAD - ((HEIGHT - 2 * PAD) * (v - vMin)) / span,
  };
}

function polyline(points: TracePoint[], s: Scale, cls: string): SVGElement {
  const path = points.map((p) => `${s.x(p.t)},${s.y(p.value)}`).join(" ");
  return el("polyline", { points: path, class: cls, fill: "none" });
}

function bandArea(band: BandPoint[], s: Scale, cls: string): SVGElement {
  const upper = band.map((b) => `${s.x(b.t)},${s.y(b.hi)}`);
  const lower = [...band].reverse().map((b) => `${s.x(b.t)},${s.y(b.lo)}`);
  return el("polygon", {
    points: [...upper, ...lower].join(" "),
    class: cls,
  });
}

function markers(
  group: SVGElement,
  pts: { t: number; v: number }[],
  s: Scale,
  cls: string,
): void {
  for (const p of pts) {
    group.appendChild(
      el("circle", { cx: s.x(p.t), cy: s.y(p.v), r: 2, class: `pt ${cls}` }),
    );
  }
}

export interface BandChartOptions {
  tMax: number;
  vMin: number;
  vMax: number;
  nullThreshold?: number | null;
  crossingT?: number | null;
}

/** Confidence band(s) over time, with the optional null-region shading and
 * crossing-time marker of the duality overlay. */
export function renderBandChart(
  svg: SVGSVGElement,
  bands: BandPoint[],
  mirror: BandPoint[],
  opts: BandChartOptions,
): void {
  svg.innerHTML = "";
  svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
  const s = makeScale(opts.tMax, opts.vMin, opts.vMax);
  if (opts.nullThreshold !== null && opts.nullThreshold !== undefined) {
    svg.appendChild(
      el("rect", {
        x: PAD,
        y: s.y(opts.nullThreshold),
        width: WIDTH - 2 * PAD,
        height: HEIGHT - PAD - s.y(opts.nullThreshold),
        class: "null-region",
      }),
    );
  }
  if (bands.length) {
    const g = el("g", { class: "series primary" });
    g.appendChild(bandArea(bands, s, "band primary-band"));
    markers(g, bands.map((b) => ({ t: b.t, v: b.hi })), s, "primary-pt");
    svg.appendChild(g);
  }
  if (mirror.length) {
    const g = el("g", { class: "series mirror" });
    g.appendChild(bandArea(mirror, s, "band mirror-band"));
    markers(g, mirror.map((b) => ({ t: b.t, v: b.hi })), s, "mirror-pt");
    svg.appendChild(g);
  }
  if (opts.crossingT !== null && opts.crossingT !== undefined) {
    svg.appendChild(
      el("line", {
        x1: s.x(opts.crossingT),
        x2: s.x(opts.crossingT),
        y1: PAD,
        y2: HEIGHT - PAD,
        class: "crossing-marker",
        "data-t": opts.crossingT,
      }),
    );
  }
  svg.appendChild(el("line", {
    x1: PAD, y1: HEIGHT - PAD, x2: WIDTH - PAD, y2: HEIGHT - PAD,
    class: "axis",
  }));
}

export interface TraceChartOptions {
  tMax: number;
  alpha: number;
  crossingT?: number | null;
}

/** p-value trace (linear) and e-value trace (log) with the alpha rule. */
export function renderTraceChart(
  svg: SVGSVGElement,
  pTrace: TracePoint[],
  eTrace: TracePoint[],
  opts: TraceChartOptions,
): void {
  svg.innerHTML = "";
  svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
  const s = makeScale(opts.tMax, 0, 1);
  svg.appendChild(
    el("line", {
      x1: PAD,
      x2: WIDTH - PAD,
      y1: s.y(opts.alpha),
      y2: s.y(opts.alpha),
      class: "alpha-rule",
    }),
  );
  if (pTrace.length) {
    const g = el("g", { class: "series p-series" });
    g.appendChild(polyline(pTrace, s, "trace p-trace"));
    markers(g, pTrace.map((p) => ({ t: p.t, v: p.value })), s, "p-pt");
    svg.appendChild(g);
  }
  if (eTrace.length) {
    const logMax = Math.max(...eTrace.map((p) => Math.log10(Math.max(p.value, 1e-12))), 1);
    const se = makeScale(opts.tMax, -1, logMax);
    const scaled = eTrace.map((p) => ({
      t: p.t,
      value: Math.log10(Math.max(p.value, 1e-12)),
    }));
    const g = el("g", { class: "series e-series" });
    g.appendChild(polyline(scaled, se, "trace e-trace"));
    markers(g, scaled.map((p) => ({ t: p.t, v: p.value })), se, "e-pt");
    svg.appendChild(g);
  }
  if (opts.crossingT !== null && opts.crossingT !== undefined) {
    svg.appendChild(
      el("line", {
        x1: s.x(opts.crossingT),
        x2: s.x(opts.crossingT),
        y1: PAD,
        y2: HEIGHT - PAD,
        class: "crossing-marker",
        "data-t": opts.crossingT,
      }),
    );
  }
}
