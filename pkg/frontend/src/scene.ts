/**
 * Figure layout: turns a parsed CSV plus its recipe into a list of drawing
 * primitives (lines, polylines, text).  Both output backends consume the
 * same scene, so SVG and PNG renders agree by construction.
 */

import { ticks } from "d3";

import { FigureCsv } from "./csv.js";
import { FigureRecipe, matchColumns } from "./recipes.js";

export interface LineSeg {
  kind: "line";
  x1: number;
  y1: number;
  x2: number;
  y2: number;
  stroke: string;
  width: number;
}

export interface Polyline {
  kind: "polyline";
  points: [number, number][];
  stroke: string;
  width: number;
  dash?: string;
}

export interface Label {
  kind: "text";
  x: number;
  y: number;
  text: string;
  size: number;
  anchor: "start" | "middle" | "end";
  rotate?: number;
}

export type Primitive = LineSeg | Polyline | Label;

export interface Scene {
  width: number;
  height: number;
  primitives: Primitive[];
}

const WIDTH = 640;
const HEIGHT = 440;
const MARGIN = { left: 76, right: 16, top: 34, bottom: 48 };
const AXIS_COLOR = "#333333";

interface Pt {
  x: number;
  y: number | null;
}

/** Apply the recipe's coordinate transforms; unplottable cells become null. */
function transformed(
  csv: FigureCsv,
  recipe: FigureRecipe,
  column: string,
): Pt[] {
  return csv.xs.map((rawX, row) => {
    const x = recipe.xKind === "ln" ? Math.log(rawX) : rawX;
    const v = csv.series[column][row];
    if (v === null) return { x, y: null };
    if (recipe.yKind === "log") {
      // a log axis cannot place non-positive values; treat them like NA
      return { x, y: v > 0 ? Math.log10(v) : null };
    }
    if (recipe.yKind === "lnOverN") {
      return { x, y: v > 0 ? Math.log(v) / rawX : null };
    }
    return { x, y: v };
  });
}

function extent(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (!Number.isFinite(lo)) throw new Error("no finite values to plot");
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  return [lo, hi];
}

function pad([lo, hi]: [number, number]): [number, number] {
  const slack = 0.04 * (hi - lo);
  return [lo - slack, hi + slack];
}

/** Integer powers of ten spanning [lo, hi] in log10 units, at most 8. */
function logTicks(lo: number, hi: number): number[] {
  const eLo = Math.ceil(lo);
  const eHi = Math.floor(hi);
  const step = Math.max(1, Math.ceil((eHi - eLo) / 7));
  const out: number[] = [];
  for (let e = eLo; e <= eHi; e += step) out.push(e);
  return out;
}

function fmt(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) return v.toExponential(1);
  return String(Math.round(v * 1e6) / 1e6);
}

export function buildScene(csv: FigureCsv, recipe: FigureRecipe): Scene {
  const columns = matchColumns(recipe, csv.columns);
  const byColumn = new Map(
    columns.map((c) => [c, transformed(csv, recipe, c)]),
  );

  const xsAll: number[] = [];
  const ysAll: number[] = [];
  for (const pts of byColumn.values()) {
    for (const p of pts) {
      if (p.y !== null) {
        xsAll.push(p.x);
        ysAll.push(p.y);
      }
    }
  }
  const [x0, x1] = pad(extent(xsAll));
  const [y0, y1] = pad(extent(ysAll));

  const plotW = WIDTH - MARGIN.left - MARGIN.right;
  const plotH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const px = (x: number) => MARGIN.left + ((x - x0) / (x1 - x0)) * plotW;
  const py = (y: number) => MARGIN.top + ((y1 - y) / (y1 - y0)) * plotH;

  const prims: Primitive[] = [];

  // frame
  const fx0 = MARGIN.left;
  const fx1 = WIDTH - MARGIN.right;
  const fy0 = MARGIN.top;
  const fy1 = HEIGHT - MARGIN.bottom;
  prims.push(
    { kind: "line", x1: fx0, y1: fy1, x2: fx1, y2: fy1,
      stroke: AXIS_COLOR, width: 1 },
    { kind: "line", x1: fx0, y1: fy0, x2: fx0, y2: fy1,
      stroke: AXIS_COLOR, width: 1 },
  );

  // x ticks
  for (const t of ticks(x0, x1, 6)) {
    const x = px(t);
    prims.push(
      { kind: "line", x1: x, y1: fy1, x2: x, y2: fy1 + 5,
        stroke: AXIS_COLOR, width: 1 },
      { kind: "text", x, y: fy1 + 18, text: fmt(t), size: 11,
        anchor: "middle" },
    );
  }

  // y ticks
  const yTicks =
    recipe.yKind === "log" ? logTicks(y0, y1) : ticks(y0, y1, 6);
  for (const t of yTicks) {
    const y = py(t);
    const label = recipe.yKind === "log" ? `1e${t}` : fmt(t);
    prims.push(
      { kind: "line", x1: fx0 - 5, y1: y, x2: fx0, y2: y,
        stroke: AXIS_COLOR, width: 1 },
      { kind: "text", x: fx0 - 8, y: y + 4, text: label, size: 11,
        anchor: "end" },
    );
  }

  // axis labels and title
  prims.push(
    { kind: "text", x: (fx0 + fx1) / 2, y: HEIGHT - 10,
      text: recipe.xLabel, size: 12, anchor: "middle" },
    { kind: "text", x: 16, y: (fy0 + fy1) / 2, text: recipe.yLabel,
      size: 12, anchor: "middle", rotate: -90 },
    { kind: "text", x: (fx0 + fx1) / 2, y: 20, text: recipe.figure,
      size: 13, anchor: "middle" },
  );

  // series, with null cells breaking the polyline
  for (const c of columns) {
    const style = recipe.series[c];
    let run: [number, number][] = [];
    const flush = () => {
      if (run.length > 1) {
        prims.push({ kind: "polyline", points: run, stroke: style.color,
                     width: 1.5, dash: style.dash });
      }
      run = [];
    };
    for (const p of byColumn.get(c)!) {
      if (p.y === null) {
        flush();
      } else {
        run.push([px(p.x), py(p.y)]);
      }
    }
    flush();
  }

  // legend, top right inside the frame
  columns.forEach((c, j) => {
    const y = fy0 + 14 + 16 * j;
    const x = fx1 - 130;
    prims.push(
      { kind: "line", x1: x, y1: y - 4, x2: x + 22, y2: y - 4,
        stroke: recipe.series[c].color, width: 2 },
      { kind: "text", x: x + 28, y, text: c, size: 11, anchor: "start" },
    );
  });

  return { width: WIDTH, height: HEIGHT, primitives: prims };
}
