import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import { parseFigureCsv } from "../src/csv.js";
import { renderCsvText, renderDir, renderFile } from "../src/render.js";

const HERE = path.dirname(fileURLToPath(import.meta.url));
const DATA = path.resolve(HERE, "../../data/figures");
const TAGS = ["fig1", "fig2", "fig4", "fig5", "fig6", "fig8", "fig12",
              "fig16"];

function tmpDir(): string {
  return fs.mkdtempSync(path.join(os.tmpdir(), "figs-"));
}

describe("rendering the shipped default CSVs", () => {
  it.each(TAGS)("%s renders to SVG without error", async (tag) => {
    const text = fs.readFileSync(path.join(DATA, `${tag}.csv`), "utf8");
    const out = await renderCsvText(text, "svg");
    const svg = out.toString("utf8");
    expect(svg.startsWith("<svg")).toBe(true);
    expect(svg).toContain("<polyline");
  });

  it("fig1 carries five series", async () => {
    const text = fs.readFileSync(path.join(DATA, "fig1.csv"), "utf8");
    const svg = (await renderCsvText(text, "svg")).toString("utf8");
    const colors = new Set(
      [...svg.matchAll(/<polyline[^>]*stroke="(#[0-9a-f]{6})"/g)].map(
        (m) => m[1],
      ),
    );
    expect(colors.size).toBe(5);
  });

  it("fig6 transformed values stay in the expected exponent band", () => {
    const csv = parseFigureCsv(
      fs.readFileSync(path.join(DATA, "fig6.csv"), "utf8"),
    );
    for (const column of csv.columns) {
      csv.series[column].forEach((v, row) => {
        if (v === null) return;
        const y = Math.log(v) / csv.xs[row];
        expect(y).toBeGreaterThanOrEqual(0);
        expect(y).toBeLessThanOrEqual(0.15);
      });
    }
  });
});

describe("renderDir", () => {
  it("writes one image per CSV", async () => {
    const out = tmpDir();
    const written = await renderDir(DATA, out, "svg");
    expect(written).toHaveLength(TAGS.length);
    for (const f of written) {
      expect(fs.existsSync(f)).toBe(true);
      expect(f.endsWith(".svg")).toBe(true);
    }
  });

  it("fails on a directory without CSVs", async () => {
    const empty = tmpDir();
    await expect(renderDir(empty, tmpDir(), "svg")).rejects.toThrow(
      /no \.csv files/,
    );
  });

  it("names outputs after their inputs", async () => {
    const out = tmpDir();
    const f = await renderFile(path.join(DATA, "fig8.csv"), out, "svg");
    expect(path.basename(f)).toBe("fig8.svg");
  });
});

describe("png backend", () => {
  it("reports a clear error when the canvas package is missing", async () => {
    let canvasInstalled = true;
    try {
      await import("canvas");
    } catch {
      canvasInstalled = false;
    }
    const text = fs.readFileSync(path.join(DATA, "fig8.csv"), "utf8");
    if (canvasInstalled) {
      const out = await renderCsvText(text, "png");
      // PNG magic bytes
      expect(out.subarray(0, 4)).toEqual(
        Buffer.from([0x89, 0x50, 0x4e, 0x47]),
      );
    } else {
      await expect(renderCsvText(text, "png")).rejects.toThrow(/canvas/);
    }
  });
});
