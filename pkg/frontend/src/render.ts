/** Top-level rendering entry points shared by the CLI and the tests. */

import * as fs from "node:fs";
import * as path from "node:path";

import { parseFigureCsv } from "./csv.js";
import { recipeFor } from "./recipes.js";
import { buildScene, Scene } from "./scene.js";
import { sceneToPng } from "./png.js";
import { sceneToSvg } from "./svg.js";

export type Format = "png" | "svg";

export function sceneFromCsvText(text: string): Scene {
  const csv = parseFigureCsv(text);
  return buildScene(csv, recipeFor(csv.figure));
}

export async function renderCsvText(
  text: string,
  format: Format,
): Promise<Buffer> {
  const scene = sceneFromCsvText(text);
  if (format === "svg") return Buffer.from(sceneToSvg(scene), "utf8");
  return sceneToPng(scene);
}

export async function renderFile(
  csvPath: string,
  outDir: string,
  format: Format,
): Promise<string> {
  const text = fs.readFileSync(csvPath, "utf8");
  const bytes = await renderCsvText(text, format);
  const base = path.basename(csvPath).replace(/\.csv$/, "");
  const outPath = path.join(outDir, `${base}.${format}`);
  fs.writeFileSync(outPath, bytes);
  return outPath;
}

export async function renderDir(
  csvDir: string,
  outDir: string,
  format: Format,
): Promise<string[]> {
  const names = fs
    .readdirSync(csvDir)
    .filter((f) => f.endsWith(".csv"))
    .sort();
  if (names.length === 0) {
    throw new Error(`no .csv files in ${csvDir}`);
  }
  fs.mkdirSync(outDir, { recursive: true });
  const written: string[] = [];
  for (const name of names) {
    written.push(await renderFile(path.join(csvDir, name), outDir, format));
  }
  return written;
}
