import { describe, expect, it } from "vitest";

import { parseFigureCsv } from "../src/csv.js";
import { recipeFor, RecipeMismatchError } from "../src/recipes.js";
import { buildScene, Polyline } from "../src/scene.js";

function polylines(text: string, color?: string): Polyline[] {
  const csv = parseFigureCsv(text);
  const scene = buildScene(csv, recipeFor(csv.figure));
  const all = scene.primitives.filter(
    (p): p is Polyline => p.kind === "polyline",
  );
  return color ? all.filter((p) => p.stroke === color) : all;
}

function fig8Csv(rows: string[]): string {
  return ["# params: figure=fig8", "R0,AD(18),FPE", ...rows, ""].join("\n");
}

describe("buildScene", () => {
  it("draws one polyline per complete series", () => {
    const text = fig8Csv([
      "1.2,0.01,0.009",
      "1.5,0.07,0.069",
      "2.0,0.19,0.18",
    ]);
    expect(polylines(text)).toHaveLength(2);
  });

  it("breaks a series at NA cells instead of bridging them", () => {
    const text = fig8Csv([
      "1.2,0.01,0.009",
      "1.4,0.05,NA",
      "1.5,0.07,0.069",
      "1.8,0.13,0.12",
    ]);
    // FPE is the second recipe series; its color differs from AD's
    const fpeColor = recipeFor("fig8").series["FPE"].color;
    const segs = polylines(text, fpeColor);
    expect(segs).toHaveLength(1);
    expect(segs[0].points).toHaveLength(2);
  });

  it("drops non-positive values from a log-scaled axis", () => {
    const text = [
      "# params: figure=fig1",
      "i,Exact(2),KL(17),Lin(15),Det(6),Diff(9)",
      "1,1.2,-0.3,1.3,0.2,1.1",
      "2,1.7,-0.1,1.8,0.4,1.6",
      "3,2.1,0.5,2.2,0.6,2.0",
      "4,2.4,0.9,2.5,0.8,2.3",
      "",
    ].join("\n");
    const klColor = recipeFor("fig1").series["KL(17)"].color;
    const segs = polylines(text, klColor);
    expect(segs).toHaveLength(1);
    expect(segs[0].points).toHaveLength(2); // only i = 3, 4 survive
  });

  it("rejects a column the recipe does not know", () => {
    const text = [
      "# params: figure=fig8",
      "R0,AD(18),Mystery(99)",
      "1.5,0.07,0.5",
      "",
    ].join("\n");
    const csv = parseFigureCsv(text);
    expect(() => buildScene(csv, recipeFor("fig8"))).toThrow(
      RecipeMismatchError,
    );
  });

  it("keeps every drawn point inside the canvas", () => {
    const text = fig8Csv(["1.1,0.004,0.0041", "2.9,0.44,0.41"]);
    const csv = parseFigureCsv(text);
    const scene = buildScene(csv, recipeFor("fig8"));
    for (const p of scene.primitives) {
      if (p.kind !== "polyline") continue;
      for (const [x, y] of p.points) {
        expect(x).toBeGreaterThanOrEqual(0);
        expect(x).toBeLessThanOrEqual(scene.width);
        expect(y).toBeGreaterThanOrEqual(0);
        expect(y).toBeLessThanOrEqual(scene.height);
      }
    }
  });
});
