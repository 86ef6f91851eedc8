/**
 * PNG backend via the optional `canvas` package.  Kept behind a dynamic
 * import so SVG output (the default) works without native dependencies.
 */

import { Scene } from "./scene.js";

export async function sceneToPng(scene: Scene): Promise<Buffer> {
  let createCanvas: (w: number, h: number) => any;
  try {
    ({ createCanvas } = await import("canvas"));
  } catch {
    throw new Error(
      "PNG output needs the optional 'canvas' package " +
        "(npm install canvas); use --format svg otherwise",
    );
  }
  const cv = createCanvas(scene.width, scene.height);
  const ctx = cv.getContext("2d");
  ctx.fillStyle = "white";
  ctx.fillRect(0, 0, scene.width, scene.height);

  for (const p of scene.primitives) {
    if (p.kind === "line") {
      ctx.strokeStyle = p.stroke;
      ctx.lineWidth = p.width;
      ctx.setLineDash([]);
      ctx.beginPath();
      ctx.moveTo(p.x1, p.y1);
      ctx.lineTo(p.x2, p.y2);
      ctx.stroke();
    } else if (p.kind === "polyline") {
      ctx.strokeStyle = p.stroke;
      ctx.lineWidth = p.width;
      ctx.setLineDash(p.dash ? p.dash.split(" ").map(Number) : []);
      ctx.beginPath();
      p.points.forEach(([x, y], j) => {
        if (j === 0) ctx.moveTo(x, y);
        else ctx.lineTo(x, y);
      });
      ctx.stroke();
    } else {
      ctx.fillStyle = "#000000";
      ctx.font = `${p.size}px sans-serif`;
      ctx.textAlign = p.anchor === "middle" ? "center" : p.anchor;
      ctx.save();
      if (p.rotate) {
        ctx.translate(p.x, p.y);
        ctx.rotate((p.rotate * Math.PI) / 180);
        ctx.fillText(p.text, 0, 0);
      } else {
        ctx.fillText(p.text, p.x, p.y);
      }
      ctx.restore();
    }
  }
  return cv.toBuffer("image/png");
}
