/** Serializes a scene to a standalone SVG document. */

import { Scene } from "./scene.js";

function esc(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;");
}

export function sceneToSvg(scene: Scene): string {
  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${scene.width}" ` +
      `height="${scene.height}" viewBox="0 0 ${scene.width} ` +
      `${scene.height}">`,
    `<rect width="${scene.width}" height="${scene.height}" fill="white"/>`,
  ];
  for (const p of scene.primitives) {
    if (p.kind === "line") {
      parts.push(
        `<line x1="${p.x1}" y1="${p.y1}" x2="${p.x2}" y2="${p.y2}" ` +
          `stroke="${p.stroke}" stroke-width="${p.width}"/>`,
      );
    } else if (p.kind === "polyline") {
      const pts = p.points
        .map(([x, y]) => `${round2(x)},${round2(y)}`)
        .join(" ");
      const dash = p.dash ? ` stroke-dasharray="${p.dash}"` : "";
      parts.push(
        `<polyline points="${pts}" fill="none" stroke="${p.stroke}" ` +
          `stroke-width="${p.width}"${dash}/>`,
      );
    } else {
      const rot = p.rotate
        ? ` transform="rotate(${p.rotate} ${p.x} ${p.y})"`
        : "";
      parts.push(
        `<text x="${p.x}" y="${p.y}" font-size="${p.size}" ` +
          `font-family="sans-serif" text-anchor="${p.anchor}"${rot}>` +
          `${esc(p.text)}</text>`,
      );
    }
  }
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

function round2(v: number): number {
  return Math.round(v * 100) / 100;
}
