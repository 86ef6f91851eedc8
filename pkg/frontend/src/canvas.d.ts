// The optional PNG backend loads `canvas` dynamically; the package (and
// its type definitions) may be absent, so declare the minimal surface.
declare module "canvas" {
  export function createCanvas(width: number, height: number): any;
}
