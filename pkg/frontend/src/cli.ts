#!/usr/bin/env node
/** render_figs <csv-dir> <out-dir> [--format png|svg] */

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { Format, renderDir } from "./render.js";

async function main() {
  const argv = await yargs(hideBin(process.argv))
    .scriptName("render_figs")
    .command(
      "$0 <csv-dir> <out-dir>",
      "render every figure CSV in <csv-dir> to an image in <out-dir>",
      (y) =>
        y
          .positional("csv-dir", { type: "string", demandOption: true })
          .positional("out-dir", { type: "string", demandOption: true })
          .option("format", {
            choices: ["png", "svg"] as const,
            default: "svg" as Format,
            describe: "output image format",
          }),
    )
    .strict()
    .parse();

  const written = await renderDir(
    argv["csv-dir"] as string,
    argv["out-dir"] as string,
    argv.format as Format,
  );
  for (const f of written) console.log(f);
}

main().catch((err) => {
  console.error(`render_figs: ${err.message}`);
  process.exit(1);
});
