#!/usr/bin/env node
import yargs from "yargs";
import { hideBin } from "yargs/helpers";
import { runExport, type Pooling } from "./exporter.js";
import { UNK_TOKEN } from "./format.js";

const POOLINGS = ["INPUT_EMBEDDING", "MEAN_LAST_LAYER_STATIC"] as const;

const argv = await yargs(hideBin(process.argv))
  .scriptName("embed-export")
  .usage("$0 --model <dir> --vocab <file> --out <file> [--pooling <mode>]")
  .option("model", {
    type: "string",
    demandOption: true,
    describe: "checkpoint directory holding config.json, model.safetensors, vocab.txt",
  })
  .option("vocab", {
    type: "string",
    demandOption: true,
    describe: "vocabulary file written by the ranker (token<TAB>id lines)",
  })
  .option("out", {
    type: "string",
    demandOption: true,
    describe: "embedding file to write",
  })
  .option("pooling", {
    choices: POOLINGS,
    default: "INPUT_EMBEDDING" as (typeof POOLINGS)[number],
    describe: "how piece vectors are pooled into one vector per token",
  })
  .strict()
  .help()
  .parse();

try {
  const report = runExport({
    modelDir: argv.model,
    vocabPath: argv.vocab,
    outPath: argv.out,
    pooling: argv.pooling as Pooling,
  });
  if (report.fallbacks.length > 0) {
    const sample = report.fallbacks.slice(0, 5).join(", ");
    const more = report.fallbacks.length > 5 ? ", ..." : "";
    console.error(
      `warning: ${report.fallbacks.length} token(s) had no piece decomposition ` +
        `and took the ${UNK_TOKEN} vector: ${sample}${more}`,
    );
  }
  console.log(`wrote ${report.written} vectors of dimension ${report.dim} to ${argv.out}`);
} catch (err) {
  console.error(`error: ${(err as Error).message}`);
  process.exit(1);
}
