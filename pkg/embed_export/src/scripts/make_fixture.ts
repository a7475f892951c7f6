/**
 * Builds the tiny deterministic checkpoint under fixtures/tiny used by the
 * tests and by the ranker's round-trip check. Seeded, so regenerating the
 * fixture reproduces it byte for byte.
 */

import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { writeCheckpoint, TINY_SPEC } from "../fixture.js";
import { BertModel } from "../model.js";

function main(): void {
  const here = dirname(fileURLToPath(import.meta.url));
  const outDir = join(here, "..", "..", "fixtures", "tiny");
  writeCheckpoint(outDir, TINY_SPEC);

  // Smoke-check the result loads and encodes before declaring success.
  const model = BertModel.load(outDir);
  const states = model.lastLayerStates([2, 1, 3]);
  for (const row of states) {
    for (const v of row) {
      if (!Number.isFinite(v)) throw new Error("fixture produced non-finite states");
    }
  }
  console.log(`wrote fixture with ${TINY_SPEC.pieces.length} pieces to ${outDir}`);
}

main();
