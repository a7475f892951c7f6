/**
 * Writer for the embedding text format the ranker loads: a "count dim"
 * header line, then one "token v1 ... vD" line per token. The file must
 * carry a <unk> row; the loader on the other side refuses files without
 * one.
 */

import { writeFileSync } from "node:fs";

export const UNK_TOKEN = "<unk>";

export function formatEmbeddingFile(entries: [string, Float64Array][], dim: number): string {
  if (!Number.isInteger(dim) || dim <= 0) {
    throw new Error(`dimension must be a positive integer, got ${dim}`);
  }
  const seen = new Set<string>();
  let hasUnk = false;
  const lines = [`${entries.length} ${dim}`];
  for (const [token, vector] of entries) {
    if (token === "" || /\s/.test(token)) {
      throw new Error(`token ${JSON.stringify(token)} cannot appear in a whitespace-delimited file`);
    }
    if (seen.has(token)) {
      throw new Error(`duplicate token ${JSON.stringify(token)}`);
    }
    seen.add(token);
    if (vector.length !== dim) {
      throw new Error(
        `token ${JSON.stringify(token)} has ${vector.length} values, expected ${dim}`,
      );
    }
    const parts = [token];
    for (const v of vector) {
      if (!Number.isFinite(v)) {
        throw new Error(`token ${JSON.stringify(token)} has a non-finite value`);
      }
      parts.push(v.toExponential(8));
    }
    if (token === UNK_TOKEN) hasUnk = true;
    lines.push(parts.join(" "));
  }
  if (!hasUnk) {
    throw new Error(`embedding file must include a ${UNK_TOKEN} row`);
  }
  return lines.join("\n") + "\n";
}

export function writeEmbeddingFile(
  path: string,
  entries: [string, Float64Array][],
  dim: number,
): void {
  writeFileSync(path, formatEmbeddingFile(entries, dim), "utf-8");
}
