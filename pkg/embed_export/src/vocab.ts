/**
 * Reader for the core ranker's vocabulary file: tab-separated (token, id)
 * lines, ids consecutive from 0, with the four reserved tokens
 * [PAD] [UNK] [CLS] [SEP] as the first entries.
 */

import { readFileSync } from "node:fs";

export const RESERVED = ["[PAD]", "[UNK]", "[CLS]", "[SEP]"] as const;

export function loadCoreVocab(path: string): string[] {
  const tokens: string[] = [];
  const lines = readFileSync(path, "utf-8").split("\n");
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i];
    if (line === "") continue;
    const parts = line.split("\t");
    if (parts.length !== 2 || parts[0] === "") {
      throw new Error(`${path}:${i + 1}: expected 'token<TAB>id'`);
    }
    const id = Number(parts[1]);
    if (!Number.isInteger(id)) {
      throw new Error(`${path}:${i + 1}: id ${JSON.stringify(parts[1])} is not an integer`);
    }
    if (id !== tokens.length) {
      throw new Error(`${path}:${i + 1}: ids must be consecutive from 0, got ${id}`);
    }
    tokens.push(parts[0]);
  }
  for (let i = 0; i < RESERVED.length; i++) {
    if (tokens[i] !== RESERVED[i]) {
      throw new Error(`${path}: first four entries must be ${RESERVED.join(" ")}`);
    }
  }
  if (new Set(tokens).size !== tokens.length) {
    throw new Error(`${path}: duplicate token in vocabulary`);
  }
  return tokens;
}
