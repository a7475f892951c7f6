/**
 * Greedy longest-match-first subword tokenizer over a checkpoint's
 * vocab.txt (one piece per line, line index = piece id, continuation
 * pieces prefixed "##").
 */

import { readFileSync } from "node:fs";

export interface PieceVocab {
  pieces: Map<string, number>;
  unkId: number;
  clsId: number;
  sepId: number;
}

const MAX_CHARS_PER_TOKEN = 100;

export function loadPieceVocab(path: string): PieceVocab {
  const pieces = new Map<string, number>();
  const lines = readFileSync(path, "utf-8").split("\n");
  for (let i = 0; i < lines.length; i++) {
    const piece = lines[i];
    if (piece === "" && i === lines.length - 1) continue; // trailing newline
    if (pieces.has(piece)) {
      throw new Error(`${path}:${i + 1}: duplicate piece ${JSON.stringify(piece)}`);
    }
    pieces.set(piece, i);
  }
  for (const required of ["[UNK]", "[CLS]", "[SEP]"]) {
    if (!pieces.has(required)) {
      throw new Error(`${path}: tokenizer vocabulary lacks ${required}`);
    }
  }
  return {
    pieces,
    unkId: pieces.get("[UNK]")!,
    clsId: pieces.get("[CLS]")!,
    sepId: pieces.get("[SEP]")!,
  };
}

/**
 * Split one token into piece ids, or null when any stretch of it has no
 * match (the caller decides how to fall back).
 */
export function tokenToPieces(token: string, vocab: PieceVocab): number[] | null {
  if (token.length === 0 || token.length > MAX_CHARS_PER_TOKEN) return null;
  const direct = vocab.pieces.get(token);
  if (direct !== undefined) return [direct];
  const ids: number[] = [];
  let start = 0;
  while (start < token.length) {
    let end = token.length;
    let found = -1;
    while (end > start) {
      const candidate = (start > 0 ? "##" : "") + token.slice(start, end);
      const id = vocab.pieces.get(candidate);
      if (id !== undefined) {
        found = id;
        break;
      }
      end--;
    }
    if (found < 0) return null;
    ids.push(found);
    start = end;
  }
  return ids;
}
