/**
 * Turns a transformer checkpoint into a static embedding file for the
 * ranker. Each vocabulary token is piece-tokenized and pooled into one
 * vector; tokens the piece vocabulary cannot represent fall back to the
 * [UNK] vector and are reported so the caller can judge the damage.
 */

import { existsSync } from "node:fs";
import { join } from "node:path";
import { writeEmbeddingFile, UNK_TOKEN } from "./format.js";
import { BertModel } from "./model.js";
import { loadCoreVocab } from "./vocab.js";
import { loadPieceVocab, tokenToPieces, type PieceVocab } from "./wordpiece.js";

export type Pooling = "INPUT_EMBEDDING" | "MEAN_LAST_LAYER_STATIC";

export interface ExportSpec {
  modelDir: string;
  vocabPath: string;
  outPath: string;
  pooling: Pooling;
}

export interface ExportReport {
  written: number;
  dim: number;
  /** Tokens that had no piece decomposition and took the [UNK] vector. */
  fallbacks: string[];
}

function requireFile(path: string, hint: string): void {
  if (!existsSync(path)) {
    throw new Error(`${path} not found; ${hint}`);
  }
}

function meanRows(rows: Float64Array[]): Float64Array {
  const out = new Float64Array(rows[0].length);
  for (const row of rows) {
    for (let d = 0; d < out.length; d++) out[d] += row[d];
  }
  for (let d = 0; d < out.length; d++) out[d] /= rows.length;
  return out;
}

function poolPieces(model: BertModel, vocab: PieceVocab, pieces: number[], pooling: Pooling): Float64Array {
  if (pooling === "INPUT_EMBEDDING") {
    return meanRows(pieces.map((id) => model.wordEmbedding(id)));
  }
  // Encode the token in isolation and average its piece positions; the
  // wrapper positions carry no token-specific signal and are dropped.
  const states = model.lastLayerStates([vocab.clsId, ...pieces, vocab.sepId]);
  return meanRows(states.slice(1, states.length - 1));
}

export function runExport(spec: ExportSpec): ExportReport {
  const checkpointHint =
    "place a checkpoint directory (config.json, model.safetensors, vocab.txt) " +
    "there, e.g. one downloaded from a model hub in safetensors format, or run " +
    "`npm run fixture` to build the bundled test model";
  requireFile(join(spec.modelDir, "model.safetensors"), checkpointHint);
  requireFile(join(spec.modelDir, "config.json"), checkpointHint);
  requireFile(join(spec.modelDir, "vocab.txt"), checkpointHint);
  requireFile(spec.vocabPath, "pass the vocabulary file the ranker wrote during training");

  const model = BertModel.load(spec.modelDir);
  const pieceVocab = loadPieceVocab(join(spec.modelDir, "vocab.txt"));
  const tokens = loadCoreVocab(spec.vocabPath);

  const unkVector = poolPieces(model, pieceVocab, [pieceVocab.unkId], spec.pooling);
  const entries: [string, Float64Array][] = [];
  const fallbacks: string[] = [];
  let sawUnk = false;
  for (const token of tokens) {
    const pieces = tokenToPieces(token, pieceVocab);
    if (pieces === null) {
      fallbacks.push(token);
      entries.push([token, unkVector]);
    } else {
      entries.push([token, poolPieces(model, pieceVocab, pieces, spec.pooling)]);
    }
    if (token === UNK_TOKEN) sawUnk = true;
  }
  if (!sawUnk) {
    entries.push([UNK_TOKEN, unkVector]);
  }

  const dim = model.config.hidden_size;
  writeEmbeddingFile(spec.outPath, entries, dim);
  return { written: entries.length, dim, fallbacks };
}
