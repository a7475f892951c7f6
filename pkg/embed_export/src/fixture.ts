/**
 * Deterministic checkpoint generator. Produces the three files a model
 * directory needs (config.json, model.safetensors, vocab.txt) from a seed,
 * for the bundled test fixture and for unit tests that want a throwaway
 * model with known contents.
 */

import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";
import { buildSafetensors } from "./safetensors.js";
import type { BertConfig } from "./model.js";

export interface FixtureSpec {
  hidden: number;
  layers: number;
  heads: number;
  intermediate: number;
  maxPositions: number;
  pieces: string[];
  seed: number;
}

export const TINY_SPEC: FixtureSpec = {
  hidden: 16,
  layers: 2,
  heads: 2,
  intermediate: 32,
  maxPositions: 32,
  seed: 0xc0ffee,
  pieces: [
    "[PAD]",
    "[UNK]",
    "[CLS]",
    "[SEP]",
    "[MASK]",
    "token",
    "##0",
    "##1",
    "##2",
    "##3",
    "##4",
    "##5",
    "##6",
    "##7",
    "##8",
    "##9",
    "the",
    "virus",
    "corona",
    "##virus",
    "outbreak",
    "is",
    "spread",
    "##ing",
    "cases",
    "un",
    "##believ",
    "##able",
    "<number>",
  ],
};

/** Small fast PRNG with full 32-bit state; good enough for fixture noise. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export interface CheckpointFiles {
  config: BertConfig;
  safetensors: Buffer;
  vocabText: string;
}

export function buildCheckpointFiles(spec: FixtureSpec): CheckpointFiles {
  const config: BertConfig = {
    hidden_size: spec.hidden,
    num_hidden_layers: spec.layers,
    num_attention_heads: spec.heads,
    intermediate_size: spec.intermediate,
    layer_norm_eps: 1e-12,
    max_position_embeddings: spec.maxPositions,
    vocab_size: spec.pieces.length,
  };

  const rand = mulberry32(spec.seed);
  const noise = (n: number, scale: number) => {
    const data = new Float64Array(n);
    for (let i = 0; i < n; i++) data[i] = (rand() * 2 - 1) * scale;
    return data;
  };
  const ones = (n: number, scale: number) => {
    const data = new Float64Array(n);
    for (let i = 0; i < n; i++) data[i] = 1 + (rand() * 2 - 1) * scale;
    return data;
  };

  const h = spec.hidden;
  const m = spec.intermediate;
  const tensors: [string, { shape: number[]; data: Float64Array }][] = [
    ["bert.embeddings.word_embeddings.weight", { shape: [spec.pieces.length, h], data: noise(spec.pieces.length * h, 0.5) }],
    ["bert.embeddings.position_embeddings.weight", { shape: [spec.maxPositions, h], data: noise(spec.maxPositions * h, 0.1) }],
    ["bert.embeddings.token_type_embeddings.weight", { shape: [2, h], data: noise(2 * h, 0.1) }],
    ["bert.embeddings.LayerNorm.weight", { shape: [h], data: ones(h, 0.05) }],
    ["bert.embeddings.LayerNorm.bias", { shape: [h], data: noise(h, 0.05) }],
  ];
  for (let i = 0; i < spec.layers; i++) {
    const p = `bert.encoder.layer.${i}.`;
    for (const name of ["query", "key", "value"]) {
      tensors.push([`${p}attention.self.${name}.weight`, { shape: [h, h], data: noise(h * h, 0.25) }]);
      tensors.push([`${p}attention.self.${name}.bias`, { shape: [h], data: noise(h, 0.05) }]);
    }
    tensors.push([`${p}attention.output.dense.weight`, { shape: [h, h], data: noise(h * h, 0.25) }]);
    tensors.push([`${p}attention.output.dense.bias`, { shape: [h], data: noise(h, 0.05) }]);
    tensors.push([`${p}attention.output.LayerNorm.weight`, { shape: [h], data: ones(h, 0.05) }]);
    tensors.push([`${p}attention.output.LayerNorm.bias`, { shape: [h], data: noise(h, 0.05) }]);
    tensors.push([`${p}intermediate.dense.weight`, { shape: [m, h], data: noise(m * h, 0.25) }]);
    tensors.push([`${p}intermediate.dense.bias`, { shape: [m], data: noise(m, 0.05) }]);
    tensors.push([`${p}output.dense.weight`, { shape: [h, m], data: noise(h * m, 0.25) }]);
    tensors.push([`${p}output.dense.bias`, { shape: [h], data: noise(h, 0.05) }]);
    tensors.push([`${p}output.LayerNorm.weight`, { shape: [h], data: ones(h, 0.05) }]);
    tensors.push([`${p}output.LayerNorm.bias`, { shape: [h], data: noise(h, 0.05) }]);
  }

  return {
    config,
    safetensors: buildSafetensors(tensors),
    vocabText: spec.pieces.join("\n") + "\n",
  };
}

/** Write the three checkpoint files into dir, creating it if needed. */
export function writeCheckpoint(dir: string, spec: FixtureSpec): void {
  const files = buildCheckpointFiles(spec);
  mkdirSync(dir, { recursive: true });
  writeFileSync(join(dir, "config.json"), JSON.stringify(files.config, null, 2) + "\n");
  writeFileSync(join(dir, "model.safetensors"), files.safetensors);
  writeFileSync(join(dir, "vocab.txt"), files.vocabText);
}
