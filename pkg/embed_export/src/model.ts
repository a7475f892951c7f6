/**
 * Minimal BERT-style encoder, just enough to turn a piece-id sequence into
 * last-layer hidden states. Loads a directory holding config.json and
 * model.safetensors with the usual tensor names (bert.embeddings.*,
 * bert.encoder.layer.{i}.*).
 *
 * Everything runs in float64 on plain arrays; sequences here are a handful
 * of pieces long, so there is nothing to optimize.
 */

import { readFileSync } from "node:fs";
import { join } from "node:path";
import { readSafetensors, type TensorEntry } from "./safetensors.js";

export interface BertConfig {
  hidden_size: number;
  num_hidden_layers: number;
  num_attention_heads: number;
  intermediate_size: number;
  layer_norm_eps: number;
  max_position_embeddings: number;
  vocab_size: number;
}

const CONFIG_KEYS: (keyof BertConfig)[] = [
  "hidden_size",
  "num_hidden_layers",
  "num_attention_heads",
  "intermediate_size",
  "layer_norm_eps",
  "max_position_embeddings",
  "vocab_size",
];

export function loadConfig(path: string): BertConfig {
  let raw: unknown;
  try {
    raw = JSON.parse(readFileSync(path, "utf-8"));
  } catch (err) {
    throw new Error(`${path}: ${(err as Error).message}`);
  }
  if (typeof raw !== "object" || raw === null) {
    throw new Error(`${path}: expected a JSON object`);
  }
  const obj = raw as Record<string, unknown>;
  const config = {} as BertConfig;
  for (const key of CONFIG_KEYS) {
    const value = obj[key];
    if (typeof value !== "number" || !Number.isFinite(value)) {
      throw new Error(`${path}: missing or non-numeric field ${JSON.stringify(key)}`);
    }
    config[key] = value;
  }
  if (config.hidden_size % config.num_attention_heads !== 0) {
    throw new Error(
      `${path}: hidden_size ${config.hidden_size} not divisible by ` +
        `num_attention_heads ${config.num_attention_heads}`,
    );
  }
  return config;
}

/** Approximation of the Gauss error function, max abs error ~1.5e-7. */
export function erf(x: number): number {
  const sign = x < 0 ? -1 : 1;
  const ax = Math.abs(x);
  const t = 1 / (1 + 0.3275911 * ax);
  const poly =
    t *
    (0.254829592 +
      t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
  return sign * (1 - poly * Math.exp(-ax * ax));
}

export function gelu(x: number): number {
  return 0.5 * x * (1 + erf(x / Math.SQRT2));
}

function softmaxInPlace(row: Float64Array): void {
  let max = -Infinity;
  for (const v of row) max = Math.max(max, v);
  let sum = 0;
  for (let i = 0; i < row.length; i++) {
    row[i] = Math.exp(row[i] - max);
    sum += row[i];
  }
  for (let i = 0; i < row.length; i++) row[i] /= sum;
}

/** y = W x + b for one row, W stored [out, in] row-major. */
function affine(x: Float64Array, w: TensorEntry, b: TensorEntry): Float64Array {
  const [outDim, inDim] = w.shape;
  const y = new Float64Array(outDim);
  for (let o = 0; o < outDim; o++) {
    let acc = b.data[o];
    const base = o * inDim;
    for (let i = 0; i < inDim; i++) acc += w.data[base + i] * x[i];
    y[o] = acc;
  }
  return y;
}

function layerNorm(
  x: Float64Array,
  gamma: TensorEntry,
  beta: TensorEntry,
  eps: number,
): Float64Array {
  const n = x.length;
  let mean = 0;
  for (const v of x) mean += v;
  mean /= n;
  let variance = 0;
  for (const v of x) variance += (v - mean) * (v - mean);
  variance /= n;
  const inv = 1 / Math.sqrt(variance + eps);
  const y = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    y[i] = (x[i] - mean) * inv * gamma.data[i] + beta.data[i];
  }
  return y;
}

export class BertModel {
  readonly config: BertConfig;
  private readonly tensors: Map<string, TensorEntry>;

  constructor(config: BertConfig, tensors: Map<string, TensorEntry>) {
    this.config = config;
    this.tensors = tensors;
    // Touch every tensor the forward pass will need so a truncated or
    // renamed checkpoint fails at load time, not mid-export.
    this.tensor("bert.embeddings.word_embeddings.weight", [config.vocab_size, config.hidden_size]);
    this.tensor("bert.embeddings.position_embeddings.weight", [
      config.max_position_embeddings,
      config.hidden_size,
    ]);
    this.tensor("bert.embeddings.token_type_embeddings.weight", [2, config.hidden_size]);
    this.tensor("bert.embeddings.LayerNorm.weight", [config.hidden_size]);
    this.tensor("bert.embeddings.LayerNorm.bias", [config.hidden_size]);
    const h = config.hidden_size;
    const m = config.intermediate_size;
    for (let i = 0; i < config.num_hidden_layers; i++) {
      const p = `bert.encoder.layer.${i}.`;
      for (const name of ["query", "key", "value"]) {
        this.tensor(`${p}attention.self.${name}.weight`, [h, h]);
        this.tensor(`${p}attention.self.${name}.bias`, [h]);
      }
      this.tensor(`${p}attention.output.dense.weight`, [h, h]);
      this.tensor(`${p}attention.output.dense.bias`, [h]);
      this.tensor(`${p}attention.output.LayerNorm.weight`, [h]);
      this.tensor(`${p}attention.output.LayerNorm.bias`, [h]);
      this.tensor(`${p}intermediate.dense.weight`, [m, h]);
      this.tensor(`${p}intermediate.dense.bias`, [m]);
      this.tensor(`${p}output.dense.weight`, [h, m]);
      this.tensor(`${p}output.dense.bias`, [h]);
      this.tensor(`${p}output.LayerNorm.weight`, [h]);
      this.tensor(`${p}output.LayerNorm.bias`, [h]);
    }
  }

  static load(dir: string): BertModel {
    const config = loadConfig(join(dir, "config.json"));
    const tensors = readSafetensors(join(dir, "model.safetensors"));
    return new BertModel(config, tensors);
  }

  private tensor(name: string, shape: number[]): TensorEntry {
    const entry = this.tensors.get(name);
    if (entry === undefined) {
      throw new Error(`model is missing tensor ${JSON.stringify(name)}`);
    }
    if (
      entry.shape.length !== shape.length ||
      entry.shape.some((d, i) => d !== shape[i])
    ) {
      throw new Error(
        `tensor ${JSON.stringify(name)} has shape [${entry.shape}], expected [${shape}]`,
      );
    }
    return entry;
  }

  /** Row of the word-embedding table, copied. */
  wordEmbedding(pieceId: number): Float64Array {
    const table = this.tensor("bert.embeddings.word_embeddings.weight", [
      this.config.vocab_size,
      this.config.hidden_size,
    ]);
    if (pieceId < 0 || pieceId >= this.config.vocab_size) {
      throw new Error(`piece id ${pieceId} out of range for vocab_size ${this.config.vocab_size}`);
    }
    const h = this.config.hidden_size;
    return new Float64Array(table.data.buffer, table.data.byteOffset + pieceId * h * 8, h).slice();
  }

  /**
   * Full encoder pass over a piece-id sequence (the caller includes [CLS]
   * and [SEP]). Returns one hidden-state row per input position.
   */
  lastLayerStates(pieceIds: number[]): Float64Array[] {
    const { hidden_size: h, num_attention_heads: heads, layer_norm_eps: eps } = this.config;
    if (pieceIds.length === 0) {
      throw new Error("cannot encode an empty sequence");
    }
    if (pieceIds.length > this.config.max_position_embeddings) {
      throw new Error(
        `sequence of ${pieceIds.length} pieces exceeds max_position_embeddings ` +
          `${this.config.max_position_embeddings}`,
      );
    }
    const positions = this.tensor("bert.embeddings.position_embeddings.weight", [
      this.config.max_position_embeddings,
      h,
    ]);
    const types = this.tensor("bert.embeddings.token_type_embeddings.weight", [2, h]);

    let states: Float64Array[] = pieceIds.map((id, pos) => {
      const row = this.wordEmbedding(id);
      for (let d = 0; d < h; d++) {
        row[d] += positions.data[pos * h + d] + types.data[d];
      }
      return layerNorm(
        row,
        this.tensor("bert.embeddings.LayerNorm.weight", [h]),
        this.tensor("bert.embeddings.LayerNorm.bias", [h]),
        eps,
      );
    });

    const headDim = h / heads;
    const scale = 1 / Math.sqrt(headDim);
    for (let layer = 0; layer < this.config.num_hidden_layers; layer++) {
      const p = `bert.encoder.layer.${layer}.`;
      const q = states.map((x) =>
        affine(x, this.tensor(`${p}attention.self.query.weight`, [h, h]),
          this.tensor(`${p}attention.self.query.bias`, [h])),
      );
      const k = states.map((x) =>
        affine(x, this.tensor(`${p}attention.self.key.weight`, [h, h]),
          this.tensor(`${p}attention.self.key.bias`, [h])),
      );
      const v = states.map((x) =>
        affine(x, this.tensor(`${p}attention.self.value.weight`, [h, h]),
          this.tensor(`${p}attention.self.value.bias`, [h])),
      );

      const mixed = states.map(() => new Float64Array(h));
      for (let head = 0; head < heads; head++) {
        const off = head * headDim;
        for (let i = 0; i < states.length; i++) {
          const scores = new Float64Array(states.length);
          for (let j = 0; j < states.length; j++) {
            let dot = 0;
            for (let d = 0; d < headDim; d++) dot += q[i][off + d] * k[j][off + d];
            scores[j] = dot * scale;
          }
          softmaxInPlace(scores);
          for (let j = 0; j < states.length; j++) {
            for (let d = 0; d < headDim; d++) mixed[i][off + d] += scores[j] * v[j][off + d];
          }
        }
      }

      states = states.map((x, i) => {
        const attnOut = affine(
          mixed[i],
          this.tensor(`${p}attention.output.dense.weight`, [h, h]),
          this.tensor(`${p}attention.output.dense.bias`, [h]),
        );
        for (let d = 0; d < h; d++) attnOut[d] += x[d];
        const normed = layerNorm(
          attnOut,
          this.tensor(`${p}attention.output.LayerNorm.weight`, [h]),
          this.tensor(`${p}attention.output.LayerNorm.bias`, [h]),
          eps,
        );

        const inter = affine(
          normed,
          this.tensor(`${p}intermediate.dense.weight`, [this.config.intermediate_size, h]),
          this.tensor(`${p}intermediate.dense.bias`, [this.config.intermediate_size]),
        );
        for (let d = 0; d < inter.length; d++) inter[d] = gelu(inter[d]);
        const out = affine(
          inter,
          this.tensor(`${p}output.dense.weight`, [h, this.config.intermediate_size]),
          this.tensor(`${p}output.dense.bias`, [h]),
        );
        for (let d = 0; d < h; d++) out[d] += normed[d];
        return layerNorm(
          out,
          this.tensor(`${p}output.LayerNorm.weight`, [h]),
          this.tensor(`${p}output.LayerNorm.bias`, [h]),
          eps,
        );
      });
    }
    return states;
  }
}
