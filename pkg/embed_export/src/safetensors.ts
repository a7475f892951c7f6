/**
 * Minimal safetensors reader/writer.
 *
 * Layout: 8-byte little-endian header length, a JSON header mapping tensor
 * names to { dtype, shape, data_offsets }, then the concatenated raw tensor
 * bytes. Offsets are relative to the end of the header. Only F32 and F64
 * are handled; that covers the checkpoints this tool consumes.
 */

import { readFileSync, writeFileSync } from "node:fs";

export type Dtype = "F32" | "F64";

export interface TensorEntry {
  dtype: Dtype;
  shape: number[];
  /** Values in row-major order, upcast to float64 for uniform math. */
  data: Float64Array;
}

export type TensorMap = Map<string, TensorEntry>;

interface HeaderEntry {
  dtype: string;
  shape: number[];
  data_offsets: [number, number];
}

const BYTES_PER: Record<Dtype, number> = { F32: 4, F64: 8 };

function elementCount(shape: number[]): number {
  return shape.reduce((a, b) => a * b, 1);
}

export function parseSafetensors(buffer: Buffer): TensorMap {
  if (buffer.length < 8) {
    throw new Error("safetensors: file shorter than the 8-byte header length");
  }
  const headerLen = Number(buffer.readBigUInt64LE(0));
  if (8 + headerLen > buffer.length) {
    throw new Error(`safetensors: header length ${headerLen} exceeds file size`);
  }
  let header: Record<string, HeaderEntry>;
  try {
    header = JSON.parse(buffer.subarray(8, 8 + headerLen).toString("utf-8"));
  } catch (err) {
    throw new Error(`safetensors: invalid JSON header: ${err}`);
  }
  const body = buffer.subarray(8 + headerLen);
  const tensors: TensorMap = new Map();
  for (const [name, entry] of Object.entries(header)) {
    if (name === "__metadata__") continue;
    const dtype = entry.dtype as Dtype;
    if (!(dtype in BYTES_PER)) {
      throw new Error(`safetensors: unsupported dtype ${entry.dtype} for ${name}`);
    }
    const [start, end] = entry.data_offsets;
    const n = elementCount(entry.shape);
    if (end - start !== n * BYTES_PER[dtype] || end > body.length) {
      throw new Error(`safetensors: bad data_offsets for ${name}`);
    }
    const slice = body.subarray(start, end);
    const data = new Float64Array(n);
    // copy via a view so unaligned offsets in the source buffer are safe
    const view = new DataView(slice.buffer, slice.byteOffset, slice.byteLength);
    for (let i = 0; i < n; i++) {
      data[i] = dtype === "F32" ? view.getFloat32(i * 4, true) : view.getFloat64(i * 8, true);
    }
    tensors.set(name, { dtype, shape: entry.shape.slice(), data });
  }
  return tensors;
}

export function readSafetensors(path: string): TensorMap {
  return parseSafetensors(readFileSync(path));
}

/** Serialize float32 tensors (enough for fixtures and tests). */
export function buildSafetensors(
  tensors: Iterable<[string, { shape: number[]; data: ArrayLike<number> }]>
): Buffer {
  const header: Record<string, HeaderEntry> = {};
  const chunks: Buffer[] = [];
  let offset = 0;
  for (const [name, t] of tensors) {
    const n = elementCount(t.shape);
    if (t.data.length !== n) {
      throw new Error(`tensor ${name}: ${t.data.length} values for shape [${t.shape}]`);
    }
    const chunk = Buffer.alloc(n * 4);
    for (let i = 0; i < n; i++) chunk.writeFloatLE(t.data[i], i * 4);
    header[name] = {
      dtype: "F32",
      shape: t.shape.slice(),
      data_offsets: [offset, offset + chunk.length],
    };
    offset += chunk.length;
    chunks.push(chunk);
  }
  const headerBuf = Buffer.from(JSON.stringify(header), "utf-8");
  const sizeBuf = Buffer.alloc(8);
  sizeBuf.writeBigUInt64LE(BigInt(headerBuf.length));
  return Buffer.concat([sizeBuf, headerBuf, ...chunks]);
}

export function writeSafetensors(
  path: string,
  tensors: Iterable<[string, { shape: number[]; data: ArrayLike<number> }]>
): void {
  writeFileSync(path, buildSafetensors(tensors));
}
