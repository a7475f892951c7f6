import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterEach, describe, expect, it } from "vitest";
import { loadPieceVocab, tokenToPieces, type PieceVocab } from "./wordpiece.js";

const PIECES = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "un", "##believ", "##able", "able", "token", "##0", "##1"];

function vocabOf(pieces: string[]): PieceVocab {
  return {
    pieces: new Map(pieces.map((p, i) => [p, i])),
    unkId: pieces.indexOf("[UNK]"),
    clsId: pieces.indexOf("[CLS]"),
    sepId: pieces.indexOf("[SEP]"),
  };
}

describe("loadPieceVocab", () => {
  let dir: string | undefined;
  afterEach(() => {
    if (dir) rmSync(dir, { recursive: true, force: true });
    dir = undefined;
  });

  function write(content: string): string {
    dir = mkdtempSync(join(tmpdir(), "wp-"));
    const path = join(dir, "vocab.txt");
    writeFileSync(path, content);
    return path;
  }

  it("assigns line numbers as ids and tolerates the trailing newline", () => {
    const vocab = loadPieceVocab(write(PIECES.join("\n") + "\n"));
    expect(vocab.pieces.get("[PAD]")).toBe(0);
    expect(vocab.pieces.get("##able")).toBe(6);
    expect(vocab.pieces.size).toBe(PIECES.length);
    expect(vocab.unkId).toBe(1);
    expect(vocab.clsId).toBe(2);
    expect(vocab.sepId).toBe(3);
  });

  it("rejects duplicate pieces", () => {
    expect(() => loadPieceVocab(write("[UNK]\n[CLS]\n[SEP]\nfoo\nfoo\n"))).toThrow(/duplicate piece "foo"/);
  });

  it.each(["[UNK]", "[CLS]", "[SEP]"])("requires %s", (missing) => {
    const pieces = ["[UNK]", "[CLS]", "[SEP]"].filter((p) => p !== missing);
    expect(() => loadPieceVocab(write(pieces.join("\n") + "\n"))).toThrow(missing);
  });
});

describe("tokenToPieces", () => {
  const vocab = vocabOf(PIECES);

  it("returns the direct hit for a whole-word match", () => {
    expect(tokenToPieces("able", vocab)).toEqual([7]);
    expect(tokenToPieces("[UNK]", vocab)).toEqual([1]);
  });

  it("prefers the longest continuation at each step", () => {
    // "##believ" must win over consuming characters one at a time
    expect(tokenToPieces("unbelievable", vocab)).toEqual([4, 5, 6]);
  });

  it("splits digit runs into single-character continuations", () => {
    expect(tokenToPieces("token01", vocab)).toEqual([8, 9, 10]);
  });

  it("returns null when some stretch has no piece", () => {
    expect(tokenToPieces("xyz", vocab)).toBeNull();
    expect(tokenToPieces("tokenx", vocab)).toBeNull(); // prefix matches, tail does not
  });

  it("returns null for empty and oversized tokens", () => {
    expect(tokenToPieces("", vocab)).toBeNull();
    expect(tokenToPieces("a".repeat(101), vocab)).toBeNull();
  });

  it("matches a literal ##-prefixed input against the raw vocab string", () => {
    // lookups are by raw string, so this hits "##able" directly; the
    // reference tokenizer behaves the same way
    expect(tokenToPieces("##able", vocab)).toEqual([6]);
  });
});
