/**
 * Engine model files, rescored in-process.
 *
 * Both formats mirror the engine's scoring semantics exactly: the same
 * conditioning linearization (empty components dropped, <sep> separators),
 * the same variable-length history lookup for n-grams, and the same
 * prefix-mass ratios for tabular models.
 */

import { readFileSync } from "node:fs";

import { EOS, SEP, SOS, Vocabulary } from "./vocab.js";

export type Role = "direct" | "channel" | "lm";

export interface Condition {
  role: Role;
  context: number[];
  document: number[] | null;
  control: number[] | null;
  responsePrefix: number[] | null;
}

export interface Scorer {
  role: Role;
  vocabSize: number;
  nextTokenLogprobs(cond: Condition, prefix: number[]): number[];
  sequenceLogprob(cond: Condition, sequence: number[]): number;
}

export function linearizeConditioning(cond: Condition): number[] {
  let parts: number[][];
  if (cond.role === "direct") {
    parts = [cond.document ?? [], cond.context, cond.control ?? []];
  } else if (cond.role === "channel") {
    parts = [cond.context, cond.responsePrefix ?? []];
  } else {
    parts = [cond.context];
  }
  const out: number[] = [];
  for (const part of parts) {
    if (part.length > 0) {
      if (out.length > 0) out.push(SEP);
      out.push(...part);
    }
  }
  return out;
}

function chainLogprob(scorer: Scorer, cond: Condition, sequence: number[]): number {
  if (sequence.length < 2 || sequence[0] !== SOS || sequence[sequence.length - 1] !== EOS) {
    throw new Error("sequence must be <sos>..<eos> framed");
  }
  let total = 0.0;
  for (let i = 1; i < sequence.length; i++) {
    total += scorer.nextTokenLogprobs(cond, sequence.slice(0, i))[sequence[i]];
    if (total === -Infinity) break;
  }
  return total;
}

interface NgramFile {
  format: string;
  role: Role;
  order: number;
  k: number;
  vocab_hash: string;
  vocab_tokens: string[];
  counts: Record<string, Record<string, number>>;
}

export class NgramModel implements Scorer {
  role: Role;
  vocabSize: number;
  private order: number;
  private k: number;
  private counts: Map<string, Map<number, number>>;
  private totals: Map<string, number>;

  constructor(file: NgramFile) {
    this.role = file.role;
    this.vocabSize = file.vocab_tokens.length;
    this.order = file.order;
    this.k = file.k;
    this.counts = new Map();
    this.totals = new Map();
    for (const [hist, dist] of Object.entries(file.counts)) {
      const bucket = new Map<number, number>();
      let total = 0;
      for (const [tok, count] of Object.entries(dist)) {
        bucket.set(Number(tok), count);
        total += count;
      }
      this.counts.set(hist, bucket);
      this.totals.set(hist, total);
    }
  }

  nextTokenLogprobs(cond: Condition, prefix: number[]): number[] {
    if (prefix.length === 0 || prefix[0] !== SOS) {
      throw new Error("prefix must begin with <sos>");
    }
    const working = linearizeConditioning(cond).concat(prefix);
    const lo = Math.max(0, working.length - (this.order - 1));
    const hist = working.slice(lo).join(" ");
    const denom = (this.totals.get(hist) ?? 0) + this.k * this.vocabSize;
    const logDenom = Math.log(denom);
    const out = new Array<number>(this.vocabSize).fill(Math.log(this.k) - logDenom);
    const seen = this.counts.get(hist);
    if (seen) {
      for (const [tok, count] of seen) {
        out[tok] = Math.log(count + this.k) - logDenom;
      }
    }
    return out;
  }

  sequenceLogprob(cond: Condition, sequence: number[]): number {
    return chainLogprob(this, cond, sequence);
  }
}

interface TabularFile {
  format: string;
  role: Role;
  vocab_hash: string;
  vocab_tokens: string[];
  table: Record<string, Record<string, number>>;
}

/** Mirrors the engine's JSON list rendering ("[[1, 2], []]"). */
function renderKey(parts: number[][]): string {
  return "[" + parts.map((p) => "[" + p.join(", ") + "]").join(", ") + "]";
}

function conditionKey(cond: Condition): string {
  if (cond.role === "direct") {
    return renderKey([cond.context, cond.document ?? [], cond.control ?? []]);
  }
  if (cond.role === "channel") {
    return renderKey([cond.context, cond.responsePrefix ?? []]);
  }
  return renderKey([cond.context]);
}

export class TabularModel implements Scorer {
  role: Role;
  vocabSize: number;
  private table: Map<string, Array<[number[], number]>>;

  constructor(file: TabularFile) {
    this.role = file.role;
    this.vocabSize = file.vocab_tokens.length;
    this.table = new Map();
    for (const [key, dist] of Object.entries(file.table)) {
      const entries: Array<[number[], number]> = [];
      for (const [seq, prob] of Object.entries(dist)) {
        entries.push([seq === "" ? [] : seq.split(" ").map(Number), prob]);
      }
      this.table.set(key, entries);
    }
  }

  nextTokenLogprobs(cond: Condition, prefix: number[]): number[] {
    if (prefix.length === 0 || prefix[0] !== SOS) {
      throw new Error("prefix must begin with <sos>");
    }
    const uniform = new Array<number>(this.vocabSize).fill(-Math.log(this.vocabSize));
    const entries = this.table.get(conditionKey(cond));
    if (!entries) return uniform;
    const content = prefix.slice(1);
    let mass = 0.0;
    let exact = 0.0;
    const childMass = new Map<number, number>();
    for (const [seq, prob] of entries) {
      if (seq.length < content.length) continue;
      if (!content.every((tok, i) => seq[i] === tok)) continue;
      mass += prob;
      if (seq.length === content.length) {
        exact += prob;
      } else {
        const next = seq[content.length];
        childMass.set(next, (childMass.get(next) ?? 0) + prob);
      }
    }
    if (mass <= 0.0) return uniform;
    const out = new Array<number>(this.vocabSize).fill(-Infinity);
    for (const [tok, m] of childMass) {
      out[tok] = Math.log(m) - Math.log(mass);
    }
    out[EOS] = exact > 0.0 ? Math.log(exact) - Math.log(mass) : -Infinity;
    return out;
  }

  sequenceLogprob(cond: Condition, sequence: number[]): number {
    return chainLogprob(this, cond, sequence);
  }
}

export function loadModel(path: string, engineVocab: Vocabulary, requireHash: boolean): Scorer {
  const file = JSON.parse(readFileSync(path, "utf-8"));
  if (requireHash && file.vocab_hash !== engineVocab.sha256) {
    throw new Error(`model ${path} vocabulary hash does not match the engine vocabulary`);
  }
  if (file.format === "ncdecode-ngram-v1") return new NgramModel(file);
  if (file.format === "ncdecode-tabular-v1") return new TabularModel(file);
  throw new Error(`unknown model format ${file.format} in ${path}`);
}
