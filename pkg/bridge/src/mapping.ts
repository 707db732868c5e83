/**
 * Engine-vocabulary projection.
 *
 * A mapping file declares model-token -> engine-token assignments
 * (many-to-one allowed). Model probabilities are aggregated onto engine
 * tokens and renormalized; conditioning tokens travel the other way through
 * the lowest-id preimage. The identity projection is synthesized when model
 * and engine vocabularies share their token strings.
 */

import { readFileSync } from "node:fs";

import { Condition, Scorer } from "./model.js";
import { Vocabulary } from "./vocab.js";

export interface MappingFile {
  model_to_engine: Record<string, number>;
}

export class VocabularyProjection {
  readonly modelToEngine: Map<number, number>;
  private engineToModel: Map<number, number>;
  private engineSize: number;

  constructor(modelToEngine: Map<number, number>, engineSize: number) {
    this.modelToEngine = modelToEngine;
    this.engineSize = engineSize;
    this.engineToModel = new Map();
    for (const [model, engine] of [...modelToEngine.entries()].sort((a, b) => a[0] - b[0])) {
      if (!this.engineToModel.has(engine)) this.engineToModel.set(engine, model);
    }
    for (let e = 0; e < engineSize; e++) {
      if (!this.engineToModel.has(e)) {
        throw new Error(`engine token ${e} is unmapped in the vocabulary mapping`);
      }
    }
  }

  static identity(size: number): VocabularyProjection {
    const map = new Map<number, number>();
    for (let i = 0; i < size; i++) map.set(i, i);
    return new VocabularyProjection(map, size);
  }

  static load(path: string, engineSize: number): VocabularyProjection {
    const file = JSON.parse(readFileSync(path, "utf-8")) as MappingFile;
    const map = new Map<number, number>();
    for (const [model, engine] of Object.entries(file.model_to_engine)) {
      map.set(Number(model), engine);
    }
    return new VocabularyProjection(map, engineSize);
  }

  get isIdentity(): boolean {
    if (this.modelToEngine.size !== this.engineSize) return false;
    for (const [m, e] of this.modelToEngine) if (m !== e) return false;
    return true;
  }

  encodeInput(engineTokens: number[]): number[] {
    return engineTokens.map((e) => {
      const m = this.engineToModel.get(e);
      if (m === undefined) throw new Error(`engine token ${e} is unmapped`);
      return m;
    });
  }

  /** Aggregate a model log-prob vector onto engine tokens; renormalize. */
  project(modelLogprobs: number[]): number[] {
    const probs = new Array<number>(this.engineSize).fill(0.0);
    for (const [m, e] of this.modelToEngine) {
      probs[e] += Math.exp(modelLogprobs[m] ?? -Infinity);
    }
    const total = probs.reduce((a, b) => a + b, 0.0);
    if (total <= 0.0) {
      return new Array<number>(this.engineSize).fill(-Math.log(this.engineSize));
    }
    return probs.map((p) => (p > 0.0 ? Math.log(p / total) : -Infinity));
  }
}

function encodeCondition(cond: Condition, proj: VocabularyProjection): Condition {
  return {
    role: cond.role,
    context: proj.encodeInput(cond.context),
    document: cond.document ? proj.encodeInput(cond.document) : null,
    control: cond.control ? proj.encodeInput(cond.control) : null,
    responsePrefix: cond.responsePrefix
      ? proj.encodeInput(cond.responsePrefix)
      : null,
  };
}

/** A scorer over the engine vocabulary backed by a model-vocabulary scorer. */
export class ProjectedScorer implements Scorer {
  role: Condition["role"];
  vocabSize: number;
  private inner: Scorer;
  private proj: VocabularyProjection;

  constructor(inner: Scorer, proj: VocabularyProjection, engineSize: number) {
    this.inner = inner;
    this.proj = proj;
    this.role = inner.role;
    this.vocabSize = engineSize;
  }

  nextTokenLogprobs(cond: Condition, prefix: number[]): number[] {
    if (this.proj.isIdentity) {
      return this.inner.nextTokenLogprobs(cond, prefix);
    }
    const modelCond = encodeCondition(cond, this.proj);
    const modelPrefix = this.proj.encodeInput(prefix);
    return this.proj.project(this.inner.nextTokenLogprobs(modelCond, modelPrefix));
  }

  sequenceLogprob(cond: Condition, sequence: number[]): number {
    if (this.proj.isIdentity) {
      return this.inner.sequenceLogprob(cond, sequence);
    }
    // Chain over projected per-step distributions so "seq" agrees with
    // repeated "next" calls after projection.
    let total = 0.0;
    for (let i = 1; i < sequence.length; i++) {
      total += this.nextTokenLogprobs(cond, sequence.slice(0, i))[sequence[i]];
      if (total === -Infinity) break;
    }
    return total;
  }
}
