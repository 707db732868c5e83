import { describe, expect, it } from "vitest";

import { ProjectedScorer, VocabularyProjection } from "../src/mapping.js";
import { Condition, Scorer } from "../src/model.js";

describe("vocabulary projection", () => {
  it("identity projection preserves the distribution", () => {
    const proj = VocabularyProjection.identity(3);
    expect(proj.isIdentity).toBe(true);
    const lps = [Math.log(0.2), Math.log(0.5), Math.log(0.3)];
    const projected = proj.project(lps);
    for (let i = 0; i < lps.length; i++) {
      expect(projected[i]).toBeCloseTo(lps[i], 12);
    }
  });

  it("aggregates many-to-one and renormalizes", () => {
    // Model tokens 0,1 -> engine 0; model 2 -> engine 1.
    const proj = new VocabularyProjection(
      new Map([[0, 0], [1, 0], [2, 1]]),
      2,
    );
    const model = [Math.log(0.2), Math.log(0.3), Math.log(0.5)];
    const engine = proj.project(model);
    expect(Math.exp(engine[0])).toBeCloseTo(0.5, 12);
    expect(Math.exp(engine[1])).toBeCloseTo(0.5, 12);
    const total = engine.reduce((a, lp) => a + Math.exp(lp), 0);
    expect(Math.abs(total - 1.0)).toBeLessThanOrEqual(1e-4);
  });

  it("rejects an unmapped engine token at construction", () => {
    expect(
      () => new VocabularyProjection(new Map([[0, 0]]), 2),
    ).toThrow(/unmapped/);
  });

  it("encodes conditioning tokens through the lowest preimage", () => {
    const proj = new VocabularyProjection(
      new Map([[0, 0], [1, 0], [2, 1]]),
      2,
    );
    expect(proj.encodeInput([0, 1, 0])).toEqual([0, 2, 0]);
  });

  it("projected seq equals the chain of projected next distributions", () => {
    const fake: Scorer = {
      role: "lm",
      vocabSize: 3,
      nextTokenLogprobs: () => [Math.log(0.25), Math.log(0.25), Math.log(0.5)],
      sequenceLogprob: () => {
        throw new Error("must not be called under a non-identity projection");
      },
    };
    const proj = new VocabularyProjection(
      new Map([[0, 0], [1, 1], [2, 1]]),
      2,
    );
    const scorer = new ProjectedScorer(fake, proj, 2);
    const cond: Condition = {
      role: "lm", context: [], document: null, control: null,
      responsePrefix: null,
    };
    // Engine token 1 aggregates model tokens 1 and 2: p = 0.75 per step.
    const got = scorer.sequenceLogprob(cond, [0, 1, 1]);
    expect(got).toBeCloseTo(2 * Math.log(0.75), 12);
  });
});
