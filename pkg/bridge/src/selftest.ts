/**
 * Conformance self-test: replay recorded request/response pairs.
 *
 * Replies must match the recorded ones modulo float formatting: ids exactly,
 * log-probs within 1e-6, error responses matched by presence and id.
 */

import { readFileSync } from "node:fs";

import { Registry, answerLine, parseJson } from "./wire.js";

const TOLERANCE = 1e-6;

interface GoldenPair {
  request: Record<string, unknown>;
  response: Record<string, unknown>;
}

function closeEnough(a: number, b: number): boolean {
  if (a === b) return true; // covers matching infinities
  return Math.abs(a - b) <= TOLERANCE;
}

export function runSelftest(goldenPath: string, scorers: Registry): string[] {
  const failures: string[] = [];
  const lines = readFileSync(goldenPath, "utf-8")
    .split("\n")
    .filter((l) => l.trim().length > 0);
  for (const [i, line] of lines.entries()) {
    const pair = parseJson(line) as unknown as GoldenPair;
    const got = parseJson(answerLine(JSON.stringify(pair.request), scorers)) as Record<
      string,
      unknown
    >;
    const want = pair.response;
    const label = `pair ${i} (id ${String(want.id)})`;
    if (got.id !== want.id) {
      failures.push(`${label}: id ${String(got.id)} != ${String(want.id)}`);
      continue;
    }
    if ("error" in want) {
      if (!("error" in got)) failures.push(`${label}: expected an error reply`);
      continue;
    }
    if ("logprob" in want) {
      if (!closeEnough(got.logprob as number, want.logprob as number)) {
        failures.push(`${label}: logprob ${String(got.logprob)} != ${String(want.logprob)}`);
      }
      continue;
    }
    const wantVec = want.logprobs as number[];
    const gotVec = got.logprobs as number[];
    if (!Array.isArray(gotVec) || gotVec.length !== wantVec.length) {
      failures.push(`${label}: logprobs length mismatch`);
      continue;
    }
    for (let j = 0; j < wantVec.length; j++) {
      if (!closeEnough(gotVec[j], wantVec[j])) {
        failures.push(`${label}: logprobs[${j}] ${gotVec[j]} != ${wantVec[j]}`);
        break;
      }
    }
  }
  return failures;
}
