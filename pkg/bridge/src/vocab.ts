import { createHash } from "node:crypto";
import { readFileSync } from "node:fs";

export const SOS = 0;
export const EOS = 1;
export const UNK = 2;
export const SEP = 3;

const RESERVED = ["<sos>", "<eos>", "<unk>", "<sep>"];

export interface Vocabulary {
  tokens: string[];
  sha256: string;
}

export function loadVocabulary(path: string): Vocabulary {
  const tokens = readFileSync(path, "utf-8")
    .split("\n")
    .filter((line) => line.length > 0);
  if (tokens.length < 4 || RESERVED.some((t, i) => tokens[i] !== t)) {
    throw new Error(`vocabulary file ${path} must start with ${RESERVED.join(" ")}`);
  }
  const sha256 = createHash("sha256")
    .update(tokens.join("\n") + "\n", "utf-8")
    .digest("hex");
  return { tokens, sha256 };
}
