import { readFileSync } from "node:fs";
import { dirname, resolve } from "node:path";

import { ProjectedScorer, VocabularyProjection } from "./mapping.js";
import { Role, loadModel } from "./model.js";
import { Registry } from "./wire.js";
import { Vocabulary, loadVocabulary } from "./vocab.js";

export interface BridgeConfig {
  vocab: string;
  models: Partial<Record<Role, string>>;
  mapping?: string | null;
  port?: number;
  host?: string;
  stdio?: boolean;
}

export interface LoadedBridge {
  config: BridgeConfig;
  vocab: Vocabulary;
  scorers: Registry;
}

/** Resolve every configured role before serving starts. */
export function loadBridge(configPath: string): LoadedBridge {
  const raw = JSON.parse(readFileSync(configPath, "utf-8")) as BridgeConfig;
  const base = dirname(resolve(configPath));
  const rel = (p: string) => resolve(base, p);
  const vocab = loadVocabulary(rel(raw.vocab));
  const projection = raw.mapping
    ? VocabularyProjection.load(rel(raw.mapping), vocab.tokens.length)
    : VocabularyProjection.identity(vocab.tokens.length);
  const scorers: Registry = {};
  for (const [role, path] of Object.entries(raw.models)) {
    if (!path) continue;
    const inner = loadModel(rel(path), vocab, projection.isIdentity);
    if (inner.role !== role) {
      throw new Error(
        `model ${path} carries role ${inner.role}, configured as ${role}`,
      );
    }
    scorers[role as Role] = new ProjectedScorer(
      inner,
      projection,
      vocab.tokens.length,
    );
  }
  if (Object.keys(scorers).length === 0) {
    throw new Error("no models configured");
  }
  return { config: raw, vocab, scorers };
}
