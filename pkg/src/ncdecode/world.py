"""Synthetic grounded-dialog worlds with explicit finite joint distributions.

A world stores p(c) * p(d|c) * p(u|c,d) as explicit tables over a fixed
context pool, a document inventory, and the enumerable set of responses up to
a maximum length. Responses are generated by a mixture of a document-copying
process (weight grounding_strength) and a context-only process, so factuality
metrics respond to decoding choices. Everything is deterministic in the seed.
"""

import itertools
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .data import GroundedExample, Turn
from .errors import ConfigError
from .scorers import ROLE_CHANNEL, ROLE_DIRECT, ROLE_LM, TabularScorer
from .vocab import CONTROL, RESERVED, Vocabulary

ENUMERABILITY_LIMIT = 10**6
ROW_SUM_TOL = 1e-9


@dataclass(frozen=True)
class WorldSpec:
    vocab_size: int
    num_documents: int
    max_context_len: int
    max_doc_len: int
    max_response_len: int
    num_contexts: int = 8
    grounding_strength: float = 0.7
    empty_response_weight: float = 0.1
    identifying_contexts: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.vocab_size < 2:
            raise ConfigError("vocab_size must be >= 2")
        for name in ("num_documents", "max_context_len", "max_doc_len",
                     "max_response_len", "num_contexts"):
            if getattr(self, name) < 1:
                raise ConfigError("%s must be >= 1" % name)
        if not 0.0 <= self.grounding_strength <= 1.0:
            raise ConfigError("grounding_strength must be in [0, 1]")
        if self.vocab_size ** self.max_response_len > ENUMERABILITY_LIMIT:
            raise ConfigError(
                "enumerability guard violated: %d^%d > %d"
                % (self.vocab_size, self.max_response_len, ENUMERABILITY_LIMIT)
            )


def world_vocabulary(vocab_size):
    """Reserved + control markers + generated surface forms t0..t{k-1}."""
    return Vocabulary(
        list(RESERVED) + list(CONTROL) + ["t%d" % i for i in range(vocab_size)]
    )


def enumerate_responses(token_ids, max_len):
    """All content sequences of length 0..max_len, ordered by length then lex."""
    out = [()]
    for length in range(1, max_len + 1):
        out.extend(itertools.product(sorted(token_ids), repeat=length))
    return out


class WorldModel:
    """Immutable explicit joint over (context, document, response)."""

    def __init__(self, spec, vocab, contexts, documents, p_c, p_d_c, p_u_cd):
        self.spec = spec
        self.vocab = vocab
        self.contexts = tuple(tuple(c) for c in contexts)
        self.documents = tuple(tuple(d) for d in documents)
        self.p_c = np.asarray(p_c, dtype=np.float64)
        self.p_d_c = np.asarray(p_d_c, dtype=np.float64)
        self.p_u_cd = np.asarray(p_u_cd, dtype=np.float64)
        self.responses = tuple(
            enumerate_responses(self.generated_ids(), spec.max_response_len)
        )
        self._validate()

    def generated_ids(self):
        base = len(RESERVED) + len(CONTROL)
        return tuple(range(base, base + self.spec.vocab_size))

    def _validate(self):
        if len(set(self.documents)) != len(self.documents):
            raise ConfigError("world documents must be distinct")
        for name, arr, axis in (
            ("p_c", self.p_c, None),
            ("p_d_c", self.p_d_c, -1),
            ("p_u_cd", self.p_u_cd, -1),
        ):
            sums = arr.sum() if axis is None else arr.sum(axis=axis)
            if not np.all(np.abs(sums - 1.0) <= ROW_SUM_TOL):
                raise ConfigError("%s rows drift from 1 beyond %g" % (name, ROW_SUM_TOL))

    def doc_id(self, index):
        return "d%d" % index

    def joint(self, c, d, u_idx):
        return float(self.p_c[c] * self.p_d_c[c, d] * self.p_u_cd[c, d, u_idx])

    def context_condition(self, c, role, **kwargs):
        from .scorers import Condition

        return Condition(
            context=(Turn("user", self.contexts[c]),), role=role, **kwargs
        )

    def to_dict(self):
        return {
            "format": "ncdecode-world-v1",
            "spec": asdict(self.spec),
            "vocab_tokens": list(self.vocab.tokens),
            "contexts": [list(c) for c in self.contexts],
            "documents": [list(d) for d in self.documents],
            "p_c": self.p_c.tolist(),
            "p_d_c": self.p_d_c.tolist(),
            "p_u_cd": self.p_u_cd.tolist(),
        }

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_dict(cls, obj):
        if obj.get("format") != "ncdecode-world-v1":
            raise ConfigError("not a world file: format %r" % obj.get("format"))
        spec = WorldSpec(**obj["spec"])
        vocab = Vocabulary(obj["vocab_tokens"])
        return cls(
            spec, vocab, obj["contexts"], obj["documents"],
            obj["p_c"], obj["p_d_c"], obj["p_u_cd"],
        )

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _token_distribution(rng, size):
    return rng.dirichlet(np.ones(size))

def _lexically_distinct_sequences(rng, token_ids, count, max_len):
    """Distinct sequences with pairwise non-proportional token counts.

    Needed for identifying-context worlds: a context built from a document
    must be closest (by tf cosine) to that document alone.
    """
    from collections import Counter

    for _ in range(1000):
        seqs = _distinct_sequences(rng, token_ids, count, max_len)
        vecs = [Counter(seq) for seq in seqs]
        ok = True
        for i in range(count):
            for j in range(i + 1, count):
                vi, vj = vecs[i], vecs[j]
                dot = sum(c * vj.get(t, 0) for t, c in vi.items())
                ni = sum(c * c for c in vi.values())
                nj = sum(c * c for c in vj.values())
                if dot * dot >= ni * nj * (1.0 - 1e-12):
                    ok = False
        if ok:
            return seqs
    raise ConfigError("could not draw lexically distinct documents")


def _distinct_sequences(rng, token_ids, count, max_len):
    space = sum(len(token_ids) ** L for L in range(1, max_len + 1))
    if count > space:
        raise ConfigError("cannot draw %d distinct sequences from %d" % (count, space))
    seqs, seen = [], set()
    token_ids = list(token_ids)
    for _ in range(10000):
        length = int(rng.integers(1, max_len + 1))
        seq = tuple(token_ids[i] for i in rng.integers(0, len(token_ids), size=length))
        if seq not in seen:
            seen.add(seq)
            seqs.append(seq)
            if len(seqs) == count:
                return seqs
    raise ConfigError("failed to draw distinct sequences; enlarge the space")


def _subsequence_copy_distribution(doc, responses, p_len):
    """Exact distribution of drawing an ordered subsequence of doc.

    Pick a length L from p_len (restricted to L <= |doc| and renormalized),
    then one of the C(|doc|, L) index subsets uniformly. The probability of a
    response u is therefore p_len(L) * embeddings(u, doc) / C(|doc|, L) where
    embeddings counts index-increasing occurrences of u in doc.
    """
    M = len(doc)
    length_mass = np.array([p_len[L] if L <= M else 0.0 for L in range(len(p_len))])
    length_mass = length_mass / length_mass.sum()
    out = np.zeros(len(responses))
    for u_idx, resp in enumerate(responses):
        L = len(resp)
        if L > M:
            continue
        dp = [0.0] * (L + 1)
        dp[0] = 1.0
        for tok in doc:
            for j in range(L, 0, -1):
                if tok == resp[j - 1]:
                    dp[j] += dp[j - 1]
        out[u_idx] = length_mass[L] * dp[L] / math.comb(M, L)
    return out


def build_world(spec):
    """Construct the explicit joint for a WorldSpec; deterministic in seed.

    p(u|c,d) = g * copy_d(u) + (1-g) * p_len(|u|) * prod ctx_c(tok), where
    copy_d draws an ordered subsequence of document d (so copying is
    order-preserving and LCS-visible) and ctx_c is a seeded context-only
    token distribution. Rows are renormalized defensively.
    """
    rng = np.random.default_rng(spec.seed)
    vocab = world_vocabulary(spec.vocab_size)
    base = len(RESERVED) + len(CONTROL)
    gen_ids = list(range(base, base + spec.vocab_size))

    if spec.identifying_contexts:
        if spec.vocab_size < 3 or spec.max_context_len < 3:
            raise ConfigError(
                "identifying contexts need vocab_size >= 3 and max_context_len >= 3"
            )
        # The last generated token is reserved as a filler suffix shared by
        # every context: retrieval still identifies the document from the
        # context bag of words, but a short-history scorer looking backwards
        # from <sos> sees only filler.
        documents = _lexically_distinct_sequences(
            rng, gen_ids[:-1], spec.num_documents, spec.max_doc_len
        )
    else:
        documents = _distinct_sequences(
            rng, gen_ids, spec.num_documents, spec.max_doc_len
        )

    contexts = []
    if spec.identifying_contexts:
        filler = gen_ids[-1]
        body_len = spec.max_context_len - 2
        for i in range(spec.num_contexts):
            doc = documents[i % spec.num_documents]
            reps = max(1, body_len // max(1, len(doc)))
            ctx = (doc * reps)[:body_len] if body_len else ()
            contexts.append(tuple(ctx) + (filler, filler))
    else:
        for _ in range(spec.num_contexts):
            length = int(rng.integers(1, spec.max_context_len + 1))
            contexts.append(
                tuple(gen_ids[i] for i in rng.integers(0, len(gen_ids), size=length))
            )

    p_c = _token_distribution(rng, spec.num_contexts)

    p_d_c = np.zeros((spec.num_contexts, spec.num_documents))
    for c in range(spec.num_contexts):
        if spec.identifying_contexts:
            # Point mass: the context names its document, so sampled examples
            # always carry the identified grounding.
            row = np.zeros(spec.num_documents)
            row[c % spec.num_documents] = 1.0
        else:
            row = rng.dirichlet(np.ones(spec.num_documents))
        p_d_c[c] = row / row.sum()

    # Length distribution shared by both response processes; empty responses
    # are down-weighted so surface metrics stay informative.
    alpha = np.full(spec.max_response_len + 1, 2.0)
    alpha[0] = spec.empty_response_weight
    p_len = rng.dirichlet(alpha)

    ctx_tok = np.stack([_token_distribution(rng, spec.vocab_size)
                        for _ in range(spec.num_contexts)])

    responses = enumerate_responses(gen_ids, spec.max_response_len)
    n_resp = len(responses)
    g = spec.grounding_strength

    copy_dist = np.stack([
        _subsequence_copy_distribution(doc, responses, p_len)
        for doc in documents
    ])
    ctx_prod = np.ones((spec.num_contexts, n_resp))
    len_prob = np.empty(n_resp)
    for u_idx, resp in enumerate(responses):
        len_prob[u_idx] = p_len[len(resp)]
        for tok in resp:
            ctx_prod[:, u_idx] *= ctx_tok[:, tok - base]

    p_u_cd = np.empty((spec.num_contexts, spec.num_documents, n_resp))
    for c in range(spec.num_contexts):
        for d in range(spec.num_documents):
            row = g * copy_dist[d] + (1.0 - g) * len_prob * ctx_prod[c]
            total = row.sum()
            if abs(total - 1.0) > ROW_SUM_TOL:
                row = row / total
            p_u_cd[c, d] = row

    return WorldModel(spec, vocab, contexts, documents, p_c, p_d_c, p_u_cd)


def exact_conditional(world, role):
    """Exact conditional tables as scorers (or the retrieval posterior).

    direct            p(u | c, d)
    channel           p(d | u, c) for complete responses u (Bayes over joint)
    channel_partial   p(d | u-prefix, c), summing the joint over completions
    response_lm       p(u | c) = sum_d p(d|c) p(u|c,d)
    retrieval_posterior  {context tuple: array p(d | c)}
    """
    ctxs = [world.contexts[c] for c in range(len(world.contexts))]
    docs = world.documents
    if role == "direct":
        table = {}
        for c, ctx in enumerate(ctxs):
            for d, doc in enumerate(docs):
                table[(ctx, doc, ())] = {
                    resp: float(world.p_u_cd[c, d, u])
                    for u, resp in enumerate(world.responses)
                }
        return TabularScorer(world.vocab, ROLE_DIRECT, table)
    if role == "channel":
        table = {}
        for c, ctx in enumerate(ctxs):
            weights = world.p_d_c[c][:, None] * world.p_u_cd[c]  # (D, U)
            mass_u = weights.sum(axis=0)
            for u, resp in enumerate(world.responses):
                if mass_u[u] <= 0.0:
                    continue
                table[(ctx, resp)] = {
                    doc: float(weights[d, u] / mass_u[u])
                    for d, doc in enumerate(docs)
                }
        return TabularScorer(world.vocab, ROLE_CHANNEL, table)
    if role == "channel_partial":
        table = {}
        for c, ctx in enumerate(ctxs):
            acc = {}
            for d in range(len(docs)):
                w_d = world.p_d_c[c, d]
                for u, resp in enumerate(world.responses):
                    mass = w_d * world.p_u_cd[c, d, u]
                    if mass <= 0.0:
                        continue
                    for n in range(len(resp) + 1):
                        bucket = acc.setdefault(resp[:n], np.zeros(len(docs)))
                        bucket[d] += mass
            for prefix, row in acc.items():
                total = row.sum()
                if total <= 0.0:
                    continue
                table[(ctx, prefix)] = {
                    doc: float(row[d] / total) for d, doc in enumerate(docs)
                }
        return TabularScorer(world.vocab, ROLE_CHANNEL, table)
    if role == "response_lm":
        table = {}
        for c, ctx in enumerate(ctxs):
            mass_u = (world.p_d_c[c][:, None] * world.p_u_cd[c]).sum(axis=0)
            table[(ctx,)] = {
                resp: float(mass_u[u]) for u, resp in enumerate(world.responses)
            }
        return TabularScorer(world.vocab, ROLE_LM, table)
    if role == "retrieval_posterior":
        return {ctx: world.p_d_c[c].copy() for c, ctx in enumerate(ctxs)}
    raise ConfigError("unknown conditional role %r" % (role,))


def sample_dataset(world, n, seed):
    """Draw n i.i.d. (context, document, response) examples from the joint."""
    if n < 1:
        raise ConfigError("n must be >= 1, got %r" % (n,))
    rng = np.random.default_rng(seed)
    n_ctx, n_doc = len(world.contexts), len(world.documents)
    cs = rng.choice(n_ctx, size=n, p=world.p_c)
    examples = []
    for i in range(n):
        c = int(cs[i])
        d = int(rng.choice(n_doc, p=world.p_d_c[c]))
        u = int(rng.choice(len(world.responses), p=world.p_u_cd[c, d]))
        examples.append(
            GroundedExample(
                id="ex%05d" % i,
                context=(Turn("user", world.contexts[c]),),
                document=world.documents[d],
                response=world.responses[u],
            )
        )
    return examples
