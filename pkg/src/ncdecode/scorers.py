"""Locally-normalized conditional sequence models.

Three roles share one interface:

  direct   p(response | context, document[, control])
  channel  p(document | response-prefix, context)
  lm       p(response | context)

All log-probabilities are natural log, float64. Every scorer is immutable
after construction and safe to call from concurrent workers.

Conditioning is realized by a fixed linearization (empty components are
dropped, which shortens the prefix):

  direct   [document <sep> flattened-context <sep> control] <sos> response
  channel  [flattened-context <sep> response-prefix] <sos> document
  lm       [flattened-context] <sos> response

where flattened-context joins turn token sequences with <sep>.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .vocab import EOS, SEP, SOS, Vocabulary

ROLE_DIRECT = "direct"
ROLE_CHANNEL = "channel"
ROLE_LM = "lm"
ROLES = (ROLE_DIRECT, ROLE_CHANNEL, ROLE_LM)

NORMALIZATION_TOL = 1e-6


@dataclass(frozen=True)
class Condition:
    """Everything to the right of the conditioning bar.

    role=direct requires a document; role=lm forbids one; role=channel forbids
    a document (the document is the sequence being scored) and instead carries
    the partially generated response in response_prefix.
    """

    context: tuple
    role: str
    document: tuple = None
    control: tuple = None
    response_prefix: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "context", tuple(self.context))
        for name in ("document", "control", "response_prefix"):
            val = getattr(self, name)
            if val is not None:
                object.__setattr__(self, name, tuple(val))
        if self.role not in ROLES:
            raise ConfigError("unknown scorer role %r" % (self.role,))
        if self.role == ROLE_DIRECT and self.document is None:
            raise ConfigError("direct conditioning requires a document")
        if self.role != ROLE_DIRECT and self.document is not None:
            raise ConfigError("%s conditioning must not carry a document" % self.role)
        if self.role == ROLE_CHANNEL and self.response_prefix is None:
            raise ConfigError("channel conditioning requires a response prefix")
        if self.role != ROLE_CHANNEL and self.response_prefix is not None:
            raise ConfigError("response_prefix is only valid for the channel role")


def flatten_context(turns):
    """Join turn token sequences with <sep>; drops speaker tags."""
    flat = []
    for i, turn in enumerate(turns):
        if i > 0:
            flat.append(SEP)
        flat.extend(turn.tokens)
    return tuple(flat)


def linearize_conditioning(condition):
    """Conditioning token sequence per the module linearization (no <sos>)."""
    ctx = flatten_context(condition.context)
    if condition.role == ROLE_DIRECT:
        parts = [condition.document, ctx, condition.control or ()]
    elif condition.role == ROLE_CHANNEL:
        parts = [ctx, condition.response_prefix]
    else:
        parts = [ctx]
    out = []
    for part in parts:
        if part:
            if out:
                out.append(SEP)
            out.extend(part)
    return tuple(out)


class Scorer:
    """Base scorer; subclasses implement next_token_logprobs."""

    def __init__(self, vocab, role):
        if role not in ROLES:
            raise ConfigError("unknown scorer role %r" % (role,))
        self.vocab = vocab
        self.role = role

    def next_token_logprobs(self, condition, prefix):
        """Vector of |V| natural-log probabilities for the next token.

        prefix is the target-side prefix and must begin with <sos>.
        """
        raise NotImplementedError

    def _check_prefix(self, condition, prefix):
        if not prefix or prefix[0] != SOS:
            raise ConfigError("prefix must begin with <sos>")
        if condition.role != self.role:
            raise ConfigError(
                "condition role %r does not match scorer role %r"
                % (condition.role, self.role)
            )

    def sequence_logprob(self, condition, sequence):
        """Chain-rule log-probability of a <sos>..<eos> framed sequence.

        Deliberately implemented as the sum of per-step calls so that the
        chain-rule consistency property holds by construction.
        """
        sequence = tuple(sequence)
        if len(sequence) < 2 or sequence[0] != SOS or sequence[-1] != EOS:
            raise ConfigError("sequence must be <sos>..<eos> framed")
        total = 0.0
        for i in range(1, len(sequence)):
            step = self.next_token_logprobs(condition, sequence[:i])[sequence[i]]
            total += step
            if total == float("-inf"):
                break
        return total

    def prefix_logprob(self, condition, prefix):
        """Log-probability mass of an unterminated prefix (no <eos> factor)."""
        prefix = tuple(prefix)
        if not prefix or prefix[0] != SOS:
            raise ConfigError("prefix must begin with <sos>")
        total = 0.0
        for i in range(1, len(prefix)):
            total += self.next_token_logprobs(condition, prefix[:i])[prefix[i]]
            if total == float("-inf"):
                break
        return total


class UniformScorer(Scorer):
    """Assigns -ln|V| to every token at every step; handy as a fixture."""

    def next_token_logprobs(self, condition, prefix):
        self._check_prefix(condition, prefix)
        return [-math.log(len(self.vocab))] * len(self.vocab)


def _condition_key(condition):
    ctx = flatten_context(condition.context)
    if condition.role == ROLE_DIRECT:
        return (ctx, condition.document, condition.control or ())
    if condition.role == ROLE_CHANNEL:
        return (ctx, condition.response_prefix)
    return (ctx,)


class TabularScorer(Scorer):
    """Exact scorer backed by an explicit distribution over whole sequences.

    table maps a conditioning key (see _condition_key) to {content-tuple:
    probability}. Per-step conditionals are ratios of prefix masses, so the
    factorization is exactly locally normalized. Conditioning keys or prefixes
    outside the table fall back to a uniform distribution, keeping the scorer
    total.
    """

    def __init__(self, vocab, role, table):
        super().__init__(vocab, role)
        self.table = {
            key: {tuple(seq): float(p) for seq, p in dist.items()}
            for key, dist in table.items()
        }
        self._tries = {}

    def _trie(self, key):
        trie = self._tries.get(key)
        if trie is None:
            trie = {}
            for seq, prob in self.table[key].items():
                for n in range(len(seq) + 1):
                    node = trie.setdefault(seq[:n], [0.0, 0.0])
                    node[0] += prob
                node = trie[seq]
                node[1] += prob
            self._tries[key] = trie
        return trie

    def next_token_logprobs(self, condition, prefix):
        self._check_prefix(condition, prefix)
        size = len(self.vocab)
        uniform = [-math.log(size)] * size
        key = _condition_key(condition)
        if key not in self.table:
            return uniform
        trie = self._trie(key)
        content = tuple(prefix[1:])
        node = trie.get(content)
        if node is None or node[0] <= 0.0:
            return uniform
        mass, exact = node
        out = [float("-inf")] * size
        for v in range(size):
            child = trie.get(content + (v,))
            if child is not None and child[0] > 0.0:
                out[v] = math.log(child[0]) - math.log(mass)
        out[EOS] = math.log(exact) - math.log(mass) if exact > 0.0 else float("-inf")
        return out


class NgramScorer(Scorer):
    """Add-k smoothed n-gram model over linearized conditioning + target.

    Histories are the previous order-1 tokens of the linearized sequence
    (shorter near the start). Fitting counts target content tokens only, so
    the termination probability comes entirely from the smoothing floor.
    """

    def __init__(self, vocab, role, order, k, counts=None, context_totals=None):
        super().__init__(vocab, role)
        if not 1 <= order <= 6:
            raise ConfigError("n-gram order must be in [1, 6], got %r" % (order,))
        if not k > 0:
            raise ConfigError("add-k smoothing constant must be > 0, got %r" % (k,))
        self.order = order
        self.k = float(k)
        self.counts = counts if counts is not None else {}
        self.context_totals = context_totals if context_totals is not None else {}

    def _history(self, working, position):
        lo = max(0, position - (self.order - 1))
        return tuple(working[lo:position])

    def next_token_logprobs(self, condition, prefix):
        self._check_prefix(condition, prefix)
        working = linearize_conditioning(condition) + tuple(prefix)
        hist = self._history(working, len(working))
        size = len(self.vocab)
        denom = self.context_totals.get(hist, 0) + self.k * size
        log_denom = math.log(denom)
        seen = self.counts.get(hist, {})
        log_k = math.log(self.k)
        out = [log_k - log_denom] * size
        for v, c in seen.items():
            out[v] = math.log(c + self.k) - log_denom
        return out

    def to_dict(self):
        counts = {}
        for hist in sorted(self.counts):
            counts[" ".join(map(str, hist))] = {
                str(v): c for v, c in sorted(self.counts[hist].items())
            }
        return {
            "format": "ncdecode-ngram-v1",
            "role": self.role,
            "order": self.order,
            "k": self.k,
            "vocab_hash": self.vocab.sha256(),
            "vocab_tokens": list(self.vocab.tokens),
            "counts": counts,
        }

    @classmethod
    def from_dict(cls, obj, vocab):
        if obj.get("format") != "ncdecode-ngram-v1":
            raise DataError("not an n-gram model file: format %r" % obj.get("format"))
        if obj["vocab_hash"] != vocab.sha256():
            raise DataError("model vocabulary hash mismatch")
        counts, totals = {}, {}
        for hist_s, dist in obj["counts"].items():
            hist = tuple(int(t) for t in hist_s.split()) if hist_s else ()
            counts[hist] = {int(v): int(c) for v, c in dist.items()}
            totals[hist] = sum(counts[hist].values())
        return cls(vocab, obj["role"], obj["order"], obj["k"], counts, totals)


def fit_ngram(corpus, order, k, vocab, role):
    """Fit an add-k n-gram scorer on (Condition, target content) pairs.

    Every target position is a counted event, including the terminating
    <eos>, so sequence termination is learned rather than left to the
    smoothing floor. The k -> 0 limit is the maximum-likelihood estimate of
    the observed events; unseen histories fall back to the uniform floor.
    """
    if not corpus:
        raise ConfigError("cannot fit an n-gram model on an empty corpus")
    scorer = NgramScorer(vocab, role, order, k)
    for condition, target in corpus:
        if condition.role != role:
            raise ConfigError(
                "corpus condition role %r does not match %r" % (condition.role, role)
            )
        working = list(linearize_conditioning(condition)) + [SOS] + list(target) + [EOS]
        start = len(working) - len(target) - 1
        for i in range(start, len(working)):
            hist = scorer._history(working, i)
            tok = working[i]
            bucket = scorer.counts.setdefault(hist, {})
            bucket[tok] = bucket.get(tok, 0) + 1
            scorer.context_totals[hist] = scorer.context_totals.get(hist, 0) + 1
    return scorer


@dataclass(frozen=True)
class TruncationPolicy:
    """How channel training responses are truncated; seed fixed per run."""

    distribution: str = "uniform"
    seed: int = 0

    def __post_init__(self):
        if self.distribution not in ("uniform", "none"):
            raise ConfigError(
                "truncation distribution must be uniform|none, got %r"
                % (self.distribution,)
            )


def make_channel_training_pairs(examples, policy):
    """Build (Condition, document) pairs with uniformly truncated responses.

    Under the uniform policy the conditioning response is the prefix of the
    gold response with length n ~ Uniform{0..N}; policy "none" keeps full
    responses. The channel model must score partial hypotheses at inference,
    and this is the training-side mechanism that makes it able to.
    """
    rng = np.random.default_rng(policy.seed)
    pairs = []
    for ex in examples:
        if ex.response is None:
            raise DataError("example %s has no response" % ex.id)
        if policy.distribution == "uniform":
            n = int(rng.integers(0, len(ex.response) + 1))
            prefix = ex.response[:n]
        else:
            prefix = ex.response
        cond = Condition(
            context=ex.context, role=ROLE_CHANNEL, response_prefix=prefix
        )
        pairs.append((cond, ex.document))
    return pairs


def lexical_precision(response, document):
    """|set(response) & set(document)| / |set(response)|; 0 for empty response."""
    resp, doc = set(response), set(document)
    if not resp:
        return 0.0
    return len(resp & doc) / len(resp)


def annotate_control_tokens(example, vocab, high_threshold=0.7, low_threshold=0.3):
    """One overlap-bucket control token for an example.

    Buckets by lexical precision of the response against the document (set
    semantics): >= high -> <ctrl-high>, <= low -> <ctrl-low>, else <ctrl-mid>.
    At inference the harness forces <ctrl-high>.
    """
    if not 0.0 <= low_threshold <= high_threshold <= 1.0:
        raise ConfigError("thresholds must satisfy 0 <= low <= high <= 1")
    precision = lexical_precision(example.response or (), example.document)
    if not example.response:
        level = "low"
    elif precision >= high_threshold:
        level = "high"
    elif precision <= low_threshold:
        level = "low"
    else:
        level = "mid"
    return (vocab.control_id(level),)


def save_model(scorer, path):
    if not isinstance(scorer, (NgramScorer, TabularScorer)):
        raise ConfigError("only n-gram and tabular scorers are file-backed")
    if isinstance(scorer, NgramScorer):
        obj = scorer.to_dict()
    else:
        obj = tabular_to_dict(scorer)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True)
        fh.write("\n")


def tabular_to_dict(scorer):
    table = {}
    for key, dist in scorer.table.items():
        key_s = json.dumps([list(part) for part in key])
        table[key_s] = {" ".join(map(str, seq)): p for seq, p in dist.items()}
    return {
        "format": "ncdecode-tabular-v1",
        "role": scorer.role,
        "vocab_hash": scorer.vocab.sha256(),
        "vocab_tokens": list(scorer.vocab.tokens),
        "table": table,
    }


def tabular_from_dict(obj, vocab):
    if obj.get("format") != "ncdecode-tabular-v1":
        raise DataError("not a tabular model file: format %r" % obj.get("format"))
    if obj["vocab_hash"] != vocab.sha256():
        raise DataError("model vocabulary hash mismatch")
    table = {}
    for key_s, dist in obj["table"].items():
        key = tuple(tuple(part) for part in json.loads(key_s))
        table[key] = {
            tuple(int(t) for t in seq_s.split()) if seq_s else (): p
            for seq_s, p in dist.items()
        }
    return TabularScorer(vocab, obj["role"], table)


def load_model(path, vocab=None):
    """Load a model file; checks the vocabulary hash.

    When vocab is None the vocabulary embedded in the file is used.
    """
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if vocab is None:
        if "vocab_tokens" not in obj:
            raise DataError("model file carries no vocabulary and none was given")
        vocab = Vocabulary(obj["vocab_tokens"])
    fmt = obj.get("format")
    if fmt == "ncdecode-ngram-v1":
        return NgramScorer.from_dict(obj, vocab)
    if fmt == "ncdecode-tabular-v1":
        return tabular_from_dict(obj, vocab)
    raise DataError("unknown model file format %r" % (fmt,))


def check_normalized(logprobs, tol=NORMALIZATION_TOL):
    total = math.fsum(math.exp(lp) for lp in logprobs)
    return abs(total - 1.0) <= tol
