"""Decoding procedures for the noisy-channel objective.

Implements standard direct beam search, n-best reranking, two online
beam-search variants that score partial hypotheses with the channel and
response models, and an exact enumeration oracle. All decoders are pure
functions of (scorers, condition, configs): repeated runs are byte-identical.

Conventions shared by every decoder here:
  * hypothesis token sequences start with <sos>; generated length counts
    everything after it, including <eos>;
  * ties are broken by the lexicographically smaller token sequence;
  * markers other than <eos> are never proposed as extensions;
  * zero-probability (-inf) candidates are dropped;
  * finished hypotheses leave the active beam for a finished pool, and the
    step loop ends once the pool holds k finished entries or max_len
    generated tokens are reached;
  * length normalization (score / generated length) applies only at final
    selection, never during search.
"""

import logging
import math
from dataclasses import dataclass, field, replace

from .errors import ConfigError
from .scorers import Condition, ROLE_CHANNEL, ROLE_DIRECT, ROLE_LM
from .vocab import EOS, SOS

log = logging.getLogger(__name__)

NEG_INF = float("-inf")

# Operating points from the factor sweep; reranking and online decoding get
# their own defaults.
RERANK_SCALING = None  # set below once ScalingConfig exists
ONLINE_SCALING = None


@dataclass(frozen=True)
class ScalingConfig:
    """Non-negative exponents weighting the three model contributions."""

    lambda_direct: float = 1.0
    lambda_channel: float = 0.0
    lambda_lm: float = 0.0

    def __post_init__(self):
        for name in ("lambda_direct", "lambda_channel", "lambda_lm"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val >= 0.0):
                raise ConfigError("%s must be finite and >= 0, got %r" % (name, val))


RERANK_SCALING = ScalingConfig(1.0, 0.5, 0.2)
ONLINE_SCALING = ScalingConfig(1.0, 0.6, 0.4)


@dataclass(frozen=True)
class BeamConfig:
    beam: int = 4
    liu_k1: int = None
    liu_k2: int = None
    max_len: int = 16
    length_normalize_final: bool = True

    def __post_init__(self):
        if self.beam < 1 or self.max_len < 1:
            raise ConfigError("beam and max_len must be >= 1")
        for name in ("liu_k1", "liu_k2"):
            val = getattr(self, name)
            if val is not None and val < 1:
                raise ConfigError("%s must be >= 1" % name)

    @property
    def effective_beam(self):
        if self.liu_k1 is not None and self.liu_k2 is not None:
            return self.liu_k1 * self.liu_k2
        return self.beam


@dataclass(frozen=True)
class Hypothesis:
    tokens: tuple
    finished: bool
    direct_lp: float = 0.0
    channel_lp: float = 0.0
    lm_lp: float = 0.0
    combined: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))

    @property
    def content(self):
        """Generated tokens without <sos> and the trailing <eos>."""
        toks = self.tokens[1:]
        if self.finished and toks and toks[-1] == EOS:
            toks = toks[:-1]
        return toks

    @property
    def generated_len(self):
        return len(self.tokens) - 1


@dataclass(frozen=True)
class NBestList:
    hypotheses: tuple
    condition: Condition = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        hyps = tuple(
            sorted(self.hypotheses, key=lambda h: (-h.combined, h.tokens))
        )
        object.__setattr__(self, "hypotheses", hyps)

    def __len__(self):
        return len(self.hypotheses)

    def __getitem__(self, i):
        return self.hypotheses[i]


def combined_score(hyp, scaling):
    """The lambda-weighted sum of the breakdown terms."""
    return _combine(hyp.direct_lp, hyp.channel_lp, hyp.lm_lp, scaling)


def _combine(direct_lp, channel_lp, lm_lp, scaling):
    total = 0.0
    for lam, lp in (
        (scaling.lambda_direct, direct_lp),
        (scaling.lambda_channel, channel_lp),
        (scaling.lambda_lm, lm_lp),
    ):
        if lam != 0.0:
            total += lam * lp
    return total


def _selection_key(hyp, length_normalize):
    score = hyp.combined
    if length_normalize:
        score = score / hyp.generated_len
    return (-score, hyp.tokens)


def _pick_final(pool, leftovers, length_normalize):
    """Final selection: finished hypotheses win; unfinished only if none did."""
    if pool:
        return min(pool, key=lambda h: _selection_key(h, length_normalize))
    if leftovers:
        best = min(leftovers, key=lambda h: _selection_key(h, length_normalize))
        log.warning("no hypothesis finished; returning best unfinished")
        return best
    return Hypothesis(tokens=(SOS,), finished=False)


def _channel_condition(condition, content):
    return Condition(
        context=condition.context, role=ROLE_CHANNEL, response_prefix=content
    )


def _lm_condition(condition):
    return Condition(context=condition.context, role=ROLE_LM)


class _OnlineRescorer:
    """Refreshes channel and LM log-probs for survivor prefixes.

    Rescoring is recomputed from scratch each step for correctness; the local
    scorers are cheap enough that incremental scoring is not worth its bugs.
    """

    def __init__(self, condition, channel_scorer, lm_scorer, scaling):
        self.condition = condition
        self.channel = channel_scorer
        self.lm = lm_scorer
        self.scaling = scaling
        if condition.role != ROLE_DIRECT:
            raise ConfigError("online decoding conditions on the direct role")
        self.framed_doc = (SOS,) + tuple(condition.document) + (EOS,)

    def channel_lp(self, content):
        if self.scaling.lambda_channel == 0.0:
            return 0.0
        cond = _channel_condition(self.condition, content)
        return self.channel.sequence_logprob(cond, self.framed_doc)

    def lm_lp(self, tokens, finished):
        if self.scaling.lambda_lm == 0.0:
            return 0.0
        cond = _lm_condition(self.condition)
        if finished:
            return self.lm.sequence_logprob(cond, tokens)
        return self.lm.prefix_logprob(cond, tokens)

    def rescore(self, tokens, direct_lp, finished):
        hyp = Hypothesis(tokens=tokens, finished=finished, direct_lp=direct_lp)
        content = hyp.content
        channel_lp = self.channel_lp(content)
        lm_lp = self.lm_lp(tokens, finished)
        combined = _combine(direct_lp, channel_lp, lm_lp, self.scaling)
        return replace(hyp, channel_lp=channel_lp, lm_lp=lm_lp, combined=combined)


def _start_hypothesis(rescorer=None):
    if rescorer is None:
        return Hypothesis(tokens=(SOS,), finished=False)
    return rescorer.rescore((SOS,), 0.0, finished=False)


def beam_search_direct(direct_scorer, condition, cfg):
    """Standard beam search over the direct log-probability.

    Returns up to beam finished hypotheses; when nothing finishes within
    max_len, the best unfinished hypothesis is returned flagged unfinished.
    """
    if condition.role != ROLE_DIRECT:
        raise ConfigError("beam_search_direct requires a direct condition")
    k = cfg.beam
    allowed = direct_scorer.vocab.generatable_ids()
    active = [Hypothesis(tokens=(SOS,), finished=False)]
    pool, leftovers = [], []
    for _ in range(cfg.max_len):
        if not active or len(pool) >= k:
            break
        cands = []
        for hyp in active:
            lps = direct_scorer.next_token_logprobs(condition, hyp.tokens)
            for v in allowed:
                score = hyp.direct_lp + lps[v]
                if score > NEG_INF:
                    cands.append((score, hyp.tokens + (v,), v))
        cands.sort(key=lambda c: (-c[0], c[1]))
        active = []
        for score, tokens, v in cands[:k]:
            hyp = Hypothesis(
                tokens=tokens, finished=(v == EOS), direct_lp=score, combined=score
            )
            (pool if v == EOS else active).append(hyp)
    leftovers = active
    if not pool:
        best = _pick_final([], leftovers, length_normalize=False)
        hyps = (best,) if best.tokens != (SOS,) else ()
    else:
        hyps = tuple(
            sorted(pool, key=lambda h: (-h.combined, h.tokens))[:k]
        )
    return NBestList(
        hypotheses=hyps,
        condition=condition,
        provenance={"decoder": "direct", "beam": k, "max_len": cfg.max_len},
    )


def rerank(nbest, channel_scorer, lm_scorer, scaling, condition=None):
    """Rescore a completed n-best list with the noisy-channel objective.

    Every hypothesis gets full-sequence channel and LM log-probs; the argmax
    of the combined score wins, ties to the lexicographically smaller token
    sequence. A scorer failure excludes that hypothesis with a warning; if
    every hypothesis fails the failure propagates.
    """
    if len(nbest) == 0:
        raise ConfigError("cannot rerank an empty n-best list")
    condition = condition or nbest.condition
    if condition is None:
        raise ConfigError("rerank needs the decoding condition")
    finished = [h for h in nbest.hypotheses if h.finished]
    if finished and len(finished) != len(nbest):
        hyps = finished
    elif finished:
        hyps = list(nbest.hypotheses)
    else:
        hyps = list(nbest.hypotheses)  # all unfinished: allowed
    rescorer = _OnlineRescorer(condition, channel_scorer, lm_scorer, scaling)
    rescored, failures = [], []
    for hyp in hyps:
        try:
            rescored.append(rescorer.rescore(hyp.tokens, hyp.direct_lp, hyp.finished))
        except Exception as exc:  # scorer failure: exclude with a warning
            failures.append((hyp.tokens, exc))
            log.warning("rerank: excluding hypothesis %s: %s", hyp.tokens, exc)
    if not rescored:
        raise failures[0][1]
    return min(rescored, key=lambda h: (-h.combined, h.tokens))


def online_decode(direct_scorer, channel_scorer, lm_scorer, condition, scaling, cfg):
    """Noisy-channel beam search scoring partial hypotheses.

    Per step, extensions of every beam entry are ranked by the direct
    next-token log-prob of the extension plus the combined score of the
    prefix; the top beam candidates survive, and survivors' channel/LM terms
    are refreshed on the extended prefixes before the next step. Final
    selection maximizes combined / generated-length when
    cfg.length_normalize_final is set.
    """
    rescorer = _OnlineRescorer(condition, channel_scorer, lm_scorer, scaling)
    k = cfg.beam
    allowed = direct_scorer.vocab.generatable_ids()
    active = [_start_hypothesis(rescorer)]
    pool = []
    for _ in range(cfg.max_len):
        if not active or len(pool) >= k:
            break
        cands = []
        for hyp in active:
            lps = direct_scorer.next_token_logprobs(condition, hyp.tokens)
            for v in allowed:
                key = hyp.combined + lps[v]
                if key > NEG_INF:
                    cands.append((key, hyp.tokens + (v,), hyp.direct_lp + lps[v], v))
        cands.sort(key=lambda c: (-c[0], c[1]))
        active = []
        for _, tokens, direct_lp, v in cands[:k]:
            new = rescorer.rescore(tokens, direct_lp, finished=(v == EOS))
            (pool if v == EOS else active).append(new)
    return _pick_final(pool, active, cfg.length_normalize_final)


def online_decode_liu(direct_scorer, channel_scorer, lm_scorer, condition, scaling, cfg):
    """Two-stage online variant with beam sizes k1 (proposals) and k2 (beam).

    Each of the k2 beam entries proposes its top-k1 extensions by direct
    score alone; the pooled k1*k2 candidates are rescored with the full
    combined objective (channel and LM on the extended prefixes) and pruned
    back to k2. The effective beam size is k1*k2.
    """
    if cfg.liu_k1 is None or cfg.liu_k2 is None:
        raise ConfigError("liu variant requires liu_k1 and liu_k2")
    k1, k2 = cfg.liu_k1, cfg.liu_k2
    rescorer = _OnlineRescorer(condition, channel_scorer, lm_scorer, scaling)
    allowed = direct_scorer.vocab.generatable_ids()
    active = [_start_hypothesis(rescorer)]
    pool = []
    for _ in range(cfg.max_len):
        if not active or len(pool) >= k2:
            break
        rescored = []
        for hyp in active:
            lps = direct_scorer.next_token_logprobs(condition, hyp.tokens)
            proposals = sorted(
                ((lps[v], v) for v in allowed if lps[v] > NEG_INF),
                key=lambda c: (-c[0], c[1]),
            )[:k1]
            for lp, v in proposals:
                rescored.append(
                    rescorer.rescore(
                        hyp.tokens + (v,), hyp.direct_lp + lp, finished=(v == EOS)
                    )
                )
        rescored.sort(key=lambda h: (-h.combined, h.tokens))
        active = []
        for hyp in rescored[:k2]:
            (pool if hyp.finished else active).append(hyp)
    return _pick_final(pool, active, cfg.length_normalize_final)


def enumerate_oracle(
    direct_scorer,
    channel_scorer,
    lm_scorer,
    condition,
    scaling,
    max_len,
    length_normalize=False,
):
    """Exact argmax of the combined objective by exhaustive enumeration.

    Enumerates every <eos>-terminated sequence with generated length (content
    plus <eos>) at most max_len, scores each with the full breakdown, and
    returns the argmax plus the complete score table. Ties go to the
    lexicographically smaller sequence.
    """
    vocab = direct_scorer.vocab
    gen_ids = tuple(i for i in vocab.generatable_ids() if i != EOS)
    if len(gen_ids) ** max_len > 10**6:
        raise ConfigError(
            "enumerability guard violated: %d^%d sequences" % (len(gen_ids), max_len)
        )
    rescorer = _OnlineRescorer(condition, channel_scorer, lm_scorer, scaling)
    lm_cond = _lm_condition(condition)

    table = []
    best, best_key = None, None
    stack = [()]
    while stack:
        content = stack.pop()
        if len(content) + 1 <= max_len:
            tokens = (SOS,) + content + (EOS,)
            direct_lp = direct_scorer.sequence_logprob(condition, tokens)
            channel_lp = rescorer.channel_lp(content)
            lm_lp = (
                lm_scorer.sequence_logprob(lm_cond, tokens)
                if scaling.lambda_lm != 0.0
                else 0.0
            )
            combined = _combine(direct_lp, channel_lp, lm_lp, scaling)
            hyp = Hypothesis(
                tokens=tokens,
                finished=True,
                direct_lp=direct_lp,
                channel_lp=channel_lp,
                lm_lp=lm_lp,
                combined=combined,
            )
            table.append(hyp)
            key = _selection_key(hyp, length_normalize)
            if best_key is None or key < best_key:
                best, best_key = hyp, key
        if len(content) < max_len - 1:
            for v in reversed(gen_ids):
                stack.append(content + (v,))
    return best, table
