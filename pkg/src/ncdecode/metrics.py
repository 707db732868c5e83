"""Surface metrics: token-level F1, LCS ratio, corpus BLEU, perplexity.

token_f1 and lcs_ratio are the factuality proxies (response vs grounding);
BLEU compares against gold responses; perplexity is the fluency proxy under a
response LM. All are pure functions.
"""

import math
from collections import Counter
from dataclasses import dataclass, field

from .errors import ConfigError
from .vocab import EOS, SOS


def token_f1(response, document):
    """F1 over multiset token overlap; 0 when either side is empty."""
    if not response or not document:
        return 0.0
    rc, dc = Counter(response), Counter(document)
    overlap = sum(min(c, dc[t]) for t, c in rc.items())
    if overlap == 0:
        return 0.0
    precision = overlap / len(response)
    recall = overlap / len(document)
    return 2.0 * precision * recall / (precision + recall)


def lcs_length(a, b):
    """Longest common subsequence length by the standard dynamic program."""
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            cur.append(prev[j - 1] + 1 if x == y else max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def lcs_ratio(response, document):
    """LCS length normalized by the evaluated response length; 0 if empty."""
    if not response:
        return 0.0
    return lcs_length(response, document) / len(response)


def _ngrams(seq, n):
    return [tuple(seq[i : i + n]) for i in range(len(seq) - n + 1)]


@dataclass
class BleuStats:
    """Corpus-summed sufficient statistics for BLEU."""

    matches: list
    totals: list
    hyp_len: int = 0
    ref_len: int = 0

    @classmethod
    def zeros(cls, max_n):
        return cls(matches=[0] * max_n, totals=[0] * max_n)

    def add(self, hypothesis, reference, max_n):
        self.hyp_len += len(hypothesis)
        self.ref_len += len(reference)
        for n in range(1, max_n + 1):
            hyp_counts = Counter(_ngrams(hypothesis, n))
            ref_counts = Counter(_ngrams(reference, n))
            self.matches[n - 1] += sum(
                min(c, ref_counts[g]) for g, c in hyp_counts.items()
            )
            self.totals[n - 1] += sum(hyp_counts.values())

    def score(self, eps=1e-9):
        # Orders with no n-grams anywhere in the hypothesis corpus are skipped;
        # the epsilon floor protects only genuinely zero precisions.
        precisions = []
        for m, t in zip(self.matches, self.totals):
            if t > 0:
                precisions.append(m / t if m > 0 else eps)
        if self.hyp_len == 0 or not precisions:
            return 0.0
        log_mean = math.fsum(math.log(p) for p in precisions) / len(precisions)
        bp = 1.0 if self.hyp_len > self.ref_len else math.exp(
            1.0 - self.ref_len / self.hyp_len
        )
        return bp * math.exp(log_mean)


def corpus_bleu(hypotheses, references, max_n=4, eps=1e-9):
    """Corpus BLEU with brevity penalty and epsilon-floored precisions.

    Computed on corpus-summed counts; single reference per hypothesis.
    """
    if len(hypotheses) != len(references):
        raise ConfigError(
            "hypotheses/references length mismatch: %d vs %d"
            % (len(hypotheses), len(references))
        )
    if not references:
        raise ConfigError("references must be non-empty")
    stats = BleuStats.zeros(max_n)
    for hyp, ref in zip(hypotheses, references):
        stats.add(tuple(hyp), tuple(ref), max_n)
    return stats.score(eps)


def perplexity(lm_scorer, sequences, conditions):
    """Token-weighted corpus perplexity: exp(-total logprob / total tokens).

    Token counts include <eos>. This pools over the corpus, which differs
    from averaging per-sequence perplexities.
    """
    total_lp, total_tokens = 0.0, 0
    for content, cond in zip(sequences, conditions):
        framed = (SOS,) + tuple(content) + (EOS,)
        total_lp += lm_scorer.sequence_logprob(cond, framed)
        total_tokens += len(content) + 1
    if total_tokens == 0:
        return 1.0
    return math.exp(-total_lp / total_tokens)


@dataclass
class MetricReport:
    """Per-example metric values plus corpus aggregates."""

    token_f1_mean: float = 0.0
    lcs_ratio_mean: float = 0.0
    bleu: float = 0.0
    perplexity: float = None
    n_examples: int = 0
    per_example: list = field(default_factory=list)
    bleu_stats: dict = field(default_factory=dict)
    ppl_stats: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "token_f1_mean": self.token_f1_mean,
            "lcs_ratio_mean": self.lcs_ratio_mean,
            "bleu": self.bleu,
            "perplexity": self.perplexity,
            "n_examples": self.n_examples,
            "bleu_stats": self.bleu_stats,
            "ppl_stats": self.ppl_stats,
        }


def evaluate_outputs(examples, contents, lm_scorer=None, lm_conditions=None, max_n=4):
    """Score decoded contents against their examples.

    token_f1/lcs_ratio compare each content against the example document;
    BLEU compares against the gold response; perplexity (optional) pools the
    LM scores of the contents.
    """
    if len(examples) != len(contents):
        raise ConfigError("examples/contents length mismatch")
    stats = BleuStats.zeros(max_n)
    per_example, f1s, lcss = [], [], []
    for ex, content in zip(examples, contents):
        content = tuple(content)
        f1 = token_f1(content, ex.document)
        lcs = lcs_ratio(content, ex.document)
        f1s.append(f1)
        lcss.append(lcs)
        stats.add(content, ex.response or (), max_n)
        per_example.append(
            {"id": ex.id, "token_f1": f1, "lcs_ratio": lcs, "length": len(content)}
        )
    report = MetricReport(
        token_f1_mean=sum(f1s) / len(f1s) if f1s else 0.0,
        lcs_ratio_mean=sum(lcss) / len(lcss) if lcss else 0.0,
        bleu=stats.score() if examples else 0.0,
        n_examples=len(examples),
        per_example=per_example,
        bleu_stats={
            "matches": list(stats.matches),
            "totals": list(stats.totals),
            "hyp_len": stats.hyp_len,
            "ref_len": stats.ref_len,
        },
    )
    if lm_scorer is not None:
        total_lp, total_tokens = 0.0, 0
        for content, cond in zip(contents, lm_conditions):
            framed = (SOS,) + tuple(content) + (EOS,)
            total_lp += lm_scorer.sequence_logprob(cond, framed)
            total_tokens += len(content) + 1
        report.perplexity = math.exp(-total_lp / total_tokens) if total_tokens else 1.0
        report.ppl_stats = {"total_logprob": total_lp, "total_tokens": total_tokens}
    return report
