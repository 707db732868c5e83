import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ncdecode.errors import ConfigError
from ncdecode.metrics import (
    corpus_bleu,
    evaluate_outputs,
    lcs_length,
    lcs_ratio,
    perplexity,
    token_f1,
)
from ncdecode.scorers import Condition, ROLE_LM, TabularScorer, UniformScorer
from ncdecode.vocab import EOS, SOS
from ncdecode.world import exact_conditional, sample_dataset


class TestTokenF1:
    def test_set_case(self):
        assert token_f1(("a", "b", "c"), ("b", "c", "d")) == pytest.approx(2 / 3)

    def test_identical(self):
        assert token_f1((1, 2, 3), (1, 2, 3)) == 1.0

    def test_multiset_overlap(self):
        # response "a a b" vs document "a b b": overlap = min(2,1)+min(1,2) = 2.
        assert token_f1(("a", "a", "b"), ("a", "b", "b")) == pytest.approx(2 / 3)

    def test_empty_sides(self):
        assert token_f1((), (1,)) == 0.0
        assert token_f1((1,), ()) == 0.0

    @given(st.lists(st.integers(0, 5), max_size=6), st.permutations(range(6)))
    def test_relabeling_invariance(self, seq, perm):
        doc = tuple(range(3))
        relabeled = tuple(perm[t] for t in seq)
        relabeled_doc = tuple(perm[t] for t in doc)
        assert token_f1(tuple(seq), doc) == pytest.approx(
            token_f1(relabeled, relabeled_doc)
        )


class TestLcsRatio:
    def test_subsequence_full(self):
        assert lcs_ratio(tuple("abc"), tuple("axbc")) == 1.0

    def test_disjoint(self):
        assert lcs_ratio(tuple("ab"), tuple("cd")) == 0.0

    def test_hand_dp(self):
        # LCS("a b a", "b a b") = 2.
        assert lcs_length(tuple("aba"), tuple("bab")) == 2
        assert lcs_ratio(tuple("aba"), tuple("bab")) == pytest.approx(2 / 3)

    def test_empty_response(self):
        assert lcs_ratio((), (1, 2)) == 0.0

    @given(st.lists(st.integers(0, 5), min_size=1, max_size=6),
           st.permutations(range(6)))
    def test_relabeling_invariance(self, seq, perm):
        doc = (0, 1, 2, 3)
        a = lcs_ratio(tuple(seq), doc)
        b = lcs_ratio(tuple(perm[t] for t in seq), tuple(perm[t] for t in doc))
        assert a == pytest.approx(b)

    def test_self_identity_matches_f1(self):
        seq = (4, 5, 6)
        assert token_f1(seq, seq) == lcs_ratio(seq, seq) == 1.0


class TestCorpusBleu:
    def test_identical_is_one(self):
        refs = [tuple("abcd"), tuple("efg")]
        assert corpus_bleu(refs, refs) == pytest.approx(1.0)

    def test_brevity_penalty_case(self):
        hyp = [tuple("a b c d".split())]
        ref = [tuple("a b c d e".split())]
        assert corpus_bleu(hyp, ref) == pytest.approx(math.exp(-0.25), abs=1e-9)

    def test_epsilon_floor_near_zero(self):
        hyp = [("a", "b")]
        ref = [("c", "d")]
        assert corpus_bleu(hyp, ref) < 1e-4

    def test_length_mismatch(self):
        with pytest.raises(ConfigError):
            corpus_bleu([("a",)], [])

    def test_one_iff_exact_match(self):
        hyp = [tuple("abcd"), tuple("efg")]
        ref = [tuple("abcd"), tuple("efh")]
        assert corpus_bleu(hyp, ref) < 1.0


def lm_cond():
    return Condition(context=(), role=ROLE_LM)


class TestPerplexity:
    def test_uniform_four(self, reserved_only_vocab):
        scorer = UniformScorer(reserved_only_vocab, ROLE_LM)
        seqs = [(2, 2), (2,), ()]
        conds = [lm_cond()] * len(seqs)
        assert perplexity(scorer, seqs, conds) == pytest.approx(4.0, abs=1e-9)

    def test_point_mass_is_one(self, reserved_only_vocab):
        seqs = [(2, 2), (3,)]
        table = {((),): {(2, 2): 0.5, (3,): 0.5}}
        scorer = TabularScorer(reserved_only_vocab, ROLE_LM, table)
        # Each sequence factorizes as p(seq)=0.5 over 3 and 2 tokens: not a
        # point mass; construct per-sequence point tables instead.
        one = TabularScorer(reserved_only_vocab, ROLE_LM, {((),): {(2, 2): 1.0}})
        assert perplexity(one, [(2, 2)], [lm_cond()]) == pytest.approx(1.0, abs=1e-12)

    def test_pooling_differs_from_mean_of_ppls(self, reserved_only_vocab):
        table = {((),): {(2,): 0.9, (2, 2, 2): 0.1}}
        scorer = TabularScorer(reserved_only_vocab, ROLE_LM, table)
        seqs = [(2,), (2, 2, 2)]
        conds = [lm_cond()] * 2
        lps = [
            scorer.sequence_logprob(lm_cond(), (SOS,) + s + (EOS,)) for s in seqs
        ]
        pooled = math.exp(-(lps[0] + lps[1]) / (2 + 4))
        mean_of_ppls = 0.5 * (
            math.exp(-lps[0] / 2) + math.exp(-lps[1] / 4)
        )
        got = perplexity(scorer, seqs, conds)
        assert got == pytest.approx(pooled, rel=1e-12)
        assert abs(got - mean_of_ppls) > 1e-6

    def test_matches_world_entropy_rate(self, tiny_world):
        lm = exact_conditional(tiny_world, "response_lm")
        n = 4000
        examples = sample_dataset(tiny_world, n, seed=21)
        conds = [Condition(context=ex.context, role=ROLE_LM) for ex in examples]
        ppl = perplexity(lm, [ex.response for ex in examples], conds)

        # Exact moments of X = -ln p(u|c), Y = len(u)+1 under the joint.
        p_u_c = np.einsum("cd,cdu->cu", tiny_world.p_d_c, tiny_world.p_u_cd)
        lens = np.array([len(r) + 1 for r in tiny_world.responses], dtype=float)
        w = tiny_world.p_c[:, None] * p_u_c
        with np.errstate(divide="ignore"):
            x = -np.log(p_u_c)
        x[np.isinf(x)] = 0.0  # zero-probability cells carry zero weight
        mu_x = float((w * x).sum())
        mu_y = float((w * lens[None, :]).sum())
        var_x = float((w * (x - mu_x) ** 2).sum())
        var_y = float((w * (lens[None, :] - mu_y) ** 2).sum())
        cov = float((w * (x - mu_x) * (lens[None, :] - mu_y)).sum())
        rate = mu_x / mu_y
        sd = math.sqrt(
            max(var_x - 2 * rate * cov + rate**2 * var_y, 0.0) / n
        ) / mu_y
        assert abs(math.log(ppl) - rate) <= 4 * sd + 1e-9


class TestEvaluateOutputs:
    def test_report_aggregates(self, tiny_world):
        examples = sample_dataset(tiny_world, 5, seed=3)
        contents = [ex.response for ex in examples]
        report = evaluate_outputs(examples, contents)
        assert report.n_examples == 5
        assert report.bleu == pytest.approx(1.0)
        per = [row["token_f1"] for row in report.per_example]
        assert report.token_f1_mean == pytest.approx(sum(per) / len(per))
