import json
import math

import numpy as np
import pytest

from ncdecode.errors import ConfigError
from ncdecode.scorers import Condition, ROLE_CHANNEL, ROLE_DIRECT, ROLE_LM
from ncdecode.vocab import EOS, SOS
from ncdecode.world import (
    WorldModel,
    WorldSpec,
    build_world,
    enumerate_responses,
    exact_conditional,
    sample_dataset,
    world_vocabulary,
)


def framed(seq):
    return (SOS,) + tuple(seq) + (EOS,)


class TestWorldSpec:
    def test_guard(self):
        with pytest.raises(ConfigError, match="enumerability"):
            WorldSpec(vocab_size=10, num_documents=2, max_context_len=2,
                      max_doc_len=2, max_response_len=7)

    def test_bad_strength(self):
        with pytest.raises(ConfigError):
            WorldSpec(vocab_size=3, num_documents=2, max_context_len=2,
                      max_doc_len=2, max_response_len=2, grounding_strength=1.5)


class TestBuildWorld:
    def test_deterministic(self, tiny_world):
        again = build_world(tiny_world.spec)
        assert again.to_dict() == tiny_world.to_dict()

    def test_rows_normalized(self, tiny_world):
        assert np.allclose(tiny_world.p_c.sum(), 1.0, atol=1e-9)
        assert np.allclose(tiny_world.p_d_c.sum(axis=-1), 1.0, atol=1e-9)
        assert np.allclose(tiny_world.p_u_cd.sum(axis=-1), 1.0, atol=1e-9)

    def test_full_copy_modal_response_uses_document_tokens(self):
        spec = WorldSpec(vocab_size=4, num_documents=3, max_context_len=3,
                         max_doc_len=3, max_response_len=3, num_contexts=3,
                         grounding_strength=1.0, seed=3)
        world = build_world(spec)
        for c in range(len(world.contexts)):
            for d, doc in enumerate(world.documents):
                modal = world.responses[int(np.argmax(world.p_u_cd[c, d]))]
                assert set(modal) <= set(doc)

    def test_no_grounding_ignores_document(self):
        spec = WorldSpec(vocab_size=4, num_documents=3, max_context_len=3,
                         max_doc_len=3, max_response_len=2, num_contexts=2,
                         grounding_strength=0.0, seed=3)
        world = build_world(spec)
        for c in range(len(world.contexts)):
            for d in range(1, len(world.documents)):
                assert np.allclose(world.p_u_cd[c, 0], world.p_u_cd[c, d])

    def test_save_load_round_trip(self, tiny_world, tmp_path):
        path = tmp_path / "world.json"
        tiny_world.save(path)
        loaded = WorldModel.load(path)
        assert loaded.to_dict() == tiny_world.to_dict()
        assert np.array_equal(loaded.p_u_cd, tiny_world.p_u_cd)


class TestExactConditionals:
    def test_tabular_matches_table_entry_for_entry(self, tiny_world):
        direct = exact_conditional(tiny_world, "direct")
        cond = tiny_world.context_condition(
            1, ROLE_DIRECT, document=tiny_world.documents[2]
        )
        for u_idx in range(0, len(tiny_world.responses), 7):
            resp = tiny_world.responses[u_idx]
            expected = tiny_world.p_u_cd[1, 2, u_idx]
            got = math.exp(direct.sequence_logprob(cond, framed(resp)))
            assert got == pytest.approx(expected, rel=1e-9)

    def test_channel_full_equals_partial_at_max_length(self, tiny_world):
        channel = exact_conditional(tiny_world, "channel")
        partial = exact_conditional(tiny_world, "channel_partial")
        max_len = tiny_world.spec.max_response_len
        full = [r for r in tiny_world.responses if len(r) == max_len]
        for resp in full[:20]:
            cond = tiny_world.context_condition(
                0, ROLE_CHANNEL, response_prefix=resp
            )
            for doc in tiny_world.documents:
                a = channel.sequence_logprob(cond, framed(doc))
                b = partial.sequence_logprob(cond, framed(doc))
                assert math.exp(a) == pytest.approx(math.exp(b), abs=1e-12)

    def test_retrieval_posterior_rows_sum_to_one(self, tiny_world):
        post = exact_conditional(tiny_world, "retrieval_posterior")
        for row in post.values():
            assert row.sum() == pytest.approx(1.0, abs=1e-12)

    def test_prefix_marginal_consistency(self, tiny_world):
        partial = exact_conditional(tiny_world, "channel_partial")
        c = 2
        ctx = tiny_world.contexts[c]
        prefix = tiny_world.responses[6][:1]
        # Brute-force: p(d | prefix, c) = sum_{u extends prefix} p(d, u | c) / Z
        masses = np.zeros(len(tiny_world.documents))
        for d in range(len(tiny_world.documents)):
            for u_idx, resp in enumerate(tiny_world.responses):
                if resp[: len(prefix)] == prefix:
                    masses[d] += tiny_world.p_d_c[c, d] * tiny_world.p_u_cd[c, d, u_idx]
        masses /= masses.sum()
        cond = tiny_world.context_condition(c, ROLE_CHANNEL, response_prefix=prefix)
        for d, doc in enumerate(tiny_world.documents):
            got = math.exp(partial.sequence_logprob(cond, framed(doc)))
            assert got == pytest.approx(masses[d], rel=1e-9)

    def test_bayes_identity_constructed_two_doc_world(self):
        # One context, two documents with p(d0|c) = 0.7: for every response u
        # with positive direct probability,
        #   channel(d0|u,c) * lm(u|c) / direct(u|c,d0) = 0.7.
        spec = WorldSpec(vocab_size=2, num_documents=2, max_context_len=1,
                         max_doc_len=2, max_response_len=2, num_contexts=1,
                         seed=0)
        vocab = world_vocabulary(2)
        base = 7
        responses = enumerate_responses((base, base + 1), 2)
        rng = np.random.default_rng(4)
        p_u = rng.dirichlet(np.ones(len(responses)), size=(1, 2))
        world = WorldModel(
            spec, vocab,
            contexts=[(base,)],
            documents=[(base, base), (base + 1,)],
            p_c=[1.0],
            p_d_c=[[0.7, 0.3]],
            p_u_cd=p_u,
        )
        direct = exact_conditional(world, "direct")
        channel = exact_conditional(world, "channel")
        lm = exact_conditional(world, "response_lm")
        dcond = world.context_condition(0, ROLE_DIRECT, document=world.documents[0])
        lcond = world.context_condition(0, ROLE_LM)
        for resp in responses:
            ccond = world.context_condition(0, ROLE_CHANNEL, response_prefix=resp)
            ratio = math.exp(
                channel.sequence_logprob(ccond, framed(world.documents[0]))
                + lm.sequence_logprob(lcond, framed(resp))
                - direct.sequence_logprob(dcond, framed(resp))
            )
            assert ratio == pytest.approx(0.7, rel=1e-9)

    def test_bayes_consistency_random_world(self, tiny_world):
        direct = exact_conditional(tiny_world, "direct")
        channel = exact_conditional(tiny_world, "channel")
        lm = exact_conditional(tiny_world, "response_lm")
        for c in range(len(tiny_world.contexts)):
            lcond = tiny_world.context_condition(c, ROLE_LM)
            for d, doc in enumerate(tiny_world.documents):
                dcond = tiny_world.context_condition(c, ROLE_DIRECT, document=doc)
                for u_idx in range(0, len(tiny_world.responses), 11):
                    resp = tiny_world.responses[u_idx]
                    if tiny_world.p_u_cd[c, d, u_idx] <= 0:
                        continue
                    ccond = tiny_world.context_condition(
                        c, ROLE_CHANNEL, response_prefix=resp
                    )
                    lhs = math.exp(
                        channel.sequence_logprob(ccond, framed(doc))
                        + lm.sequence_logprob(lcond, framed(resp))
                    )
                    rhs = math.exp(
                        direct.sequence_logprob(dcond, framed(resp))
                    ) * tiny_world.p_d_c[c, d]
                    assert lhs == pytest.approx(rhs, rel=1e-9)


class TestSampleDataset:
    def test_n_validation(self, tiny_world):
        with pytest.raises(ConfigError):
            sample_dataset(tiny_world, 0, seed=0)
        assert len(sample_dataset(tiny_world, 1, seed=0)) == 1

    def test_same_seed_identical(self, tiny_world):
        a = sample_dataset(tiny_world, 50, seed=9)
        b = sample_dataset(tiny_world, 50, seed=9)
        assert a == b

    def test_document_marginal_total_variation(self, tiny_world):
        n = 100000
        examples = sample_dataset(tiny_world, n, seed=1)
        doc_index = {doc: i for i, doc in enumerate(tiny_world.documents)}
        counts = np.zeros(len(tiny_world.documents))
        for ex in examples:
            counts[doc_index[ex.document]] += 1
        empirical = counts / n
        exact = tiny_world.p_c @ tiny_world.p_d_c
        tv = 0.5 * np.abs(empirical - exact).sum()
        assert tv <= 0.01
