#!/usr/bin/env python3
"""Run every decoder on one grounded example and compare their picks.

Fits n-gram scorers for the three roles on sampled world data, then decodes
one test example with direct beam search, noisy-channel reranking, both
online variants, and the exact enumeration oracle.
"""

from ncdecode import (
    BeamConfig,
    ONLINE_SCALING,
    RERANK_SCALING,
    WorldSpec,
    beam_search_direct,
    build_world,
    enumerate_oracle,
    fit_ngram,
    make_channel_training_pairs,
    online_decode,
    online_decode_liu,
    rerank,
    sample_dataset,
)
from ncdecode.experiments import example_condition
from ncdecode.metrics import token_f1
from ncdecode.scorers import Condition, ROLE_CHANNEL, ROLE_DIRECT, ROLE_LM, TruncationPolicy
from ncdecode.vocab import detokenize

spec = WorldSpec(
    vocab_size=6, num_documents=4, max_context_len=3, max_doc_len=4,
    max_response_len=4, num_contexts=8, grounding_strength=0.7, seed=101,
)
world = build_world(spec)
train = sample_dataset(world, 4000, seed=1)
example = sample_dataset(world, 50, seed=2)[7]

direct = fit_ngram(
    [(Condition(context=ex.context, role=ROLE_DIRECT, document=ex.document),
      ex.response) for ex in train],
    order=4, k=0.1, vocab=world.vocab, role=ROLE_DIRECT,
)
channel = fit_ngram(
    make_channel_training_pairs(train, TruncationPolicy("uniform", 5)),
    order=4, k=0.1, vocab=world.vocab, role=ROLE_CHANNEL,
)
lm = fit_ngram(
    [(Condition(context=ex.context, role=ROLE_LM), ex.response) for ex in train],
    order=4, k=0.1, vocab=world.vocab, role=ROLE_LM,
)

cond = example_condition(example)
cfg = BeamConfig(beam=4, max_len=6)
print("document:      %r" % detokenize(example.document, world.vocab))
print("gold response: %r" % detokenize(example.response, world.vocab))
print()

nbest = beam_search_direct(direct, cond, cfg)
reranked = rerank(nbest, channel, lm, RERANK_SCALING)
ours = online_decode(direct, channel, lm, cond, ONLINE_SCALING, cfg)
liu = online_decode_liu(
    direct, channel, lm, cond, ONLINE_SCALING,
    BeamConfig(beam=4, liu_k1=4, liu_k2=4, max_len=6),
)
oracle, _ = enumerate_oracle(direct, channel, lm, cond, ONLINE_SCALING,
                             max_len=5, length_normalize=True)

for name, hyp in (
    ("direct beam",   nbest[0]),
    ("reranked",      reranked),
    ("online (ours)", ours),
    ("online (two-stage)", liu),
    ("oracle",        oracle),
):
    text = detokenize(hyp.content, world.vocab)
    print("%-18s %-24r f1=%.3f  direct=%7.3f channel=%7.3f lm=%7.3f"
          % (name, text, token_f1(hyp.content, example.document),
             hyp.direct_lp, hyp.channel_lp, hyp.lm_lp))
