#!/usr/bin/env python3
"""Generate the bridge conformance fixtures under bridge/testdata/.

Exports engine-fitted n-gram models plus an exact tabular model, parity
probes (expected log-probs computed by the in-process scorers), and ten
golden request/response pairs recorded through the same evaluation path the
mock scorer server uses. Deterministic; rerunning overwrites identical
bytes.
"""

import json
import os
import sys

sys.path.insert(0, "src")

from ncdecode.scorers import (
    Condition,
    ROLE_CHANNEL,
    ROLE_DIRECT,
    ROLE_LM,
    TabularScorer,
    TruncationPolicy,
    fit_ngram,
    make_channel_training_pairs,
    save_model,
)
from ncdecode.vocab import EOS, SOS
from ncdecode.wire import condition_to_wire, evaluate_request
from ncdecode.world import WorldSpec, build_world, sample_dataset

OUT = os.path.join("bridge", "testdata")

SPEC = WorldSpec(
    vocab_size=5, num_documents=3, max_context_len=3, max_doc_len=3,
    max_response_len=3, num_contexts=4, grounding_strength=0.8, seed=77,
)


def fit_models(world, train):
    direct = fit_ngram(
        [(Condition(context=ex.context, role=ROLE_DIRECT, document=ex.document),
          ex.response) for ex in train],
        order=3, k=0.1, vocab=world.vocab, role=ROLE_DIRECT,
    )
    channel = fit_ngram(
        make_channel_training_pairs(train, TruncationPolicy("uniform", 9)),
        order=3, k=0.1, vocab=world.vocab, role=ROLE_CHANNEL,
    )
    lm = fit_ngram(
        [(Condition(context=ex.context, role=ROLE_LM), ex.response)
         for ex in train],
        order=3, k=0.1, vocab=world.vocab, role=ROLE_LM,
    )
    return direct, channel, lm


def probe_conditions(world, examples):
    gen = world.generated_ids()
    ex = examples[0]
    other = examples[1]
    return [
        ("direct", Condition(context=ex.context, role=ROLE_DIRECT,
                             document=ex.document), (SOS,)),
        ("direct", Condition(context=other.context, role=ROLE_DIRECT,
                             document=other.document), (SOS, gen[0])),
        ("channel", Condition(context=ex.context, role=ROLE_CHANNEL,
                              response_prefix=ex.response), (SOS,)),
        ("channel", Condition(context=ex.context, role=ROLE_CHANNEL,
                              response_prefix=ex.response[:1]),
         (SOS, ex.document[0])),
        ("lm", Condition(context=ex.context, role=ROLE_LM), (SOS,)),
        ("lm", Condition(context=other.context, role=ROLE_LM),
         (SOS, gen[1], gen[2])),
    ]


def wire_request(request_id, op, condition, prefix, target):
    obj = {"id": request_id, "op": op, "role": condition.role}
    obj.update(condition_to_wire(condition))
    if condition.role == ROLE_CHANNEL:
        obj["prefix"] = list(condition.response_prefix)
    else:
        obj["prefix"] = list(prefix) if prefix is not None else []
    obj["target"] = list(target) if target is not None else None
    return obj


def main():
    os.makedirs(OUT, exist_ok=True)
    world = build_world(SPEC)
    train = sample_dataset(world, 600, seed=1)
    examples = sample_dataset(world, 10, seed=2)
    direct, channel, lm = fit_models(world, train)

    world.vocab.save(os.path.join(OUT, "vocab.txt"))
    for role, scorer in (("direct", direct), ("channel", channel), ("lm", lm)):
        save_model(scorer, os.path.join(OUT, "%s.json" % role))
    # An exact tabular export exercises -Infinity serialization paths.
    ctx = world.contexts[0]
    tabular = TabularScorer(
        world.vocab, ROLE_LM,
        {(ctx,): {world.responses[3]: 0.25, world.responses[9]: 0.75}},
    )
    save_model(tabular, os.path.join(OUT, "tabular_lm.json"))

    scorers = {ROLE_DIRECT: direct, ROLE_CHANNEL: channel, ROLE_LM: lm}

    probes = []
    for role, cond, prefix in probe_conditions(world, examples):
        scorer = scorers[role]
        probes.append({
            "op": "next",
            "request": wire_request("p%d" % len(probes), "next", cond,
                                    prefix if role != "channel" else None,
                                    prefix if role == "channel" else None),
            "expected_logprobs": list(scorer.next_token_logprobs(cond, prefix)),
        })
    for role, cond, _ in probe_conditions(world, examples)[:4]:
        scorer = scorers[role]
        target_src = examples[2].response if role != "channel" else examples[0].document
        framed = (SOS,) + tuple(target_src) + (EOS,)
        probes.append({
            "op": "seq",
            "request": wire_request("p%d" % len(probes), "seq", cond, None, framed),
            "expected_logprob": scorer.sequence_logprob(cond, framed),
        })
    with open(os.path.join(OUT, "parity_probes.jsonl"), "w") as fh:
        for probe in probes:
            fh.write(json.dumps(probe, sort_keys=True) + "\n")

    goldens = []
    for i, (role, cond, prefix) in enumerate(probe_conditions(world, examples)):
        goldens.append(wire_request("g%d" % i, "next", cond,
                                    prefix if role != "channel" else None,
                                    prefix if role == "channel" else None))
    for i, (role, cond, _) in enumerate(probe_conditions(world, examples)[:3]):
        target_src = examples[3].response if role != "channel" else examples[1].document
        framed = (SOS,) + tuple(target_src) + (EOS,)
        goldens.append(wire_request("g%d" % (6 + i), "seq", cond, None, framed))
    goldens.append({"id": "g9", "op": "nope", "role": "lm", "context": [],
                    "document": None, "control": None, "prefix": [SOS],
                    "target": None})
    assert len(goldens) == 10
    with open(os.path.join(OUT, "golden_pairs.jsonl"), "w") as fh:
        for request in goldens:
            try:
                response = evaluate_request(request, scorers)
            except Exception as exc:
                response = {"id": request.get("id"), "error": str(exc)}
            fh.write(json.dumps({"request": request, "response": response},
                                sort_keys=True) + "\n")
    print("wrote fixtures to %s" % OUT)


if __name__ == "__main__":
    main()
