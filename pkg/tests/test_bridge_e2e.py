"""End-to-end checks against the TypeScript bridge scorer server.

The whole primary suite runs without the bridge; these tests skip unless the
bridge has been built (bridge/dist/cli.js) and node is on PATH.
"""

import json
import os
import shutil
import subprocess

import pytest

import acceptance_worlds as aw
from ncdecode.decode import BeamConfig, ScalingConfig, online_decode
from ncdecode.experiments import example_condition
from ncdecode.scorers import (
    Condition,
    ROLE_CHANNEL,
    ROLE_DIRECT,
    ROLE_LM,
    save_model,
)
from ncdecode.vocab import SOS
from ncdecode.wire import RemoteScorer
from ncdecode.world import WorldSpec, build_world, sample_dataset

REPO = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
BRIDGE_CLI = os.path.join(REPO, "bridge", "dist", "cli.js")

pytestmark = pytest.mark.skipif(
    shutil.which("node") is None or not os.path.exists(BRIDGE_CLI),
    reason="bridge not built (run: cd bridge && npm install && npm run build)",
)


@pytest.fixture(scope="module")
def bridge_setup(tmp_path_factory):
    root = tmp_path_factory.mktemp("bridge")
    spec = WorldSpec(vocab_size=5, num_documents=3, max_context_len=3,
                     max_doc_len=3, max_response_len=3, num_contexts=4,
                     grounding_strength=0.8, seed=77)
    world = build_world(spec)
    train = sample_dataset(world, 600, seed=1)
    scorers = aw.fit_world_scorers(world, train)
    world.vocab.save(root / "vocab.txt")
    for role, scorer in zip((ROLE_DIRECT, ROLE_CHANNEL, ROLE_LM), scorers):
        save_model(scorer, root / ("%s.json" % role))
    config = {
        "vocab": "vocab.txt",
        "models": {"direct": "direct.json", "channel": "channel.json",
                   "lm": "lm.json"},
        "mapping": None,
        "port": 0,
    }
    config_path = root / "bridge.config.json"
    config_path.write_text(json.dumps(config))
    proc = subprocess.Popen(
        ["node", BRIDGE_CLI, "--config", str(config_path)],
        stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True,
    )
    banner = proc.stdout.readline()
    assert "listening on" in banner, proc.stderr.read()
    port = int(banner.strip().rsplit(":", 1)[1])
    yield world, scorers, port
    proc.terminate()
    proc.wait(timeout=10)


def remote_scorers(world, port):
    return tuple(
        RemoteScorer(world.vocab, role, "127.0.0.1", port)
        for role in (ROLE_DIRECT, ROLE_CHANNEL, ROLE_LM)
    )


class TestBridgeParity:
    def test_next_logprobs_match_local_within_1e6(self, bridge_setup):
        world, (direct, channel, lm), port = bridge_setup
        r_direct, r_channel, r_lm = remote_scorers(world, port)
        examples = sample_dataset(world, 10, seed=4)
        for ex in examples:
            dcond = example_condition(ex)
            local = direct.next_token_logprobs(dcond, (SOS,))
            remote = r_direct.next_token_logprobs(dcond, (SOS,))
            assert remote == pytest.approx(local, abs=1e-6)
            ccond = Condition(context=ex.context, role=ROLE_CHANNEL,
                              response_prefix=ex.response)
            framed = (SOS,) + ex.document + (1,)
            assert r_channel.sequence_logprob(ccond, framed) == pytest.approx(
                channel.sequence_logprob(ccond, framed), abs=1e-6
            )
            lcond = Condition(context=ex.context, role=ROLE_LM)
            local_lm = lm.next_token_logprobs(lcond, (SOS,) + ex.response[:1])
            remote_lm = r_lm.next_token_logprobs(lcond, (SOS,) + ex.response[:1])
            assert remote_lm == pytest.approx(local_lm, abs=1e-6)
        for scorer in (r_direct, r_channel, r_lm):
            scorer.close()

    def test_seq_equals_sum_of_next_through_bridge(self, bridge_setup):
        world, _, port = bridge_setup
        _, _, r_lm = remote_scorers(world, port)
        cond = Condition(context=(), role=ROLE_LM)
        gen = world.generated_ids()
        seq = (SOS, gen[0], gen[2], 1)
        total = sum(
            r_lm.next_token_logprobs(cond, seq[:i])[seq[i]]
            for i in range(1, len(seq))
        )
        assert r_lm.sequence_logprob(cond, seq) == pytest.approx(total, abs=1e-4)
        r_lm.close()


class TestBridgeDecoding:
    def test_online_decoding_matches_local_on_fifty_examples(self, bridge_setup):
        world, (direct, channel, lm), port = bridge_setup
        r_direct, r_channel, r_lm = remote_scorers(world, port)
        examples = sample_dataset(world, 50, seed=5)
        scaling = ScalingConfig(1.0, 0.6, 0.4)
        cfg = BeamConfig(beam=3, max_len=world.spec.max_response_len + 1)
        mismatches = 0
        for ex in examples:
            cond = example_condition(ex)
            local_hyp = online_decode(direct, channel, lm, cond, scaling, cfg)
            remote_hyp = online_decode(r_direct, r_channel, r_lm, cond,
                                       scaling, cfg)
            mismatches += local_hyp.tokens != remote_hyp.tokens
        assert mismatches == 0
        for scorer in (r_direct, r_channel, r_lm):
            scorer.close()


class TestBridgeSelftest:
    def test_golden_conformance_exit_code(self):
        result = subprocess.run(
            ["node", BRIDGE_CLI,
             "--config", os.path.join(REPO, "bridge", "testdata",
                                      "bridge.config.json"),
             "--selftest", os.path.join(REPO, "bridge", "testdata",
                                        "golden_pairs.jsonl")],
            capture_output=True, text=True, cwd=REPO,
        )
        assert result.returncode == 0, result.stderr
        assert "all golden pairs replayed" in result.stdout
