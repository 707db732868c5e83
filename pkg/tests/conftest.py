import sys

import pytest

from ncdecode.data import Turn
from ncdecode.scorers import Condition, ROLE_DIRECT
from ncdecode.vocab import RESERVED, Vocabulary, build_vocabulary
from ncdecode.world import WorldSpec, build_world


def pytest_runtest_logreport(report):
    # One visible pass/fail line per acceptance criterion.
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        status = "PASS" if report.passed else "FAIL"
        sys.stderr.write("\n[ACCEPTANCE] %s: %s\n" % (name, status))


@pytest.fixture
def small_vocab():
    return build_vocabulary(["alpha beta gamma delta epsilon"], min_count=1)


@pytest.fixture
def reserved_only_vocab():
    return Vocabulary(RESERVED)


@pytest.fixture
def tiny_world():
    spec = WorldSpec(
        vocab_size=4,
        num_documents=3,
        max_context_len=3,
        max_doc_len=3,
        max_response_len=3,
        num_contexts=4,
        grounding_strength=0.7,
        seed=7,
    )
    return build_world(spec)


@pytest.fixture
def tiny_condition(tiny_world):
    return tiny_world.context_condition(
        0, ROLE_DIRECT, document=tiny_world.documents[0]
    )


def make_turn(vocab, text):
    from ncdecode.vocab import tokenize

    return Turn("user", tokenize(text, vocab))


def direct_condition(vocab, context_text, document_text, control=None):
    from ncdecode.vocab import tokenize

    return Condition(
        context=(make_turn(vocab, context_text),),
        role=ROLE_DIRECT,
        document=tuple(tokenize(document_text, vocab)),
        control=control,
    )
