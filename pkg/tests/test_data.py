import json

import pytest

from ncdecode.data import (
    GroundedExample,
    Turn,
    example_to_record,
    load_collection,
    load_dataset,
    save_dataset,
    truncate_example,
)
from ncdecode.errors import DataError


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")


GOOD_ROW = {
    "id": "1",
    "context": [{"speaker": "user", "text": "delta"}],
    "document": "alpha beta",
    "response": "alpha",
}


def test_load_basic(tmp_path, small_vocab):
    path = tmp_path / "data.jsonl"
    write_jsonl(path, [GOOD_ROW])
    examples = load_dataset(path, small_vocab)
    assert len(examples) == 1
    ex = examples[0]
    assert len(ex.context) == 1
    assert len(ex.document) == 2


def test_load_empty_file(tmp_path, small_vocab):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    assert load_dataset(path, small_vocab) == []


def test_missing_document_names_line(tmp_path, small_vocab):
    row = dict(GOOD_ROW)
    del row["document"]
    path = tmp_path / "bad.jsonl"
    write_jsonl(path, [row])
    with pytest.raises(DataError, match="document missing at line 1"):
        load_dataset(path, small_vocab)


def test_malformed_line_names_line(tmp_path, small_vocab):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"id": "1"\n')
    with pytest.raises(DataError, match="line 1"):
        load_dataset(path, small_vocab)


def test_marker_injection_rejected(tmp_path, small_vocab):
    row = dict(GOOD_ROW, document="a <sos> b")
    path = tmp_path / "inj.jsonl"
    write_jsonl(path, [row])
    with pytest.raises(DataError, match="<sos>"):
        load_dataset(path, small_vocab)


def test_round_trip_normalizes(tmp_path, small_vocab):
    row = dict(GOOD_ROW, document="Alpha   BETA", response="alpha")
    path = tmp_path / "data.jsonl"
    write_jsonl(path, [row])
    examples = load_dataset(path, small_vocab)
    record = example_to_record(examples[0], small_vocab)
    assert record["document"] == "alpha beta"
    out = tmp_path / "out.jsonl"
    save_dataset(examples, small_vocab, out)
    assert load_dataset(out, small_vocab) == examples


def test_bad_speaker_rejected():
    with pytest.raises(DataError):
        Turn("narrator", (5,))


def test_truncate_keeps_recent():
    turns = (Turn("user", (10, 11, 12)), Turn("system", (13, 14)))
    ex = GroundedExample(id="x", context=turns, document=tuple(range(10)), response=(10,))
    cut = truncate_example(ex, max_history=3, max_document=4)
    kept = [t.tokens for t in cut.context]
    assert kept == [(12,), (13, 14)]
    assert cut.document == (0, 1, 2, 3)
    old = truncate_example(ex, max_history=3, max_document=4, keep="oldest")
    assert [t.tokens for t in old.context] == [(10, 11, 12)]


def test_collection_load(tmp_path, small_vocab):
    path = tmp_path / "coll.jsonl"
    write_jsonl(path, [{"doc_id": "d0", "text": "alpha beta"},
                       {"doc_id": "d1", "text": "gamma"}])
    coll = load_collection(path, small_vocab)
    assert coll.ids() == ["d0", "d1"]
    with pytest.raises(DataError):
        write_jsonl(path, [{"doc_id": "d0"}])
        load_collection(path, small_vocab)
