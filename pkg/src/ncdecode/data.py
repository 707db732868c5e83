"""Dialog data model and JSONL dataset ingestion."""

import json
from dataclasses import dataclass, field

from .errors import DataError
from .vocab import MARKER_FORMS, detokenize, tokenize

SPEAKERS = ("user", "system")


@dataclass(frozen=True)
class Turn:
    speaker: str
    tokens: tuple

    def __post_init__(self):
        if self.speaker not in SPEAKERS:
            raise DataError("unknown speaker %r" % (self.speaker,))
        object.__setattr__(self, "tokens", tuple(self.tokens))


@dataclass(frozen=True)
class GroundedExample:
    """One grounded dialog turn: context u_1..u_T, document, gold response.

    Sequences hold raw content token ids only; start/end markers are added by
    scorers and decoders, never stored.
    """

    id: str
    context: tuple
    document: tuple
    response: tuple = None
    control: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "context", tuple(self.context))
        object.__setattr__(self, "document", tuple(self.document))
        if self.response is not None:
            object.__setattr__(self, "response", tuple(self.response))
        if self.control is not None:
            object.__setattr__(self, "control", tuple(self.control))


@dataclass(frozen=True)
class DocumentCollection:
    documents: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.documents:
            raise DataError("document collection must hold at least one document")
        object.__setattr__(
            self, "documents", {k: tuple(v) for k, v in self.documents.items()}
        )

    def ids(self):
        return sorted(self.documents)


def _check_no_markers(text, what, line_no):
    for tok in text.lower().split():
        if tok in MARKER_FORMS:
            raise DataError(
                "marker token %r not allowed in raw text (%s at line %d)"
                % (tok, what, line_no)
            )


def _parse_record(obj, line_no, vocab):
    for name in ("id", "context", "document"):
        if name not in obj:
            raise DataError("%s missing at line %d" % (name, line_no))
    turns = []
    for t in obj["context"]:
        if "speaker" not in t or "text" not in t:
            raise DataError("context turn missing speaker/text at line %d" % line_no)
        _check_no_markers(t["text"], "context", line_no)
        turns.append(Turn(t["speaker"], tokenize(t["text"], vocab)))
    _check_no_markers(obj["document"], "document", line_no)
    response = None
    if obj.get("response") is not None:
        _check_no_markers(obj["response"], "response", line_no)
        response = tuple(tokenize(obj["response"], vocab))
    control = None
    if obj.get("control") is not None:
        control = tuple(tokenize(obj["control"], vocab))
    return GroundedExample(
        id=str(obj["id"]),
        context=tuple(turns),
        document=tuple(tokenize(obj["document"], vocab)),
        response=response,
        control=control,
    )


def load_dataset(path, vocab):
    """Load a JSONL dataset; record order preserved, errors name the line."""
    examples = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError("malformed JSON at line %d: %s" % (line_no, exc))
            examples.append(_parse_record(obj, line_no, vocab))
    return examples


def example_to_record(example, vocab):
    """Render an example back to its JSONL object form."""
    obj = {
        "id": example.id,
        "context": [
            {"speaker": t.speaker, "text": detokenize(t.tokens, vocab)}
            for t in example.context
        ],
        "document": detokenize(example.document, vocab),
    }
    if example.response is not None:
        obj["response"] = detokenize(example.response, vocab)
    if example.control is not None:
        obj["control"] = detokenize(example.control, vocab)
    return obj


def save_dataset(examples, vocab, path):
    with open(path, "w", encoding="utf-8") as fh:
        for ex in examples:
            fh.write(json.dumps(example_to_record(ex, vocab), sort_keys=True))
            fh.write("\n")


def truncate_example(example, max_history=384, max_document=128, keep="recent"):
    """Cap context/document lengths.

    keep="recent" keeps the most recent history tokens (default); keep="oldest"
    keeps the front. The document is always cut from the end.
    """
    if keep not in ("recent", "oldest"):
        raise DataError("keep must be 'recent' or 'oldest', got %r" % (keep,))
    total = sum(len(t.tokens) for t in example.context)
    context = example.context
    if total > max_history:
        turns = list(context) if keep == "oldest" else list(reversed(context))
        budget, kept = max_history, []
        for turn in turns:
            if budget <= 0:
                break
            toks = turn.tokens[:budget] if keep == "oldest" else turn.tokens[-budget:]
            kept.append(Turn(turn.speaker, toks))
            budget -= len(toks)
        context = tuple(kept if keep == "oldest" else reversed(kept))
    document = example.document[:max_document]
    return GroundedExample(
        id=example.id,
        context=context,
        document=document,
        response=example.response,
        control=example.control,
    )


def load_collection(path, vocab):
    """Load a JSONL document collection: one {"doc_id", "text"} per line."""
    docs = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError("malformed JSON at line %d: %s" % (line_no, exc))
            for name in ("doc_id", "text"):
                if name not in obj:
                    raise DataError("%s missing at line %d" % (name, line_no))
            if obj["doc_id"] in docs:
                raise DataError("duplicate doc_id %r at line %d" % (obj["doc_id"], line_no))
            docs[obj["doc_id"]] = tuple(tokenize(obj["text"], vocab))
    return DocumentCollection(docs)


def save_collection(collection, vocab, path):
    with open(path, "w", encoding="utf-8") as fh:
        for doc_id in collection.ids():
            fh.write(
                json.dumps(
                    {"doc_id": doc_id, "text": detokenize(collection.documents[doc_id], vocab)},
                    sort_keys=True,
                )
            )
            fh.write("\n")
