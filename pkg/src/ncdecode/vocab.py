"""Closed token inventory with reserved markers and lowercase whitespace tokenization."""

import hashlib
from collections import Counter

from .errors import ConfigError, DataError

RESERVED = ("<sos>", "<eos>", "<unk>", "<sep>")
CONTROL = ("<ctrl-high>", "<ctrl-mid>", "<ctrl-low>")
SOS, EOS, UNK, SEP = 0, 1, 2, 3

# Markers may never appear in raw text; rejected at dataset load time.
MARKER_FORMS = frozenset(RESERVED) | frozenset(CONTROL)


class Vocabulary:
    """Ordered token inventory.

    Positions 0..3 are always the reserved symbols <sos>, <eos>, <unk>, <sep>,
    in that order. Control markers, when present, follow immediately after.
    Lookups are total: unknown surface forms map to <unk>.
    """

    def __init__(self, tokens):
        tokens = list(tokens)
        if tuple(tokens[:4]) != RESERVED:
            raise ConfigError(
                "vocabulary must start with the reserved symbols %s" % (RESERVED,)
            )
        counts = Counter(tokens)
        dupes = [t for t, c in counts.items() if c > 1]
        if dupes:
            raise ConfigError("duplicate vocabulary tokens: %s" % sorted(dupes))
        self.tokens = tuple(tokens)
        self._index = {t: i for i, t in enumerate(tokens)}

    def __len__(self):
        return len(self.tokens)

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.tokens == other.tokens

    def id(self, token):
        return self._index.get(token, UNK)

    def token(self, token_id):
        return self.tokens[token_id]

    @property
    def has_control(self):
        return all(t in self._index for t in CONTROL)

    def control_id(self, level):
        """Token id of the <ctrl-{level}> marker; level is high|mid|low."""
        form = "<ctrl-%s>" % level
        if form not in self._index:
            raise ConfigError("vocabulary has no control marker %s" % form)
        return self._index[form]

    def marker_ids(self):
        """Ids of all marker tokens present (reserved plus control forms)."""
        return frozenset(
            self._index[t] for t in MARKER_FORMS if t in self._index
        )

    def generatable_ids(self):
        """Ids a decoder may emit: every non-marker token plus <eos>."""
        banned = self.marker_ids() - {EOS}
        return tuple(i for i in range(len(self.tokens)) if i not in banned)

    def sha256(self):
        return hashlib.sha256(self.dumps().encode("utf-8")).hexdigest()

    def dumps(self):
        return "\n".join(self.tokens) + "\n"

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            tokens = [line.rstrip("\n") for line in fh if line.rstrip("\n")]
        if len(tokens) < 4:
            raise DataError("vocabulary file %s has fewer than 4 lines" % path)
        return cls(tokens)


def tokenize(text, vocab):
    """Lowercase, whitespace-split, and map to token ids (<unk> fallback)."""
    return [vocab.id(tok) for tok in text.lower().split()]


def detokenize(ids, vocab):
    """Inverse of tokenize up to whitespace normalization."""
    return " ".join(vocab.token(i) for i in ids)


def build_vocabulary(corpus, min_count=1, include_control=True):
    """Build a vocabulary from raw text.

    Token order is reserved symbols, then (optionally) control markers, then
    corpus tokens with frequency >= min_count sorted by descending frequency
    with lexicographic tie-break, so builds are reproducible.
    """
    if not corpus:
        raise ConfigError("cannot build a vocabulary from an empty corpus")
    if min_count < 1:
        raise ConfigError("min_count must be >= 1, got %r" % (min_count,))
    counts = Counter()
    for text in corpus:
        counts.update(text.lower().split())
    for form in MARKER_FORMS:
        counts.pop(form, None)
    kept = sorted(
        (t for t, c in counts.items() if c >= min_count),
        key=lambda t: (-counts[t], t),
    )
    tokens = list(RESERVED) + (list(CONTROL) if include_control else []) + kept
    return Vocabulary(tokens)
