"""Lexical retrieval: tf-idf cosine (bi-encoder stand-in), BM25 (cross-encoder
stand-in), Recall@1, and the two-step retrieve-then-decode pipeline.

Neural encoders are deliberately replaced by these lexical models; the claims
this package reproduces concern decoding under imperfect retrieval, not
retriever quality itself.
"""

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError
from .scorers import Condition, ROLE_DIRECT, flatten_context

BM25_K1 = 1.2
BM25_B = 0.75


@dataclass(frozen=True)
class RetrievalIndex:
    doc_ids: tuple
    term_freqs: tuple  # Counter per document
    doc_freqs: dict
    doc_lens: tuple
    avg_doc_len: float
    vocab_hash: str = None

    @property
    def n_docs(self):
        return len(self.doc_ids)

    def idf(self, term):
        df = self.doc_freqs.get(term, 0)
        return math.log((self.n_docs + 1) / (df + 1)) + 1.0


@dataclass(frozen=True)
class RetrievalResult:
    query_id: str
    ranked: tuple  # ((doc_id, score), ...) scores non-increasing, ties by id

    def top1(self):
        return self.ranked[0][0] if self.ranked else None


def index_documents(collection, vocab_hash=None):
    """Deterministic term-statistics index over a document collection."""
    doc_ids = tuple(collection.ids())
    term_freqs, doc_lens, doc_freqs = [], [], {}
    for doc_id in doc_ids:
        tokens = collection.documents[doc_id]
        tf = Counter(tokens)
        term_freqs.append(tf)
        doc_lens.append(len(tokens))
        for term in tf:
            doc_freqs[term] = doc_freqs.get(term, 0) + 1
    avg = sum(doc_lens) / len(doc_lens) if doc_lens else 0.0
    return RetrievalIndex(
        doc_ids=doc_ids,
        term_freqs=tuple(term_freqs),
        doc_freqs=doc_freqs,
        doc_lens=tuple(doc_lens),
        avg_doc_len=avg,
        vocab_hash=vocab_hash,
    )


def _tfidf_vector(index, tf):
    return {t: c * index.idf(t) for t, c in tf.items()}


def _cosine(u, v):
    if not u or not v:
        return 0.0
    dot = sum(w * v[t] for t, w in u.items() if t in v)
    nu = math.sqrt(sum(w * w for w in u.values()))
    nv = math.sqrt(sum(w * w for w in v.values()))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return dot / (nu * nv)


def _ranked(scored, k):
    scored.sort(key=lambda p: (-p[1], p[0]))
    return tuple(scored[:k])


def retrieve_bi(index, context, k, query_id="q"):
    """tf-idf cosine similarity between context and each document; top-k."""
    if k < 1:
        raise ConfigError("k must be >= 1")
    query_tf = Counter(flatten_context(context))
    qvec = _tfidf_vector(index, query_tf)
    scored = []
    for i, doc_id in enumerate(index.doc_ids):
        dvec = _tfidf_vector(index, index.term_freqs[i])
        scored.append((doc_id, _cosine(qvec, dvec)))
    return RetrievalResult(query_id=query_id, ranked=_ranked(scored, k))


def bm25_score(index, query_tf, doc_pos):
    tf = index.term_freqs[doc_pos]
    dl = index.doc_lens[doc_pos]
    norm = BM25_K1 * (1.0 - BM25_B + BM25_B * dl / index.avg_doc_len)
    score = 0.0
    for term in query_tf:
        f = tf.get(term, 0)
        if f:
            score += index.idf(term) * f * (BM25_K1 + 1.0) / (f + norm)
    return score


def retrieve_cross(index, context, k, candidates=None, query_id="q"):
    """BM25 scoring of the whole collection or of bi-encoder candidates."""
    if k < 1:
        raise ConfigError("k must be >= 1")
    query_tf = Counter(flatten_context(context))
    if candidates is not None:
        pool = [doc_id for doc_id, _ in candidates.ranked]
    else:
        pool = list(index.doc_ids)
    positions = {doc_id: i for i, doc_id in enumerate(index.doc_ids)}
    scored = [(doc_id, bm25_score(index, query_tf, positions[doc_id])) for doc_id in pool]
    return RetrievalResult(query_id=query_id, ranked=_ranked(scored, k))


def recall_at_1(results, gold):
    """Fraction of queries whose rank-1 document equals the gold label."""
    if not results:
        return 0.0
    hits = 0
    for res in results:
        if res.query_id not in gold:
            raise DataError("no gold document for query %r" % (res.query_id,))
        hits += int(res.top1() == gold[res.query_id])
    return hits / len(results)


@dataclass(frozen=True)
class PipelineOutput:
    hypothesis: object
    retrieved_doc_id: str
    retrieval: RetrievalResult
    provenance: dict = field(default_factory=dict)


def pipeline_decode(index, retriever_kind, collection, decode_fn, example, k=10):
    """Two-step pipeline: retrieve rank-1, then decode conditioned on it.

    decode_fn(condition) -> Hypothesis runs the configured decoder. The
    returned record carries both retrieval and decoding provenance.
    """
    if retriever_kind == "bi":
        result = retrieve_bi(index, example.context, k, query_id=example.id)
    elif retriever_kind == "cross":
        bi = retrieve_bi(index, example.context, k, query_id=example.id)
        result = retrieve_cross(index, example.context, k, candidates=bi,
                                query_id=example.id)
    else:
        raise ConfigError("unknown retriever kind %r" % (retriever_kind,))
    doc_id = result.top1()
    condition = Condition(
        context=example.context,
        role=ROLE_DIRECT,
        document=collection.documents[doc_id],
        control=example.control,
    )
    hyp = decode_fn(condition)
    return PipelineOutput(
        hypothesis=hyp,
        retrieved_doc_id=doc_id,
        retrieval=result,
        provenance={"retriever": retriever_kind, "k": k},
    )


def make_distractor_collection(collection, generated_ids, fraction=0.5, seed=0):
    """Add distractors that share half their tokens with a real document.

    For round(fraction * N) documents, a distractor keeps the first half of
    the source document and fills the rest with random generated tokens.
    Returns (new collection, gold-preserving id set).
    """
    rng = np.random.default_rng(seed)
    docs = dict(collection.documents)
    ids = collection.ids()
    n_distract = round(fraction * len(ids))
    gen = list(generated_ids)
    for j in range(n_distract):
        src = collection.documents[ids[j % len(ids)]]
        keep = max(1, len(src) // 2)
        filler_len = max(1, len(src) - keep)
        filler = [gen[i] for i in rng.integers(0, len(gen), size=filler_len)]
        docs["x%d" % j] = tuple(src[:keep]) + tuple(filler)
    from .data import DocumentCollection

    return DocumentCollection(docs)
