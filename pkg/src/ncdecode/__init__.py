"""Noisy-channel decoding engine for document-grounded dialog.

The package combines a direct grounded model, a channel
(grounding-reconstruction) model, and an ungrounded response LM under scaling
factors, decodes the combination by reranking or online beam search, and
verifies every decoding claim against exact brute-force oracles on synthetic
worlds.
"""

from .data import DocumentCollection, GroundedExample, Turn
from .decode import (
    BeamConfig,
    Hypothesis,
    NBestList,
    ONLINE_SCALING,
    RERANK_SCALING,
    ScalingConfig,
    beam_search_direct,
    combined_score,
    enumerate_oracle,
    online_decode,
    online_decode_liu,
    rerank,
)
from .metrics import corpus_bleu, lcs_ratio, perplexity, token_f1
from .retrieval import (
    index_documents,
    recall_at_1,
    retrieve_bi,
    retrieve_cross,
)
from .scorers import (
    Condition,
    NgramScorer,
    TabularScorer,
    TruncationPolicy,
    UniformScorer,
    annotate_control_tokens,
    fit_ngram,
    make_channel_training_pairs,
)
from .vocab import Vocabulary, build_vocabulary, detokenize, tokenize
from .world import WorldModel, WorldSpec, build_world, exact_conditional, sample_dataset

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
