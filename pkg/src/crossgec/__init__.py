"""Cross-corpus evaluation toolkit for grammatical error correction."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    AnnotatedSentence,
    Corpus,
    CorpusMetadata,
    Edit,
    HypothesisSet,
    apply_edits,
    tokenize,
)
