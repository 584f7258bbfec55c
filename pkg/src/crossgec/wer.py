"""Word error rate and the per-corpus property table.

WER is the total word-level edit distance between each source sentence and
its reference, divided by the total number of source words. Totals stay
exact (``Fraction``) until formatting.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from typing import Sequence

from .core import Corpus, CorpusMetadata, ValidationError

REF_POLICIES = ("first", "min", "mean")


def edit_distance(x: Sequence[str], y: Sequence[str]) -> int:
    """Word-level Levenshtein distance with unit costs."""
    # common prefix and suffix never change the distance
    lo = 0
    while lo < len(x) and lo < len(y) and x[lo] == y[lo]:
        lo += 1
    hx, hy = len(x), len(y)
    while hx > lo and hy > lo and x[hx - 1] == y[hy - 1]:
        hx -= 1
        hy -= 1
    x, y = x[lo:hx], y[lo:hy]
    if len(x) < len(y):
        x, y = y, x
    if not y:
        return len(x)
    prev = list(range(len(y) + 1))
    for i, xi in enumerate(x, start=1):
        cur = [i]
        for j, yj in enumerate(y, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (xi != yj)))
        prev = cur
    return prev[-1]


@dataclass(frozen=True)
class WerStats:
    total_edit_distance: Fraction
    total_source_words: int

    @property
    def wer(self) -> Fraction:
        return Fraction(self.total_edit_distance) / self.total_source_words


def _sentence_distance(source, refs, policy: str) -> Fraction:
    if policy == "first":
        return Fraction(edit_distance(source, refs[0]))
    dists = [edit_distance(source, r) for r in refs]
    if policy == "min":
        return Fraction(min(dists))
    if policy == "mean":
        return Fraction(sum(dists), len(dists))
    raise ValueError(f"unknown reference policy {policy!r}; expected one of {REF_POLICIES}")


def corpus_wer(corpus: Corpus, ref_policy: str = "first") -> WerStats:
    """WER of the corpus references against their sources.

    ``first`` uses the lowest annotator id, ``min`` the closest reference and
    ``mean`` the average distance over references.
    """
    total = Fraction(0)
    words = 0
    for sent in corpus.sentences:
        refs = sent.all_references()
        if not refs:
            raise ValidationError("sentence without any annotator")
        total += _sentence_distance(sent.source, refs, ref_policy)
        words += len(sent.source)
    if words == 0:
        raise ValidationError(f"corpus {corpus.name!r} has no source words; WER is undefined")
    return WerStats(total, words)


def hypothesis_wer(corpus: Corpus, hypotheses: Sequence[Sequence[str]], ref_policy: str = "first") -> WerStats:
    """Residual WER of a system: distance from each hypothesis to the references, per source word."""
    total = Fraction(0)
    words = 0
    for sent, hyp in zip(corpus.sentences, hypotheses):
        total += _sentence_distance(tuple(hyp), sent.all_references(), ref_policy)
        words += len(sent.source)
    if words == 0:
        raise ValidationError(f"corpus {corpus.name!r} has no source words; WER is undefined")
    return WerStats(total, words)


def percent(value, places: int = 2) -> str:
    """Format a fraction in [0, 1] as a percentage, rounding half up."""
    if value is None:
        return "n/a"
    if isinstance(value, Fraction):
        d = Decimal(value.numerator) / Decimal(value.denominator)
    else:
        d = Decimal(repr(float(value)))
    q = Decimal(1).scaleb(-places)
    return str((d * 100).quantize(q, rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class CorpusProperties:
    name: str
    sentence_count: int
    reference_count: int
    wer: Fraction | None
    topics: int | str | None = None
    multiple_l1: bool | None = None
    multiple_proficiency: bool | None = None
    public: bool | None = None

    @property
    def wer_percent(self) -> str:
        return percent(self.wer)

    def row(self) -> dict:
        def yn(flag):
            return "n/a" if flag is None else ("Yes" if flag else "No")

        return {
            "corpus": self.name,
            "sentences": self.sentence_count,
            "refs": self.reference_count,
            "wer": self.wer_percent,
            "topics": "n/a" if self.topics is None else self.topics,
            "multiple_l1": yn(self.multiple_l1),
            "multiple_proficiency": yn(self.multiple_proficiency),
            "public": yn(self.public),
        }


def corpus_properties(
    corpus: Corpus, metadata: CorpusMetadata | None = None, ref_policy: str = "first"
) -> CorpusProperties:
    meta = metadata or corpus.metadata
    refs = max((len(s.all_references()) for s in corpus.sentences), default=0)
    words = sum(len(s.source) for s in corpus.sentences)
    wer = corpus_wer(corpus, ref_policy).wer if words else None
    return CorpusProperties(
        corpus.name,
        len(corpus.sentences),
        refs,
        wer,
        meta.topics,
        meta.multiple_l1,
        meta.multiple_proficiency,
        meta.public,
    )
