"""Corpus-level GLEU for error correction.

Hypothesis n-grams that match the reference are rewarded; n-grams the
hypothesis kept from the source but the reference changed are subtracted.
With several references per sentence, each iteration draws one reference per
sentence and the score is averaged over iterations.

Reference draws use SplitMix64 so that scores reproduce across
implementations: iteration ``t`` seeds a fresh generator with ``seed + t``
(mod 2**64) and draws one value per sentence in corpus order; the chosen
index is ``(value * k) >> 64`` for a sentence with ``k`` references.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import ScoringError, Sentence

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


class SplitMix64:
    """The SplitMix64 generator (Steele, Lea & Flood, 2014)."""

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def below(self, k: int) -> int:
        return (self.next() * k) >> 64


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


@dataclass(frozen=True)
class NgramStats:
    """Summed GLEU statistics. ``numerators`` may be negative before flooring."""

    numerators: tuple[int, ...]
    denominators: tuple[int, ...]
    hyp_len: int
    ref_len: int

    def __add__(self, other: "NgramStats") -> "NgramStats":
        return NgramStats(
            tuple(a + b for a, b in zip(self.numerators, other.numerators)),
            tuple(a + b for a, b in zip(self.denominators, other.denominators)),
            self.hyp_len + other.hyp_len,
            self.ref_len + other.ref_len,
        )

    @classmethod
    def zero(cls, order: int) -> "NgramStats":
        return cls((0,) * order, (0,) * order, 0, 0)


def sentence_stats(
    source: Sequence[str], hypothesis: Sequence[str], reference: Sequence[str], order: int = 4
) -> NgramStats:
    nums, dens = [], []
    for n in range(1, order + 1):
        h, r, s = ngrams(hypothesis, n), ngrams(reference, n), ngrams(source, n)
        num = 0
        for g, hc in h.items():
            matched = min(hc, r[g])
            num += matched - max(0, min(hc, s[g]) - matched)
        nums.append(num)
        dens.append(sum(h.values()))
    return NgramStats(tuple(nums), tuple(dens), len(hypothesis), len(reference))


def score_stats(stats: NgramStats, smooth: bool = False) -> float:
    """Turn summed statistics into a GLEU score in [0, 1]."""
    c, r = stats.hyp_len, stats.ref_len
    if c == 0:
        return 0.0
    log_sum = 0.0
    order = len(stats.numerators)
    for n, (num, den) in enumerate(zip(stats.numerators, stats.denominators), start=1):
        num = max(0, num)
        den = max(1, den)
        if smooth and n >= 2:
            num, den = num + 1, den + 1
        if num == 0:
            return 0.0
        log_sum += math.log(min(num, den) / den) / order
    bp = 1.0 if c >= r else math.exp(1 - r / c)
    return min(1.0, bp * math.exp(log_sum))


def _check_lengths(sources, hypotheses, refs) -> None:
    if not (len(sources) == len(hypotheses) == len(refs)):
        raise ScoringError(
            f"GLEU inputs differ in length: {len(sources)} sources, "
            f"{len(hypotheses)} hypotheses, {len(refs)} references"
        )


def gleu_iteration(
    sources: Sequence[Sentence],
    hypotheses: Sequence[Sentence],
    sampled_refs: Sequence[Sentence],
    order: int = 4,
    smooth: bool = False,
) -> float:
    """GLEU for one fixed reference per sentence."""
    _check_lengths(sources, hypotheses, sampled_refs)
    total = NgramStats.zero(order)
    for s, h, r in zip(sources, hypotheses, sampled_refs):
        total = total + sentence_stats(s, h, r, order)
    return score_stats(total, smooth)


def gleu_corpus(
    sources: Sequence[Sentence],
    hypotheses: Sequence[Sentence],
    reference_sets: Sequence[Sequence[Sentence]],
    order: int = 4,
    iterations: int = 500,
    seed: int = 0,
    smooth: bool = False,
) -> tuple[float, float]:
    """Mean and (population) standard deviation of GLEU over sampled references."""
    _check_lengths(sources, hypotheses, reference_sets)
    for idx, refs in enumerate(reference_sets):
        if not refs:
            raise ScoringError(f"sentence {idx} has no references")

    # statistics per (sentence, reference) are computed once and reused
    table = [
        [sentence_stats(s, h, r, order) for r in refs]
        for s, h, refs in zip(sources, hypotheses, reference_sets)
    ]
    if all(len(row) == 1 for row in table):
        total = NgramStats.zero(order)
        for row in table:
            total = total + row[0]
        return score_stats(total, smooth), 0.0

    scores = _sampled_scores([[_flat(st) for st in row] for row in table], order, iterations, seed, smooth)
    mean = math.fsum(scores) / len(scores)
    var = math.fsum((x - mean) ** 2 for x in scores) / len(scores)
    return mean, math.sqrt(var)


def splitmix_draws(seed: int, count: int) -> np.ndarray:
    """The first ``count`` outputs of SplitMix64(seed), vectorized.

    Draw ``i`` only depends on the state ``seed + (i + 1) * gamma``.
    """
    with np.errstate(over="ignore"):
        z = np.uint64(seed & MASK64) + np.arange(1, count + 1, dtype=np.uint64) * np.uint64(GOLDEN_GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def bounded(values: np.ndarray, k: np.ndarray) -> np.ndarray:
    """``(v * k) >> 64`` per element, exact for ``k < 2**32``."""
    k = k.astype(np.uint64)
    hi = values >> np.uint64(32)
    lo = values & np.uint64(0xFFFFFFFF)
    return (hi * k + ((lo * k) >> np.uint64(32))) >> np.uint64(32)


def _sampled_scores(rows, order, iterations, seed, smooth) -> list[float]:
    counts = np.array([len(r) for r in rows], dtype=np.int64)
    if counts.max() >= 1 << 32:
        raise ScoringError("too many references for one sentence")
    width = 2 * order + 2
    table = np.zeros((len(rows), int(counts.max()), width), dtype=np.int64)
    for i, row in enumerate(rows):
        table[i, :len(row)] = row
    index = np.arange(len(rows))
    scores = []
    for t in range(iterations):
        picks = bounded(splitmix_draws(seed + t, len(rows)), counts).astype(np.int64)
        acc = [int(v) for v in table[index, picks].sum(axis=0)]
        stats = NgramStats(
            tuple(acc[:order]), tuple(acc[order:2 * order]), acc[2 * order], acc[2 * order + 1]
        )
        scores.append(score_stats(stats, smooth))
    return scores


def _flat(st: NgramStats) -> tuple[int, ...]:
    return st.numerators + st.denominators + (st.hyp_len, st.ref_len)
