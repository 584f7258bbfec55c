"""MaxMatch (M2) scoring.

System edits are read off a word-level Levenshtein alignment of source and
hypothesis. Adjacent single-token edits may be merged into phrase edits as
long as the merged span contains at most ``max_unchanged_words`` unchanged
tokens. Out of all decompositions that rebuild the hypothesis, the one that
matches the most gold edits is kept (then the one with the fewest edits, then
the lexicographically smallest by ``(start, end)``).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Mapping, Sequence

from .core import Corpus, Edit, HypothesisSet, ScoringError, Sentence

MATCH, SUB, DEL, INS = "M", "S", "D", "I"


@dataclass(frozen=True)
class MatchCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __add__(self, other: "MatchCounts") -> "MatchCounts":
        return MatchCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)


@dataclass(frozen=True)
class Params:
    max_unchanged_words: int = 2
    case_insensitive: bool = False


@dataclass(frozen=True)
class Op:
    kind: str
    i: int  # source position before the op
    j: int  # hypothesis position before the op


@dataclass(frozen=True)
class Arc:
    first: int  # index into the non-match op list
    last: int
    edit: Edit

    @property
    def is_insertion(self) -> bool:
        return self.edit.is_insertion


@dataclass(frozen=True)
class EditLattice:
    ops: tuple[Op, ...]
    changes: tuple[Op, ...]
    arcs: tuple[Arc, ...]

    @property
    def nodes(self) -> list[tuple[int, int]]:
        return [(op.i, op.j) for op in self.ops]


def align(source: Sequence[str], hypothesis: Sequence[str]) -> list[Op]:
    """Minimal-cost word alignment with a fixed backtrace preference.

    Walking back from the end, each step prefers match, then substitution,
    then deletion, then insertion, among moves that stay on an optimal path.
    """
    n, m = len(source), len(hypothesis)
    # a shared suffix is always matched by this backtrace, so strip it first
    k = 0
    while k < n and k < m and source[n - 1 - k] == hypothesis[m - 1 - k]:
        k += 1
    x, y = source[: n - k], hypothesis[: m - k]
    n2, m2 = len(x), len(y)

    rows = [list(range(m2 + 1))]
    for i in range(1, n2 + 1):
        prev = rows[-1]
        cur = [i] * (m2 + 1)
        xi = x[i - 1]
        for j in range(1, m2 + 1):
            best = prev[j - 1] if xi == y[j - 1] else prev[j - 1] + 1
            d = prev[j] + 1
            if d < best:
                best = d
            ins = cur[j - 1] + 1
            if ins < best:
                best = ins
            cur[j] = best
        rows.append(cur)

    ops: list[Op] = []
    i, j = n2, m2
    while i > 0 or j > 0:
        here = rows[i][j]
        if i > 0 and j > 0:
            diag = rows[i - 1][j - 1]
            if x[i - 1] == y[j - 1] and here == diag:
                i, j = i - 1, j - 1
                ops.append(Op(MATCH, i, j))
                continue
            if here == diag + 1:
                i, j = i - 1, j - 1
                ops.append(Op(SUB, i, j))
                continue
        if i > 0 and here == rows[i - 1][j] + 1:
            i -= 1
            ops.append(Op(DEL, i, j))
        else:
            j -= 1
            ops.append(Op(INS, i, j))
    ops.reverse()
    ops.extend(Op(MATCH, n2 + t, m2 + t) for t in range(k))
    return ops


def build_lattice(
    source: Sequence[str], hypothesis: Sequence[str], max_unchanged_words: int = 2
) -> EditLattice:
    ops = align(source, hypothesis)
    # op-list index of every change
    where = [p for p, op in enumerate(ops) if op.kind != MATCH]
    changes = [ops[p] for p in where]
    arcs = []
    for a in range(len(where)):
        first = ops[where[a]]
        for b in range(a, len(where)):
            unchanged = (where[b] - where[a]) - (b - a)
            if unchanged > max_unchanged_words:
                break
            last = ops[where[b]]
            end_i = last.i + (last.kind != INS)
            end_j = last.j + (last.kind != DEL)
            edit = Edit(first.i, end_i, tuple(hypothesis[first.j:end_j]))
            arcs.append(Arc(a, b, edit))
    return EditLattice(tuple(ops), tuple(changes), tuple(arcs))


def _select(lattice: EditLattice, gold_keys: frozenset, case_insensitive: bool) -> list[Edit]:
    """Best path through the lattice for one gold set (right-to-left DP)."""
    k = len(lattice.changes)
    if k == 0:
        return []
    by_first: list[list[Arc]] = [[] for _ in range(k)]
    for arc in lattice.arcs:
        by_first[arc.first].append(arc)

    # best[a][banned]: (score, arcs) for changes a.., where score sorts ascending
    # as (-tp, n_edits, (start, end) keys). banned: a pure insertion may not start at a.
    best: list[list] = [[None, None] for _ in range(k + 1)]
    best[k] = [((0, 0, ()), ()), ((0, 0, ()), ())]
    for a in range(k - 1, -1, -1):
        for banned in (0, 1):
            choice = None
            for arc in by_first[a]:
                e = arc.edit
                if banned and e.is_insertion:
                    continue
                nxt = arc.last + 1
                ban_next = int(
                    e.is_insertion and nxt < k and lattice.changes[nxt].i == e.start
                )
                tail = best[nxt][ban_next]
                if tail is None:
                    continue
                (neg_tp, n_edits, keys), path = tail
                hit = e.key(case_insensitive) in gold_keys
                score = (neg_tp - hit, n_edits + 1, ((e.start, e.end),) + keys)
                if choice is None or score < choice[0]:
                    choice = (score, (e,) + path)
            best[a][banned] = choice
    return list(best[0][0][1])


def extract_system_edits(
    source: Sequence[str],
    hypothesis: Sequence[str],
    gold=frozenset(),
    max_unchanged_words: int = 2,
    case_insensitive: bool = False,
    lattice: EditLattice | None = None,
) -> set[Edit]:
    """System edit set turning ``source`` into ``hypothesis``, chosen to agree with ``gold``."""
    if lattice is None:
        lattice = build_lattice(source, hypothesis, max_unchanged_words)
    keys = frozenset(g.key(case_insensitive) for g in gold)
    return set(_select(lattice, keys, case_insensitive))


def score_sentence(
    source: Sequence[str],
    hypothesis: Sequence[str],
    gold_by_annotator: Mapping[int, frozenset[Edit]],
    params: Params = Params(),
) -> dict[int, MatchCounts]:
    if not gold_by_annotator:
        raise ScoringError("sentence has no gold annotators")
    lattice = build_lattice(source, hypothesis, params.max_unchanged_words)
    counts = {}
    for ann in sorted(gold_by_annotator):
        gold = gold_by_annotator[ann]
        keys = frozenset(g.key(params.case_insensitive) for g in gold)
        selected = _select(lattice, keys, params.case_insensitive)
        tp = sum(e.key(params.case_insensitive) in keys for e in selected)
        counts[ann] = MatchCounts(tp, len(selected) - tp, len(keys) - tp)
    return counts


def _as_rational(beta) -> Fraction:
    if isinstance(beta, Rational):
        return Fraction(beta)
    return Fraction(str(beta))


def f_beta(tp: int, fp: int, fn: int, beta=Fraction(1, 2)) -> Fraction:
    """Exact F_beta from counts; every 0/0 is taken as 0."""
    if tp < 0 or fp < 0 or fn < 0:
        raise ValueError(f"negative counts: tp={tp} fp={fp} fn={fn}")
    if tp == 0:
        return Fraction(0)
    b2 = _as_rational(beta) ** 2
    return (1 + b2) * tp / ((1 + b2) * tp + b2 * fn + fp)


def f_beta_from_pr(precision: float, recall: float, beta: float = 0.5) -> float:
    b2 = beta * beta
    denom = b2 * precision + recall
    if denom == 0:
        return 0.0
    return (1 + b2) * precision * recall / denom


def precision_recall(counts: MatchCounts) -> tuple[Fraction, Fraction]:
    p = Fraction(counts.tp, counts.tp + counts.fp) if counts.tp + counts.fp else Fraction(0)
    r = Fraction(counts.tp, counts.tp + counts.fn) if counts.tp + counts.fn else Fraction(0)
    return p, r


@dataclass(frozen=True)
class CorpusScore:
    counts: MatchCounts
    precision: float
    recall: float
    f_beta: float


def choose_annotators(
    per_sentence: Sequence[Mapping[int, MatchCounts]], beta=Fraction(1, 2)
) -> tuple[MatchCounts, list[int]]:
    """Fold per-sentence counts in order, picking the annotator that maximizes cumulative F."""
    total = MatchCounts()
    picked = []
    for counts in per_sentence:
        best_ann, best_f, best_total = None, None, None
        for ann in sorted(counts):
            cand = total + counts[ann]
            f = f_beta(cand.tp, cand.fp, cand.fn, beta)
            if best_f is None or f > best_f:
                best_ann, best_f, best_total = ann, f, cand
        total = best_total
        picked.append(best_ann)
    return total, picked


def score_corpus(
    corpus: Corpus, hyp: HypothesisSet, beta=Fraction(1, 2), params: Params = Params()
) -> CorpusScore:
    if len(hyp.sentences) != len(corpus.sentences):
        raise ScoringError(
            f"cannot score system {hyp.system_name!r} (run {hyp.run_id}) on corpus "
            f"{corpus.name!r}: {len(hyp.sentences)} hypothesis lines vs "
            f"{len(corpus.sentences)} corpus sentences"
        )
    if not corpus.has_gold:
        raise ScoringError(f"corpus {corpus.name!r} has no gold edits; MaxMatch needs M2 input")
    per_sentence = [
        score_sentence(s.source, h, s.gold, params) for s, h in zip(corpus.sentences, hyp.sentences)
    ]
    total, _ = choose_annotators(per_sentence, beta)
    p, r = precision_recall(total)
    f = f_beta(total.tp, total.fp, total.fn, beta)
    return CorpusScore(total, float(p), float(r), float(f))
