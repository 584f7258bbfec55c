import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from crossgec.core import AnnotatedSentence, Corpus, Edit, HypothesisSet, ScoringError, apply_edits, tokenize
from crossgec.maxmatch import (
    MatchCounts,
    Params,
    align,
    build_lattice,
    choose_annotators,
    extract_system_edits,
    f_beta,
    f_beta_from_pr,
    score_corpus,
    score_sentence,
)
from oracles import brute_force_counts, preferred_alignment, random_instance

CONLL_SRC = tokenize(
    "Hence , some seen it as being considerate in keeping the genetic risk "
    "of getting the disease in confidential ."
)
CONLL_GOLD = frozenset({Edit(3, 4, ("see",)), Edit(17, 18, ())})


def gold_set(edits):
    return frozenset(Edit(*e) for e in edits)


def test_identity_yields_no_edits():
    assert extract_system_edits(tokenize("a b c"), tokenize("a b c"), {Edit(0, 1, ("x",))}) == set()


def test_conll_single_substitution():
    edits = extract_system_edits(tokenize("some seen it"), tokenize("some see it"), {Edit(1, 2, ("see",))})
    assert edits == {Edit(1, 2, ("see",))}
    counts = score_sentence(tokenize("some seen it"), tokenize("some see it"), {0: gold_set([(1, 2, ("see",))])})
    assert counts[0].tp == 1


def test_merged_phrase_edit_preferred_when_it_matches_gold():
    src, hyp = tokenize("a b c d"), tokenize("a x y d")
    gold = {Edit(1, 3, ("x", "y"))}
    assert extract_system_edits(src, hyp, gold) == gold
    # brute force agrees that one matching edit is optimal
    assert brute_force_counts(src, hyp, [(1, 3, ("x", "y"))]) == (1, 0, 0)


def test_split_edits_preferred_when_they_match_gold():
    src, hyp = tokenize("a b c d"), tokenize("a x y d")
    gold = {Edit(1, 2, ("x",)), Edit(2, 3, ("y",))}
    assert extract_system_edits(src, hyp, gold) == gold


def test_merge_limit():
    src, hyp = tokenize("a b c d e f"), tokenize("x b c d e y")
    wide = {Edit(0, 6, hyp)}
    assert Edit(0, 6, hyp) not in extract_system_edits(src, hyp, wide, max_unchanged_words=2)
    assert extract_system_edits(src, hyp, wide, max_unchanged_words=4) == wide
    assert len(extract_system_edits(src, hyp, set(), max_unchanged_words=3)) == 2


def test_no_gold_prefers_fewest_edits():
    src, hyp = tokenize("a b c"), tokenize("x b y")
    assert extract_system_edits(src, hyp, set()) == {Edit(0, 3, ("x", "b", "y"))}


def test_case_policy():
    src, hyp = tokenize("in the house"), tokenize("In the house")
    gold = {0: frozenset({Edit(0, 1, ("IN",))})}
    assert score_sentence(src, hyp, gold)[0] == MatchCounts(0, 1, 1)
    assert score_sentence(src, hyp, gold, Params(case_insensitive=True))[0] == MatchCounts(1, 0, 0)


def test_score_sentence_trivial_cases():
    s = tokenize("a b c")
    assert score_sentence(s, s, {0: frozenset()}) == {0: MatchCounts(0, 0, 0)}
    assert score_sentence(s, s, {0: frozenset({Edit(0, 1, ("x",))})}) == {0: MatchCounts(0, 0, 1)}
    with pytest.raises(ScoringError):
        score_sentence(s, s, {})


def test_conll_worked_example():
    transformer = apply_edits(CONLL_SRC, CONLL_GOLD)
    lstm = tokenize(
        "Hence , some seen it as being considerate in keeping the genetic risk "
        "of getting the disease in confidentiality ."
    )
    assert score_sentence(CONLL_SRC, transformer, {0: CONLL_GOLD}) == {0: MatchCounts(2, 0, 0)}
    assert score_sentence(CONLL_SRC, lstm, {0: CONLL_GOLD}) == {0: MatchCounts(0, 1, 2)}


def test_per_annotator_reoptimization():
    src, hyp = tokenize("a b c d"), tokenize("a x y d")
    gold = {0: gold_set([(1, 3, ("x", "y"))]), 1: gold_set([(1, 2, ("x",)), (2, 3, ("y",))])}
    assert score_sentence(src, hyp, gold) == {0: MatchCounts(1, 0, 0), 1: MatchCounts(2, 0, 0)}


def test_alignment_tie_breaks():
    # "a a b" -> "a b": backtrace keeps the later "a" and deletes the first
    kinds = [(op.kind, op.i) for op in align(tokenize("a a b"), tokenize("a b"))]
    assert kinds == [("D", 0), ("M", 1), ("M", 2)]
    # substitution beats deletion + insertion
    assert [op.kind for op in align(tokenize("a b"), tokenize("b a"))] == ["S", "S"]


@pytest.mark.parametrize(
    "tp, fp, fn, expected",
    [(0, 0, 0, Fraction(0)), (2, 1, 2, Fraction(5, 8)), (0, 5, 3, Fraction(0)), (3, 0, 0, Fraction(1))],
)
def test_f_beta_values(tp, fp, fn, expected):
    assert f_beta(tp, fp, fn, Fraction(1, 2)) == expected


def test_f_beta_hand_example():
    p, r = Fraction(2, 3), Fraction(1, 2)
    by_hand = (1 + Fraction(1, 4)) * p * r / (Fraction(1, 4) * p + r)
    assert f_beta(2, 1, 2) == by_hand
    assert round(float(by_hand), 4) == 0.625


def test_f_beta_rejects_negative():
    with pytest.raises(ValueError):
        f_beta(-1, 0, 0)


def test_f_beta_from_pr_published_rows():
    assert f_beta_from_pr(0.6727, 0.4205) == pytest.approx(0.6007, abs=5e-5)
    assert f_beta_from_pr(0.4868, 0.2937) == pytest.approx(0.4302, abs=5e-5)


@given(st.integers(1, 50), st.integers(0, 50), st.sampled_from([Fraction(1, 2), Fraction(1), Fraction(2)]))
def test_f_equals_p_when_p_equals_r(tp, extra, beta):
    # fp == fn gives P == R
    p = Fraction(tp, tp + extra)
    assert f_beta(tp, extra, extra, beta) == p


@given(st.integers(0, 30), st.integers(0, 30), st.integers(0, 30))
def test_f1_symmetric_and_bounded(tp, fp, fn):
    assert f_beta(tp, fp, fn, 1) == f_beta(tp, fn, fp, 1)
    for beta in (Fraction(1, 2), 1, 2):
        assert 0 <= f_beta(tp, fp, fn, beta) <= 1


def test_oracle_equivalence_sample():
    rng = random.Random(2024)
    for _ in range(300):
        src, hyp, gold = random_instance(rng)
        counts = score_sentence(src, hyp, {0: gold_set(gold)})[0]
        assert (counts.tp, counts.fp, counts.fn) == brute_force_counts(src, hyp, gold)


@st.composite
def instances(draw):
    seed = draw(st.integers(0, 2**32))
    return random_instance(random.Random(seed))


@settings(max_examples=200)
@given(instances(), st.integers(0, 3))
def test_oracle_equivalence_property(inst, maxu):
    src, hyp, gold = inst
    counts = score_sentence(src, hyp, {0: gold_set(gold)}, Params(max_unchanged_words=maxu))[0]
    assert (counts.tp, counts.fp, counts.fn) == brute_force_counts(src, hyp, gold, maxu)


@settings(max_examples=200)
@given(instances())
def test_alignment_matches_enumeration(inst):
    src, hyp, _ = inst
    assert [(o.kind, o.i, o.j) for o in align(src, hyp)] == preferred_alignment(src, hyp)


@settings(max_examples=300)
@given(instances(), st.integers(0, 3))
def test_selected_edits_reconstruct_hypothesis(inst, maxu):
    src, hyp, gold = inst
    edits = extract_system_edits(src, hyp, gold_set(gold), max_unchanged_words=maxu)
    assert apply_edits(src, edits) == hyp


@settings(max_examples=200)
@given(instances())
def test_adding_selected_edit_to_gold_never_lowers_tp(inst):
    src, hyp, gold = inst
    g = gold_set(gold)
    before = score_sentence(src, hyp, {0: g})[0]
    for e in extract_system_edits(src, hyp, g):
        if any(e.overlaps(o) for o in g):
            continue
        after = score_sentence(src, hyp, {0: g | {e}})[0]
        assert after.tp >= before.tp


@settings(max_examples=200)
@given(instances())
def test_count_identities(inst):
    src, hyp, gold = inst
    g = gold_set(gold)
    counts = score_sentence(src, hyp, {0: g})[0]
    selected = extract_system_edits(src, hyp, g)
    assert counts.tp + counts.fp == len(selected)
    assert counts.tp + counts.fn == len(g)


def test_lattice_contains_single_and_merged_arcs():
    lat = build_lattice(tokenize("a b c d"), tokenize("a x y d"))
    edits = {arc.edit.key() for arc in lat.arcs}
    assert (1, 2, ("x",)) in edits and (2, 3, ("y",)) in edits and (1, 3, ("x", "y")) in edits
    assert lat.nodes[0] == (0, 0)


def corpus_of(rows):
    sentences = [AnnotatedSentence(tokenize(src), gold) for src, gold in rows]
    return Corpus("toy", tuple(sentences))


def test_corpus_noop_identity_is_zero():
    corpus = corpus_of([("a b", {0: frozenset()}), ("c", {0: frozenset()})])
    hyp = HypothesisSet("id", 0, [s.source for s in corpus.sentences])
    res = score_corpus(corpus, hyp)
    assert (res.precision, res.recall, res.f_beta) == (0, 0, 0)


def test_corpus_counts_to_prf():
    # tp=2, fp=1, fn=2 across two sentences
    corpus = corpus_of([
        ("a b c", {0: gold_set([(0, 1, ("x",)), (1, 2, ("y",))])}),
        ("d e f", {0: gold_set([(0, 1, ("z",)), (2, 3, ("w",))])}),
    ])
    hyp = HypothesisSet("s", 0, [tokenize("x y c"), tokenize("d q f")])
    res = score_corpus(corpus, hyp)
    assert (res.counts.tp, res.counts.fp, res.counts.fn) == (2, 1, 2)
    assert round(res.precision, 4) == 0.6667 and res.recall == 0.5 and res.f_beta == 0.625


def test_corpus_length_mismatch_names_both():
    corpus = corpus_of([("a", {0: frozenset()})])
    with pytest.raises(ScoringError, match="toy") as err:
        score_corpus(corpus, HypothesisSet("sysA", 1, []))
    assert "sysA" in str(err.value)


def test_annotator_choice_maximizes_cumulative_f():
    per_sentence = [
        {0: MatchCounts(1, 0, 0), 1: MatchCounts(0, 0, 1)},
        {0: MatchCounts(0, 1, 1), 1: MatchCounts(1, 1, 0)},
    ]
    total, picked = choose_annotators(per_sentence)
    assert picked == [0, 1]
    assert total == MatchCounts(2, 1, 0)


def test_annotator_ties_pick_lowest_id():
    total, picked = choose_annotators([{2: MatchCounts(0, 0, 1), 1: MatchCounts(0, 0, 3)}])
    assert picked == [1]
