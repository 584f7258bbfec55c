import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st
from scipy.stats import kendalltau

from crossgec.core import CorpusMetadata
from crossgec.harness import (
    Aggregate,
    EvaluationError,
    MetricReport,
    aggregate_runs,
    evaluate,
    kendall_tau_b,
    rank_systems,
    score_hypotheses,
    wer_extremes_report,
)
from crossgec.core import ScoringError
from crossgec.manifest import load_manifest, manifest_from_dict
from crossgec.core import ValidationError
from crossgec.maxmatch import f_beta_from_pr
from crossgec.synthetic import (
    fixing_hypotheses,
    noisy_hypotheses,
    one_error_corpus,
    random_corpus,
    ranking_flip_study,
    write_study,
)
from crossgec.wer import CorpusProperties


def agg(system, corpus, **mean):
    return Aggregate(system, corpus, 1, mean, {k: 0.0 for k in mean})


def test_identity_on_noop_corpus():
    corpus = random_corpus("c", 20, seed=3, max_edits=0)
    hyp = noisy_hypotheses(corpus, "id", 0, 0.0, 0.0)
    rep = score_hypotheses(corpus, hyp, ("f_beta", "gleu", "wer"))
    assert (rep.precision, rep.recall, rep.f_beta) == (0, 0, 0)
    assert rep.gleu_mean == 1.0 and rep.wer == 0


def test_known_counts_end_to_end():
    corpus = one_error_corpus("c", 10)
    rep = score_hypotheses(corpus, fixing_hypotheses(corpus, "s", fixed=2, wrong=1), ("f_beta",))
    assert (rep.tp, rep.fp, rep.fn) == (2, 1, 8)
    assert rep.precision == pytest.approx(2 / 3)


def test_aggregate_mean_and_sample_std():
    reports = [MetricReport("s", "c", i, 1, f_beta=v) for i, v in enumerate([0.40, 0.42, 0.44, 0.46])]
    (a,) = aggregate_runs(reports)
    assert a.runs == 4
    assert a.mean["f_beta"] == pytest.approx(0.43)
    assert a.std["f_beta"] == pytest.approx(0.025819888974716, rel=1e-12)


def test_aggregate_single_run():
    (a,) = aggregate_runs([MetricReport("s", "c", 0, 1, precision=0.3, f_beta=0.5)])
    assert a.mean == {"precision": 0.3, "f_beta": 0.5} and a.std["f_beta"] == 0.0


def test_mean_of_f_differs_from_f_of_means():
    # two runs whose averaged P/R are 37.69/37.67; F of those means is 37.69 but mean F is higher
    runs = [(0.3369, 0.4567), (0.4169, 0.2967)]
    reports = [
        MetricReport("T", "icnale", i, 1, precision=p, recall=r, f_beta=f_beta_from_pr(p, r))
        for i, (p, r) in enumerate(runs)
    ]
    (a,) = aggregate_runs(reports)
    assert round(a.mean["precision"] * 100, 2) == 37.69 and round(a.mean["recall"] * 100, 2) == 37.67
    pointwise = f_beta_from_pr(a.mean["precision"], a.mean["recall"])
    assert round(pointwise * 100, 2) == 37.69
    assert abs(a.mean["f_beta"] - pointwise) > 1e-3


@given(st.lists(st.floats(0, 1), min_size=1, max_size=6))
def test_aggregate_mean_within_range(values):
    reports = [MetricReport("s", "c", i, 1, gleu_mean=v) for i, v in enumerate(values)]
    (a,) = aggregate_runs(reports)
    assert min(values) - 1e-12 <= a.mean["gleu_mean"] <= max(values) + 1e-12


@given(st.lists(st.integers(0, 5), min_size=2, max_size=8), st.randoms(use_true_random=False))
def test_tau_b_matches_scipy(xs, rnd):
    ys = [rnd.randint(0, 5) for _ in xs]
    ours = kendall_tau_b(xs, ys)
    theirs = kendalltau(xs, ys).statistic
    if ours is None:
        assert theirs != theirs  # nan
    else:
        assert ours == pytest.approx(theirs, abs=1e-12)


@given(st.lists(st.integers(), min_size=2, max_size=10, unique=True))
def test_tau_self_is_one(xs):
    assert kendall_tau_b(xs, xs) == pytest.approx(1.0)


def test_rank_identical_patterns():
    table = rank_systems([agg(s, c, f_beta=v + (0.1 if c == "b" else 0))
                          for c in ("a", "b") for s, v in (("x", 0.5), ("y", 0.4), ("z", 0.3))])
    assert table.tau[("a", "b")] == 1.0 and not table.top_disagreement
    assert [s for s, _ in table.rankings["a"]] == ["x", "y", "z"]


def test_rank_reversed():
    scores = {"p": 0.1, "q": 0.2, "r": 0.3, "s": 0.4}
    rows = [agg(s, "a", f_beta=v) for s, v in scores.items()] + [agg(s, "b", f_beta=1 - v) for s, v in scores.items()]
    table = rank_systems(rows)
    assert table.tau[("a", "b")] == -1.0 and table.top_disagreement


def test_rank_top_disagreement_flip_pattern():
    a = {"T": 0.50, "L": 0.47, "C": 0.46, "S": 0.40}
    b = {"L": 0.44, "C": 0.377, "T": 0.375, "S": 0.33}
    rows = [agg(s, "A", f_beta=v) for s, v in a.items()] + [agg(s, "B", f_beta=v) for s, v in b.items()]
    t = rank_systems(rows)
    assert t.top("A") == "T" and t.top("B") == "L" and t.rank_of("B", "T") == 3
    assert t.rankings["B"][0][1] - max(v for s, v in t.rankings["B"][1:]) >= 0.053
    assert t.top_disagreement and t.tau[("A", "B")] < 1


def test_rank_ties_broken_by_name():
    t = rank_systems([agg("b", "c", f_beta=0.5), agg("a", "c", f_beta=0.5)])
    assert [s for s, _ in t.rankings["c"]] == ["a", "b"]


def test_rank_missing_cell():
    with pytest.raises(ScoringError, match="y/b"):
        rank_systems([agg("x", "a", f_beta=1), agg("y", "a", f_beta=1), agg("x", "b", f_beta=1)])


@given(st.lists(st.floats(0.01, 1), min_size=6, max_size=6), st.floats(0.1, 100), st.permutations(range(3)))
def test_rank_scale_and_permutation_invariance(vals, k, perm):
    systems = ["s0", "s1", "s2"]
    rows = [agg(s, c, f_beta=vals[i * 3 + j]) for i, c in enumerate(("a", "b")) for j, s in enumerate(systems)]
    base = rank_systems(rows)
    scaled = rank_systems([agg(r.system, r.corpus, f_beta=r.mean["f_beta"] * k) for r in rows])
    shuffled = rank_systems([rows[i] for i in perm] + [rows[3 + i] for i in perm])
    for c in ("a", "b"):
        order = [s for s, _ in base.rankings[c]]
        # scaling can only merge near-equal floats into ties, never reorder distinct ones
        if len({v for _, v in base.rankings[c]}) == 3:
            assert [s for s, _ in scaled.rankings[c]] == order
        assert [s for s, _ in shuffled.rankings[c]] == order


def props(**wers):
    return {n: CorpusProperties(n, 10, 1, Fraction(w)) for n, w in wers.items()}


def test_wer_extremes_picks_low_and_high():
    rows = [agg(s, c, precision=0.5, recall=0.4, f_beta=0.45) for s in ("T", "L") for c in ("x", "y", "z")]
    p = props(x=Fraction(1235, 10000), y=Fraction(764, 10000), z=Fraction(2086, 10000))
    table = wer_extremes_report(rows, p)
    assert (table.low, table.high) == ("y", "z") and not table.notes


def test_wer_extremes_two_corpora_and_ties():
    rows = [agg("T", c, precision=0.5, recall=0.4, f_beta=0.45) for c in ("m", "k", "j")]
    table = wer_extremes_report(rows, props(m=Fraction(1, 10), k=Fraction(1, 10), j=Fraction(3, 10)))
    assert table.low == "k" and "tied" in table.notes[0]
    table = wer_extremes_report(rows, props(m=Fraction(1, 10), k=Fraction(1, 10), j=Fraction(1, 10)))
    assert (table.low, table.high) == ("j", "k") and len(table.notes) == 2
    table = wer_extremes_report(rows[:2], props(m=Fraction(1, 10), k=Fraction(2, 10)))
    assert (table.low, table.high) == ("m", "k")
    with pytest.raises(ScoringError):
        wer_extremes_report(rows[:1], props(m=Fraction(1, 10)))


def test_evaluate_full_grid(tmp_path):
    corpora = [random_corpus(f"c{i}", 15, seed=i) for i in range(3)]
    outputs = {
        f"sys{s}": {c.name: [noisy_hypotheses(c, f"sys{s}", r, 0.3 + 0.1 * s, 0.2, seed=r) for r in range(2)]
                    for c in corpora}
        for s in range(2)
    }
    manifest = load_manifest(write_study(tmp_path, corpora, outputs, params={"iterations": 5}))
    reports, failures = evaluate(manifest)
    assert len(reports) == 2 * 3 * 2 and not failures
    assert [(r.corpus, r.system, r.run_id) for r in reports][:3] == [("c0", "sys0", 0), ("c0", "sys0", 1), ("c0", "sys1", 0)]
    assert all(0 <= r.f_beta <= 1 and 0 <= r.gleu_mean <= 1 for r in reports)
    again, _ = evaluate(manifest, jobs=2)
    assert again == reports


def test_evaluate_failures(tmp_path):
    c = one_error_corpus("c", 5)
    path = write_study(tmp_path, [c], {"ok": {"c": [fixing_hypotheses(c, "ok", 2)]},
                                       "short": {"c": [fixing_hypotheses(c, "short", 1)]}})
    (tmp_path / "hyp" / "short.c.run0.txt").write_text("only one line\n", encoding="utf-8")
    manifest = load_manifest(path)
    with pytest.raises(EvaluationError, match="short") as err:
        evaluate(manifest)
    assert len(err.value.failures) == 1
    reports, failures = evaluate(manifest, keep_going=True)
    assert [r.system for r in reports] == ["ok"] and failures[0].system == "short"


def test_flip_study_end_to_end(tmp_path):
    manifest = load_manifest(ranking_flip_study(tmp_path))
    reports, _ = evaluate(manifest)
    table = rank_systems(aggregate_runs(reports), "f_beta")
    assert table.top("corpus_a") == "T" and table.top("corpus_b") == "L"
    assert table.rank_of("corpus_b", "T") == 3
    assert table.top_disagreement and table.tau[("corpus_a", "corpus_b")] < 1


@pytest.mark.parametrize(
    "data, message",
    [
        ({"corpora": [{"name": "a", "format": "xml", "path": "x"}]}, "unknown format"),
        ({"corpora": [{"name": "a", "path": "x"}, {"name": "a", "path": "y"}]}, "duplicate corpus"),
        ({"metrics": ["bleu"]}, "unknown metrics"),
        ({"params": {"ref_policy": "best"}}, "ref_policy"),
        ({"params": {"alpha": 1}}, "unknown params"),
        ({"corpora": [{"name": "a", "format": "parallel", "source": "s"}]}, "references"),
    ],
)
def test_manifest_validation(data, message):
    with pytest.raises(ValidationError, match=message):
        manifest_from_dict(data)


def test_parallel_corpus_gleu_only(tmp_path):
    (tmp_path / "src.txt").write_text("a b c d e\nf g h i j\n", encoding="utf-8")
    (tmp_path / "r0.txt").write_text("a x c d e\nf g h i j\n", encoding="utf-8")
    (tmp_path / "r1.txt").write_text("a b c d e\nf g y i j\n", encoding="utf-8")
    (tmp_path / "hyp.txt").write_text("a x c d e\nf g h i j\n", encoding="utf-8")
    manifest = manifest_from_dict({
        "corpora": [{"name": "p", "format": "parallel", "source": "src.txt", "references": ["r0.txt", "r1.txt"],
                     "metadata": {"topics": "many"}}],
        "systems": [{"name": "s", "hypotheses": {"p": "hyp.txt"}}],
        "params": {"iterations": 10},
    }, tmp_path)
    (rep,), _ = evaluate(manifest)
    assert rep.f_beta is None and 0 < rep.gleu_mean <= 1
    assert rep.wer == 0  # "min" is not the default, "first" reference equals the hypothesis
    assert manifest.corpora[0].metadata == CorpusMetadata(topics="many")
