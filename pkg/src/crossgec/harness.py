"""Cross-corpus evaluation: score every (system, corpus, run), average runs,
rank systems per corpus and measure how much the rankings disagree."""

from __future__ import annotations

import logging
import math
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

from . import gleu as gleu_mod
from .core import Corpus, CrossGecError, HypothesisSet, ScoringError, read_lines
from .manifest import MetricParams, RunManifest
from .maxmatch import Params, score_corpus
from .wer import CorpusProperties, corpus_properties, hypothesis_wer

log = logging.getLogger(__name__)

SCORE_FIELDS = ("precision", "recall", "f_beta", "gleu_mean", "gleu_std", "wer")


@dataclass(frozen=True)
class MetricReport:
    system: str
    corpus: str
    run_id: int
    sentences: int
    tp: int | None = None
    fp: int | None = None
    fn: int | None = None
    precision: float | None = None
    recall: float | None = None
    f_beta: float | None = None
    gleu_mean: float | None = None
    gleu_std: float | None = None
    wer: float | None = None  # residual WER of the hypotheses
    corpus_wer: float | None = None  # WER of the gold references, for context

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class EntryFailure:
    system: str
    corpus: str
    run_id: int
    message: str


class EvaluationError(CrossGecError):
    def __init__(self, failures: Sequence[EntryFailure]):
        self.failures = list(failures)
        lines = [f"{f.system}/{f.corpus}/run{f.run_id}: {f.message}" for f in self.failures]
        super().__init__(f"{len(lines)} evaluation entries failed:\n  " + "\n  ".join(lines))


def score_hypotheses(
    corpus: Corpus,
    hyp: HypothesisSet,
    metrics: Iterable[str],
    params: MetricParams = MetricParams(),
    corpus_wer: float | None = None,
) -> MetricReport:
    """Every requested metric for one hypothesis set on one corpus."""
    hyp.check_against(corpus)
    metrics = set(metrics)
    out = dict(system=hyp.system_name, corpus=corpus.name, run_id=hyp.run_id,
               sentences=len(corpus), corpus_wer=corpus_wer)
    if "f_beta" in metrics and corpus.has_gold:
        mm = Params(params.max_unchanged_words, params.case_insensitive)
        res = score_corpus(corpus, hyp, Fraction(str(params.beta)), mm)
        out.update(tp=res.counts.tp, fp=res.counts.fp, fn=res.counts.fn,
                   precision=res.precision, recall=res.recall, f_beta=res.f_beta)
    if "gleu" in metrics:
        sources = [s.source for s in corpus.sentences]
        refs = [s.all_references() for s in corpus.sentences]
        mean, std = gleu_mod.gleu_corpus(
            sources, hyp.sentences, refs, params.gleu_order, params.iterations,
            params.seed, params.gleu_smooth,
        )
        out.update(gleu_mean=mean, gleu_std=std)
    if "wer" in metrics and any(s.source for s in corpus.sentences):
        out["wer"] = float(hypothesis_wer(corpus, hyp.sentences, params.ref_policy).wer)
    return MetricReport(**out)


# worker-process state, filled by _init_worker
_CORPORA: dict[str, Corpus] = {}


def _init_worker(corpora):
    _CORPORA.clear()
    _CORPORA.update(corpora)


def _run_job(job):
    corpus_name, hyp, metrics, params, cwer = job
    return score_hypotheses(_CORPORA[corpus_name], hyp, metrics, params, cwer)


def default_jobs() -> int:
    return os.cpu_count() or 1


def load_corpora(manifest: RunManifest) -> dict[str, Corpus]:
    return {c.name: c.load() for c in manifest.corpora}


def evaluate(
    manifest: RunManifest,
    jobs: int = 1,
    keep_going: bool = False,
    corpora: dict[str, Corpus] | None = None,
) -> tuple[list[MetricReport], list[EntryFailure]]:
    """Score every (system, corpus, run) in the manifest.

    Unreadable or misaligned hypothesis files are collected first; unless
    ``keep_going`` is set, any such failure aborts before scoring starts.
    Reports come back ordered by corpus (manifest order), system name, run.
    """
    if corpora is None:
        corpora = load_corpora(manifest)
    cwer = {}
    for name, corpus in corpora.items():
        if corpus.sentences and any(s.source for s in corpus.sentences):
            cwer[name] = float(corpus_properties(corpus, ref_policy=manifest.params.ref_policy).wer)
        else:
            cwer[name] = None

    work, failures = [], []
    for c_index, entry in enumerate(manifest.corpora):
        corpus = corpora[entry.name]
        for system in sorted(manifest.systems, key=lambda s: s.name):
            for run in sorted(system.run_ids):
                path = system.path(entry.name, run)
                try:
                    if path is None:
                        raise ScoringError(f"no hypothesis file configured for corpus {entry.name!r}")
                    hyp = HypothesisSet.from_lines(system.name, run, read_lines(path))
                    hyp.check_against(corpus)
                except (OSError, UnicodeDecodeError, ScoringError) as exc:
                    failures.append(EntryFailure(system.name, entry.name, run, str(exc)))
                    continue
                work.append((entry.name, hyp, manifest.metrics, manifest.params, cwer[entry.name]))
    if failures and not keep_going:
        raise EvaluationError(failures)
    for f in failures:
        log.warning("skipping %s/%s/run%d: %s", f.system, f.corpus, f.run_id, f.message)

    if jobs <= 1 or len(work) <= 1:
        _init_worker(corpora)
        reports = [_run_job(job) for job in work]
    else:
        with ProcessPoolExecutor(jobs, initializer=_init_worker, initargs=(corpora,)) as pool:
            reports = list(pool.map(_run_job, work))
    return reports, failures


@dataclass(frozen=True)
class Aggregate:
    system: str
    corpus: str
    runs: int
    mean: dict = field(default_factory=dict)
    std: dict = field(default_factory=dict)


def aggregate_runs(reports: Sequence[MetricReport]) -> list[Aggregate]:
    """Mean and sample standard deviation of each metric over runs.

    Mean F is the mean of per-run F values, not F of the mean precision and
    recall; the two can differ.
    """
    groups: dict[tuple[str, str], list[MetricReport]] = {}
    for r in reports:
        groups.setdefault((r.system, r.corpus), []).append(r)
    out = []
    for (system, corpus), rows in groups.items():
        mean, std = {}, {}
        for name in SCORE_FIELDS:
            values = [getattr(r, name) for r in rows if getattr(r, name) is not None]
            if not values:
                continue
            mean[name] = math.fsum(values) / len(values)
            std[name] = statistics.stdev(values) if len(values) > 1 else 0.0
        out.append(Aggregate(system, corpus, len(rows), mean, std))
    return out


def kendall_tau_b(x: Sequence[float], y: Sequence[float]) -> float | None:
    """Tie-corrected Kendall rank correlation; None when either side is constant."""
    if len(x) != len(y):
        raise ValueError("score vectors differ in length")
    concordant = discordant = ties_x = ties_y = 0
    for i, j in combinations(range(len(x)), 2):
        dx = (x[i] > x[j]) - (x[i] < x[j])
        dy = (y[i] > y[j]) - (y[i] < y[j])
        if dx == 0 and dy == 0:
            continue
        if dx == 0:
            ties_x += 1
        elif dy == 0:
            ties_y += 1
        elif dx == dy:
            concordant += 1
        else:
            discordant += 1
    n_x = concordant + discordant + ties_y  # pairs not tied in x
    n_y = concordant + discordant + ties_x
    if n_x == 0 or n_y == 0:
        return None
    return (concordant - discordant) / math.sqrt(n_x * n_y)


@dataclass(frozen=True)
class RankingTable:
    metric: str
    corpora: tuple[str, ...]
    systems: tuple[str, ...]
    rankings: dict  # corpus -> list of (system, score), best first
    tau: dict  # (corpus_a, corpus_b) -> tau-b or None
    top_disagreement: bool

    def top(self, corpus: str) -> str:
        return self.rankings[corpus][0][0]

    def rank_of(self, corpus: str, system: str) -> int:
        return [s for s, _ in self.rankings[corpus]].index(system) + 1


def rank_systems(aggregated: Sequence[Aggregate], metric: str = "f_beta", descending: bool = True) -> RankingTable:
    """Order systems per corpus by mean ``metric`` and correlate the orderings."""
    corpora = list(dict.fromkeys(a.corpus for a in aggregated))
    systems = sorted({a.system for a in aggregated})
    cell = {(a.system, a.corpus): a.mean.get(metric) for a in aggregated}
    holes = [f"{s}/{c}" for c in corpora for s in systems if cell.get((s, c)) is None]
    if holes:
        raise ScoringError(f"missing {metric} scores for: {', '.join(holes)}")

    sign = -1 if descending else 1
    rankings = {
        c: sorted(((s, cell[(s, c)]) for s in systems), key=lambda t: (sign * t[1], t[0]))
        for c in corpora
    }
    tau = {}
    for a, b in combinations(corpora, 2):
        tau[(a, b)] = kendall_tau_b([cell[(s, a)] for s in systems], [cell[(s, b)] for s in systems])
    tops = {rankings[c][0][0] for c in corpora}
    return RankingTable(metric, tuple(corpora), tuple(systems), rankings, tau, len(tops) > 1)


@dataclass(frozen=True)
class ExtremesTable:
    low: str
    high: str
    low_wer: Fraction
    high_wer: Fraction
    rows: list  # (system, (P, R, F) on low, (P, R, F) on high)
    notes: list


def wer_extremes_report(
    aggregated: Sequence[Aggregate], properties: dict[str, CorpusProperties]
) -> ExtremesTable:
    """P/R/F of every system on the lowest- and highest-WER corpora."""
    scored = {a.corpus for a in aggregated}
    cands = sorted(
        (name, p.wer) for name, p in properties.items() if p.wer is not None and name in scored
    )
    if len(cands) < 2:
        raise ScoringError("the WER extremes report needs at least two corpora with a defined WER")
    lo_val = min(w for _, w in cands)
    hi_val = max(w for _, w in cands)
    lows = [n for n, w in cands if w == lo_val]
    highs = [n for n, w in cands if w == hi_val]
    low, high = lows[0], highs[0]
    if high == low:
        # every corpus has the same WER; keep the two columns distinct
        high = highs[1]
    notes = []
    if len(lows) > 1:
        notes.append(f"lowest WER tied between {', '.join(lows)}; using {low}")
    if len(highs) > 1:
        notes.append(f"highest WER tied between {', '.join(highs)}; using {high}")
    by_cell = {(a.system, a.corpus): a for a in aggregated}
    rows = []
    for system in sorted({a.system for a in aggregated}):
        sides = []
        for corpus in (low, high):
            agg = by_cell.get((system, corpus))
            sides.append(tuple(agg.mean.get(k) if agg else None for k in ("precision", "recall", "f_beta")))
        rows.append((system, sides[0], sides[1]))
    return ExtremesTable(low, high, lo_val, hi_val, rows, notes)


def properties_for(corpora: dict[str, Corpus], ref_policy: str = "first") -> dict[str, CorpusProperties]:
    return {name: corpus_properties(c, ref_policy=ref_policy) for name, c in corpora.items()}
