"""Synthetic corpora and system outputs for desk-scale studies and benchmarks.

Real learner corpora are licensed and not bundled. These generators build
M2-style corpora with a known gold edit set, plus system outputs that fix a
chosen number of gold errors, so that precision/recall are known by
construction.
"""

from __future__ import annotations

import random
from pathlib import Path
from typing import Mapping, Sequence

import yaml

from .core import AnnotatedSentence, Corpus, CorpusMetadata, Edit, HypothesisSet, apply_edits
from .m2 import M2Document, serialize_m2

VOCAB = tuple(f"w{i}" for i in range(2000))
FILLERS = ("the", "a", "of", "to", "in", "on", "at", "is", "are", ",", ".")


def _token(rng: random.Random) -> str:
    return rng.choice(FILLERS) if rng.random() < 0.3 else rng.choice(VOCAB)


def random_corpus(
    name: str,
    n_sentences: int,
    seed: int = 0,
    min_len: int = 8,
    max_len: int = 30,
    max_edits: int = 3,
    annotators: int = 1,
    metadata: CorpusMetadata = CorpusMetadata(),
) -> Corpus:
    """Random sentences, each with 0..max_edits gold edits per annotator."""
    rng = random.Random(seed)
    sentences = []
    for _ in range(n_sentences):
        source = tuple(_token(rng) for _ in range(rng.randint(min_len, max_len)))
        gold = {}
        for ann in range(annotators):
            edits: list[Edit] = []
            for _ in range(rng.randint(0, max_edits)):
                start = rng.randrange(len(source) + 1)
                end = min(len(source), start + rng.choice((0, 1, 1, 1, 2)))
                repl = tuple(_token(rng) for _ in range(rng.choice((0, 1, 1, 1, 2))))
                if start == end and not repl:
                    continue
                e = Edit(start, end, repl, "X", ann)
                if not any(e.overlaps(o) for o in edits):
                    edits.append(e)
            gold[ann] = frozenset(edits)
        sentences.append(AnnotatedSentence(source, gold))
    return Corpus(name, tuple(sentences), metadata)


def noisy_hypotheses(
    corpus: Corpus, system: str, run_id: int, fix_rate: float, noise_rate: float, seed: int = 0
) -> HypothesisSet:
    """Apply each annotator-0 gold edit with probability ``fix_rate`` and add
    a spurious substitution to a sentence with probability ``noise_rate``."""
    rng = random.Random(seed)
    out = []
    for sent in corpus.sentences:
        gold = sorted(sent.gold[min(sent.gold)], key=lambda e: (e.start, e.end))
        chosen = [e for e in gold if rng.random() < fix_rate]
        if sent.source and rng.random() < noise_rate:
            i = rng.randrange(len(sent.source))
            extra = Edit(i, i + 1, (_token(rng),))
            if not any(extra.overlaps(e) for e in gold):
                chosen.append(extra)
        out.append(apply_edits(sent.source, chosen))
    return HypothesisSet(system, run_id, tuple(out))


def one_error_corpus(name: str, n_sentences: int, seed: int = 0, length: int = 6, **meta) -> Corpus:
    """Every sentence has ``length`` tokens and exactly one gold substitution."""
    rng = random.Random(seed)
    sentences = []
    for k in range(n_sentences):
        source = tuple(f"s{k}t{i}" for i in range(length))
        i = rng.randrange(length)
        sentences.append(AnnotatedSentence(source, {0: frozenset({Edit(i, i + 1, (f"fix{k}",), "X", 0)})}))
    return Corpus(name, tuple(sentences), CorpusMetadata(**meta))


def fixing_hypotheses(corpus: Corpus, system: str, fixed: int, wrong: int = 0, run_id: int = 0) -> HypothesisSet:
    """Fix the first ``fixed`` sentences' gold edits and spoil ``wrong`` others.

    On a :func:`one_error_corpus` this gives tp=fixed, fp=wrong, fn=n-fixed.
    """
    out = []
    for k, sent in enumerate(corpus.sentences):
        (edit,) = sent.gold[0]
        if k < fixed:
            out.append(apply_edits(sent.source, {edit}))
        elif k < fixed + wrong:
            j = (edit.start + 1) % len(sent.source)
            out.append(apply_edits(sent.source, {Edit(j, j + 1, (f"bad{k}",))}))
        else:
            out.append(sent.source)
    return HypothesisSet(system, run_id, tuple(out))


def write_lines(path: Path, sentences: Sequence[Sequence[str]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(" ".join(s) + "\n" for s in sentences)


def write_study(
    directory: Path,
    corpora: Sequence[Corpus],
    outputs: Mapping[str, Mapping[str, Sequence[HypothesisSet]]],
    metrics: Sequence[str] = ("f_beta", "gleu", "wer"),
    params: Mapping | None = None,
) -> Path:
    """Write corpora (M2), hypothesis files and a manifest; return the manifest path.

    ``outputs`` maps system -> corpus name -> one HypothesisSet per run.
    """
    directory = Path(directory)
    (directory / "hyp").mkdir(parents=True, exist_ok=True)
    entries = []
    for c in corpora:
        path = directory / f"{c.name}.m2"
        path.write_text(serialize_m2(M2Document(c.sentences)), encoding="utf-8")
        meta = {k: v for k, v in vars(c.metadata).items() if v is not None}
        entry = {"name": c.name, "format": "m2", "path": path.name}
        if meta:
            entry["metadata"] = meta
        entries.append(entry)
    systems = []
    for system, per_corpus in outputs.items():
        hyps, run_ids = {}, set()
        for corpus_name, runs in per_corpus.items():
            for h in runs:
                write_lines(directory / "hyp" / f"{system}.{corpus_name}.run{h.run_id}.txt", h.sentences)
                run_ids.add(h.run_id)
            hyps[corpus_name] = f"hyp/{system}.{corpus_name}.run{{run}}.txt"
        systems.append({"name": system, "run_ids": sorted(run_ids), "hypotheses": hyps})
    manifest = {"metrics": list(metrics), "corpora": entries, "systems": systems}
    if params:
        manifest["params"] = dict(params)
    path = directory / "manifest.yaml"
    path.write_text(yaml.safe_dump(manifest, sort_keys=False), encoding="utf-8")
    return path


def ranking_flip_study(directory: Path, n: int = 100) -> Path:
    """Four systems on two corpora; T leads corpus A, L leads corpus B by more than 5.3 F0.5 points.

    Every system makes no false positives, so F0.5 = 1.25 R / (0.25 + R).
    """
    a = one_error_corpus("corpus_a", n, seed=1, topics=2, multiple_l1=False)
    b = one_error_corpus("corpus_b", n, seed=2, length=8, topics=10, multiple_l1=True)
    fixes = {
        "T": {"corpus_a": 60, "corpus_b": 40},
        "L": {"corpus_a": 50, "corpus_b": 60},
        "C": {"corpus_a": 45, "corpus_b": 45},
        "S": {"corpus_a": 30, "corpus_b": 30},
    }
    corpora = {"corpus_a": a, "corpus_b": b}
    outputs = {
        system: {c: [fixing_hypotheses(corpora[c], system, k * n // 100)] for c, k in per.items()}
        for system, per in fixes.items()
    }
    return write_study(directory, [a, b], outputs, metrics=("f_beta", "gleu"), params={"iterations": 20})
