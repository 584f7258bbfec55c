"""Run manifests: which corpora, which systems, which metrics.

A manifest is YAML::

    metrics: [f_beta, gleu, wer]
    params:
      beta: 0.5
      seed: 0
    corpora:
      - name: conll14
        format: m2
        path: data/conll14.m2
        metadata: {topics: 2, multiple_l1: false, multiple_proficiency: false, public: true}
      - name: jfleg
        format: parallel
        source: data/jfleg.src
        references: [data/jfleg.ref0, data/jfleg.ref1]
    systems:
      - name: transformer
        run_ids: [0, 1, 2, 3]
        hypotheses:
          conll14: out/transformer/conll14.run{run}.txt
          jfleg: out/transformer/jfleg.run{run}.txt

Relative paths are resolved against the manifest's directory.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from pathlib import Path

import yaml

from .core import (
    AnnotatedSentence,
    Corpus,
    CorpusMetadata,
    ParseError,
    ValidationError,
    read_lines,
    tokenize,
)
from .m2 import load_m2
from .wer import REF_POLICIES

METRICS = ("f_beta", "gleu", "wer")


@dataclass(frozen=True)
class MetricParams:
    beta: float = 0.5
    gleu_order: int = 4
    iterations: int = 500
    seed: int = 0
    gleu_smooth: bool = False
    max_unchanged_words: int = 2
    case_insensitive: bool = False
    ref_policy: str = "first"

    def __post_init__(self):
        if self.ref_policy not in REF_POLICIES:
            raise ValidationError(f"ref_policy must be one of {REF_POLICIES}, got {self.ref_policy!r}")
        if self.beta <= 0:
            raise ValidationError("beta must be positive")
        if self.gleu_order < 1 or self.iterations < 1 or self.max_unchanged_words < 0:
            raise ValidationError("gleu_order and iterations must be >= 1, max_unchanged_words >= 0")


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    format: str
    paths: tuple[Path, ...]
    metadata: CorpusMetadata = CorpusMetadata()

    def load(self) -> Corpus:
        if self.format == "m2":
            return load_m2(self.paths[0], self.name, self.metadata)
        return load_parallel(self.name, self.paths[0], self.paths[1:], self.metadata)


@dataclass(frozen=True)
class SystemEntry:
    name: str
    run_ids: tuple[int, ...]
    hypotheses: dict  # corpus name -> path template with optional {run}

    def path(self, corpus: str, run_id: int) -> Path | None:
        template = self.hypotheses.get(corpus)
        if template is None:
            return None
        return Path(str(template).format(run=run_id, system=self.name, corpus=corpus))


@dataclass(frozen=True)
class RunManifest:
    corpora: tuple[CorpusEntry, ...]
    systems: tuple[SystemEntry, ...]
    metrics: tuple[str, ...] = METRICS
    params: MetricParams = MetricParams()
    source: Path | None = field(default=None, compare=False)

    def missing_files(self) -> list[str]:
        problems = []
        for c in self.corpora:
            for p in c.paths:
                if not p.is_file():
                    problems.append(f"corpus {c.name!r}: file not found: {p}")
        for s in self.systems:
            for c in self.corpora:
                for run in s.run_ids:
                    p = s.path(c.name, run)
                    if p is None:
                        problems.append(f"system {s.name!r}: no hypothesis entry for corpus {c.name!r}")
                        break
                    if not p.is_file():
                        problems.append(f"system {s.name!r} run {run}: file not found: {p}")
        return problems


def load_parallel(name: str, source_path, reference_paths, metadata=None) -> Corpus:
    """Corpus from a tokenized source file plus one file per reference."""
    sources = read_lines(source_path)
    refs = [read_lines(p) for p in reference_paths]
    if not refs:
        raise ValidationError(f"parallel corpus {name!r} needs at least one reference file")
    for p, r in zip(reference_paths, refs):
        if len(r) != len(sources):
            raise ValidationError(
                f"parallel corpus {name!r}: {p} has {len(r)} lines, source has {len(sources)}"
            )
    sentences = [
        AnnotatedSentence(tokenize(src), {}, tuple(tokenize(r[i]) for r in refs))
        for i, src in enumerate(sources)
    ]
    return Corpus(name, tuple(sentences), metadata or CorpusMetadata())


def _metadata(raw) -> CorpusMetadata:
    raw = raw or {}
    known = {f.name for f in fields(CorpusMetadata)}
    unknown = set(raw) - known
    if unknown:
        raise ValidationError(f"unknown corpus metadata keys: {sorted(unknown)}")
    return CorpusMetadata(**raw)


def _resolve(base: Path, p) -> Path:
    p = Path(os.path.expanduser(str(p)))
    return p if p.is_absolute() else base / p


def manifest_from_dict(data: dict, base: Path = Path(".")) -> RunManifest:
    if not isinstance(data, dict):
        raise ParseError("manifest must be a mapping")
    corpora = []
    for i, c in enumerate(data.get("corpora") or []):
        try:
            name, fmt = str(c["name"]), c.get("format", "m2")
        except (KeyError, TypeError):
            raise ValidationError(f"corpora[{i}] needs a name") from None
        if fmt == "m2":
            if "path" not in c:
                raise ValidationError(f"corpus {name!r}: m2 format needs 'path'")
            paths = (_resolve(base, c["path"]),)
        elif fmt == "parallel":
            if "source" not in c or not c.get("references"):
                raise ValidationError(f"corpus {name!r}: parallel format needs 'source' and 'references'")
            paths = (_resolve(base, c["source"]),) + tuple(_resolve(base, r) for r in c["references"])
        else:
            raise ValidationError(f"corpus {name!r}: unknown format {fmt!r} (expected m2 or parallel)")
        corpora.append(CorpusEntry(name, fmt, paths, _metadata(c.get("metadata"))))

    systems = []
    for i, s in enumerate(data.get("systems") or []):
        if not isinstance(s, dict) or "name" not in s:
            raise ValidationError(f"systems[{i}] needs a name")
        hyps = {str(k): str(_resolve(base, v)) for k, v in (s.get("hypotheses") or {}).items()}
        run_ids = tuple(int(r) for r in s.get("run_ids", [0]))
        if len(set(run_ids)) != len(run_ids):
            raise ValidationError(f"system {s['name']!r}: duplicate run ids")
        systems.append(SystemEntry(str(s["name"]), run_ids, hyps))

    for kind, items in (("corpus", corpora), ("system", systems)):
        names = [x.name for x in items]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise ValidationError(f"duplicate {kind} names: {dupes}")

    metrics = tuple(data.get("metrics") or METRICS)
    bad = [m for m in metrics if m not in METRICS]
    if bad:
        raise ValidationError(f"unknown metrics {bad}; expected a subset of {METRICS}")

    raw_params = data.get("params") or {}
    known = {f.name for f in fields(MetricParams)}
    unknown = set(raw_params) - known
    if unknown:
        raise ValidationError(f"unknown params: {sorted(unknown)}")
    return RunManifest(tuple(corpora), tuple(systems), metrics, MetricParams(**raw_params))


def load_manifest(path) -> RunManifest:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        line = getattr(getattr(exc, "problem_mark", None), "line", None)
        raise ParseError(f"invalid YAML: {exc}", None if line is None else line + 1, str(path)) from None
    manifest = manifest_from_dict(data or {}, path.parent)
    return RunManifest(manifest.corpora, manifest.systems, manifest.metrics, manifest.params, path)
