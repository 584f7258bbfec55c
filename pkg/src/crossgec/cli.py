"""Command-line interface: ``crossgec {stats,score,compare,convert,validate}``.

Exit codes: 0 success, 1 validation/parse failure, 2 scoring failure,
3 I/O failure. Any failure prints one line to stderr of the form
``crossgec: error[<kind>] <message>``.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .core import (
    CorpusMetadata,
    HypothesisSet,
    ParseError,
    ScoringError,
    ValidationError,
    read_lines,
)
from .harness import (
    EvaluationError,
    aggregate_runs,
    default_jobs,
    evaluate,
    load_corpora,
    rank_systems,
    score_hypotheses,
    wer_extremes_report,
)
from .m2 import load_m2, parse_m2, to_parallel, validate_m2
from .manifest import METRICS, MetricParams, load_manifest, load_parallel
from .reports import (
    extremes_md,
    properties_table,
    rankings_md,
    report_json,
    reports_table,
    scores_csv,
    write_text,
)
from .wer import REF_POLICIES, corpus_properties

OUTPUT_DIR_ENV = "CROSSGEC_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "crossgec-out"

EXIT_OK, EXIT_INVALID, EXIT_SCORING, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("crossgec")


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str):
        super().__init__(message)
        self.code = code
        self.kind = kind


def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV, DEFAULT_OUTPUT_DIR))


def _add_metric_flags(p: argparse.ArgumentParser) -> None:
    d = MetricParams()
    g = p.add_argument_group("metric parameters")
    g.add_argument("--beta", type=float, default=d.beta, help="F-measure beta (default: %(default)s)")
    g.add_argument("--max-unchanged-words", type=int, default=d.max_unchanged_words,
                   help="max unchanged tokens inside a merged system edit (default: %(default)s)")
    g.add_argument("--case-insensitive", action="store_true", help="compare edits ignoring case")
    g.add_argument("--gleu-order", type=int, default=d.gleu_order, help="GLEU max n-gram order (default: %(default)s)")
    g.add_argument("--iterations", type=int, default=d.iterations,
                   help="GLEU reference-sampling iterations (default: %(default)s)")
    g.add_argument("--seed", type=int, default=d.seed, help="GLEU sampling seed (default: %(default)s)")
    g.add_argument("--gleu-smooth", action="store_true", help="add-one smoothing for n >= 2")
    g.add_argument("--ref-policy", choices=REF_POLICIES, default=d.ref_policy,
                   help="which reference WER uses on multi-reference corpora (default: %(default)s)")


def _params(args) -> MetricParams:
    return MetricParams(
        beta=args.beta, gleu_order=args.gleu_order, iterations=args.iterations, seed=args.seed,
        gleu_smooth=args.gleu_smooth, max_unchanged_words=args.max_unchanged_words,
        case_insensitive=args.case_insensitive, ref_policy=args.ref_policy,
    )


def _load_corpus(args):
    if args.m2:
        return load_m2(args.m2, name=args.name or Path(args.m2).stem)
    if args.source and args.ref:
        return load_parallel(args.name or Path(args.source).stem, args.source, args.ref)
    raise CliError(EXIT_INVALID, "usage", "give a corpus with --m2 or with --source and --ref")


def cmd_stats(args) -> int:
    props = []
    if args.manifest:
        manifest = load_manifest(args.manifest)
        for entry in manifest.corpora:
            props.append(corpus_properties(entry.load(), entry.metadata, args.ref_policy))
    for path in args.m2 or []:
        corpus = load_m2(path, name=Path(path).stem)
        props.append(corpus_properties(corpus, CorpusMetadata(), args.ref_policy))
    if not props:
        raise CliError(EXIT_INVALID, "usage", "nothing to describe; pass --m2 or --manifest")
    sys.stdout.write(properties_table(props, args.format))
    return EXIT_OK


def cmd_score(args) -> int:
    corpus = _load_corpus(args)
    params = _params(args)
    metrics = [m.strip() for m in args.metrics.split(",") if m.strip()]
    bad = [m for m in metrics if m not in METRICS]
    if bad:
        raise CliError(EXIT_INVALID, "usage", f"unknown metrics {bad}; choose from {','.join(METRICS)}")
    if "f_beta" in metrics and not corpus.has_gold:
        log.warning("corpus %s has no gold edits; skipping f_beta", corpus.name)
    reports = []
    for run_id, path in enumerate(args.hyp):
        hyp = HypothesisSet.from_lines(args.system, run_id, read_lines(path))
        if len(hyp.sentences) != len(corpus.sentences):
            raise CliError(
                EXIT_SCORING, "scoring",
                f"{path} has {len(hyp.sentences)} lines but corpus {corpus.name} has "
                f"{len(corpus.sentences)} sentences",
            )
        reports.append(score_hypotheses(corpus, hyp, metrics, params))
    sys.stdout.write(reports_table(reports, args.format))
    return EXIT_OK


def cmd_compare(args) -> int:
    manifest = load_manifest(args.manifest)
    if not manifest.systems:
        raise CliError(EXIT_INVALID, "validation", "no systems configured")
    if not manifest.corpora:
        raise CliError(EXIT_INVALID, "validation", "no corpora configured")
    out_dir = Path(args.out_dir) if args.out_dir else default_output_dir()
    missing = [p for c in manifest.corpora for p in c.paths if not p.is_file()]
    if missing:
        raise CliError(EXIT_IO, "io", f"corpus file not found: {missing[0]}")
    corpora = load_corpora(manifest)

    failures = []
    try:
        reports, failures = evaluate(manifest, jobs=args.jobs, keep_going=args.keep_going, corpora=corpora)
    except EvaluationError as exc:
        out_dir.mkdir(parents=True, exist_ok=True)
        write_text(out_dir / "failures.json", _failures_json(exc.failures))
        raise CliError(EXIT_SCORING, "scoring",
                       f"{len(exc.failures)} entries failed (see {out_dir / 'failures.json'}); "
                       f"first: {exc.failures[0].system}/{exc.failures[0].corpus}/run{exc.failures[0].run_id}: "
                       f"{exc.failures[0].message}") from None

    aggregated = aggregate_runs(reports)
    props = {c.name: corpus_properties(corpora[c.name], c.metadata, manifest.params.ref_policy)
             for c in manifest.corpora}
    tables = []
    for metric in ("f_beta", "gleu_mean"):
        usable = [a for a in aggregated if metric in a.mean]
        if not usable:
            continue
        cov = {a.corpus for a in usable}
        try:
            tables.append(rank_systems([a for a in aggregated if a.corpus in cov], metric))
        except ScoringError as exc:
            raise CliError(EXIT_SCORING, "scoring", str(exc)) from None

    with_f = [a for a in aggregated if "f_beta" in a.mean]
    extremes = None
    if len({a.corpus for a in with_f}) >= 2:
        extremes = wer_extremes_report(with_f, props)

    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        write_text(out_dir / "scores.csv", scores_csv(reports))
        write_text(out_dir / "rankings.md", rankings_md(tables))
        write_text(out_dir / "extremes.md", extremes_md(extremes) if extremes else
                   "# Performance on the lowest- and highest-WER corpora\n\n"
                   "Not available: needs at least two corpora scored with F0.5.\n")
        write_text(out_dir / "report.json",
                   report_json(reports, aggregated, tables, extremes, list(props.values()), failures))
        if failures:
            write_text(out_dir / "failures.json", _failures_json(failures))
    except OSError as exc:
        raise CliError(EXIT_IO, "io", f"cannot write reports to {out_dir}: {exc}") from None

    for t in tables:
        tops = ", ".join(f"{c}={t.top(c)}" for c in t.corpora)
        print(f"top-system-disagreement[{t.metric}]: {'yes' if t.top_disagreement else 'no'} ({tops})")
    print(f"reports written to {out_dir}")
    if failures:
        raise CliError(EXIT_SCORING, "scoring",
                       f"{len(failures)} entries skipped (see {out_dir / 'failures.json'})")
    return EXIT_OK


def _failures_json(failures) -> str:
    return json.dumps([f.__dict__ for f in failures], indent=2, sort_keys=True) + "\n"


def cmd_convert(args) -> int:
    with open(args.m2, encoding="utf-8", newline="") as fh:
        doc = parse_m2(fh.read())
    sources, refs = to_parallel(doc, args.policy)
    out_dir = Path(args.out_dir) if args.out_dir else default_output_dir()
    stem = Path(args.m2).stem
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        written = [out_dir / f"{stem}.src"]
        write_text(written[0], "".join(l + "\n" for l in sources))
        for k, lines in refs.items():
            path = out_dir / f"{stem}.ref{k}"
            write_text(path, "".join(l + "\n" for l in lines))
            written.append(path)
    except OSError as exc:
        raise CliError(EXIT_IO, "io", f"cannot write to {out_dir}: {exc}") from None
    for p in written:
        print(p)
    return EXIT_OK


def _validate_manifest(path) -> list[str]:
    try:
        manifest = load_manifest(path)
    except (ParseError, ValidationError) as exc:
        return [f"{path}: {exc}"]
    problems = [f"{path}: {p}" for p in manifest.missing_files()]
    if not manifest.systems:
        problems.append(f"{path}: no systems configured")
    sizes = {}
    for entry in manifest.corpora:
        if not all(p.is_file() for p in entry.paths):
            continue
        try:
            sizes[entry.name] = len(entry.load())
        except (ParseError, ValidationError) as exc:
            problems.append(f"{path}: corpus {entry.name!r}: {exc}")
    for system in manifest.systems:
        for name, size in sizes.items():
            for run in system.run_ids:
                p = system.path(name, run)
                if p is not None and p.is_file():
                    n = len(read_lines(p))
                    if n != size:
                        problems.append(f"{p}: {n} lines, corpus {name!r} has {size} sentences")
    return problems


def cmd_validate(args) -> int:
    problems = []
    plain = []
    for path in args.paths:
        suffix = Path(path).suffix.lower()
        if suffix in (".yaml", ".yml"):
            problems.extend(_validate_manifest(path))
        elif suffix == ".m2":
            with open(path, encoding="utf-8", newline="") as fh:
                problems.extend(f"{path}: {p}" for p in validate_m2(fh.read()))
        else:
            plain.append(path)
    counts = {}
    for path in plain:
        try:
            counts[path] = len(read_lines(path))
        except UnicodeDecodeError as exc:
            problems.append(f"{path}: not valid UTF-8 ({exc.reason} at byte {exc.start})")
    if len(set(counts.values())) > 1:
        listing = ", ".join(f"{p}={n}" for p, n in counts.items())
        problems.append(f"plain-text files differ in line count: {listing}")
    if args.corpus:
        size = len(load_m2(args.corpus))
        for path, n in counts.items():
            if n != size:
                problems.append(f"{path}: {n} lines, corpus {args.corpus} has {size} sentences")
    for p in problems:
        print(p)
    if problems:
        raise CliError(EXIT_INVALID, "validation", f"{len(problems)} problem(s); first: {problems[0]}")
    print("ok")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crossgec",
        description="Cross-corpus evaluation of grammatical error correction systems.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="corpus property table (sentences, refs, WER, metadata)")
    p.add_argument("--m2", nargs="+", help="M2 gold file(s)")
    p.add_argument("--manifest", help="run manifest; describes every corpus it lists")
    p.add_argument("--ref-policy", choices=REF_POLICIES, default="first")
    p.add_argument("--format", choices=("md", "csv", "json"), default="md")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("score", help="score one system's hypothesis file(s) on one corpus")
    p.add_argument("--m2", help="gold M2 file")
    p.add_argument("--source", help="tokenized source file (parallel corpus)")
    p.add_argument("--ref", nargs="+", help="reference file(s) (parallel corpus)")
    p.add_argument("--name", help="corpus name (default: file stem)")
    p.add_argument("--hyp", nargs="+", required=True, help="hypothesis file per run")
    p.add_argument("--system", default="system", help="system name for the report")
    p.add_argument("--metrics", default="f_beta,gleu", help="comma-separated subset of f_beta,gleu,wer")
    p.add_argument("--format", choices=("md", "csv", "json"), default="md")
    _add_metric_flags(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("compare", help="run a manifest and write cross-corpus reports")
    p.add_argument("manifest")
    p.add_argument("--out-dir", help=f"output directory (default: ${OUTPUT_DIR_ENV} or {DEFAULT_OUTPUT_DIR})")
    p.add_argument("--jobs", type=int, default=default_jobs(), help="worker processes (default: %(default)s)")
    p.add_argument("--keep-going", action="store_true", help="skip failing entries instead of aborting")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("convert", help="M2 to parallel source/reference text")
    p.add_argument("m2")
    p.add_argument("--policy", choices=("all", "first"), default="all")
    p.add_argument("--out-dir", help=f"output directory (default: ${OUTPUT_DIR_ENV} or {DEFAULT_OUTPUT_DIR})")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("validate", help="check M2 files, manifests and plain-text hypothesis files")
    p.add_argument("paths", nargs="+")
    p.add_argument("--corpus", help="M2 file whose sentence count plain-text files must match")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except CliError as exc:
        code, kind, msg = exc.code, exc.kind, str(exc)
    except ParseError as exc:
        code, kind, msg = EXIT_INVALID, "parse", str(exc)
    except ValidationError as exc:
        code, kind, msg = EXIT_INVALID, "validation", str(exc)
    except ScoringError as exc:
        code, kind, msg = EXIT_SCORING, "scoring", str(exc)
    except EvaluationError as exc:
        code, kind, msg = EXIT_SCORING, "scoring", str(exc)
    except (OSError, UnicodeDecodeError) as exc:
        code, kind, msg = EXIT_IO, "io", str(exc)
    sys.stdout.flush()
    print(f"crossgec: error[{kind}] {' '.join(msg.split())}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
