"""CSV, Markdown and JSON renderings of scores, rankings and corpus tables.

Scores are shown as percentages with two decimals (half-up rounding).
Every writer emits UTF-8 with LF line endings and nothing time- or
locale-dependent, so reruns produce identical bytes.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Sequence

from .harness import Aggregate, ExtremesTable, MetricReport, RankingTable
from .wer import CorpusProperties, percent

SCORE_COLUMNS = (
    "system", "corpus", "run_id", "sentences", "tp", "fp", "fn",
    "precision", "recall", "f_beta", "gleu_mean", "gleu_std", "wer", "corpus_wer",
)
PERCENT_COLUMNS = {"precision", "recall", "f_beta", "gleu_mean", "gleu_std", "wer", "corpus_wer"}
PROPERTY_COLUMNS = ("corpus", "sentences", "refs", "wer", "topics", "multiple_l1", "multiple_proficiency", "public")
METRIC_LABELS = {"f_beta": "F0.5", "gleu_mean": "GLEU", "wer": "WER", "precision": "P", "recall": "R"}


def fmt(value) -> str:
    return "" if value is None else percent(value)


def _csv(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def _md_table(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join(["---"] * len(header)) + "|"]
    for row in rows:
        lines.append("| " + " | ".join(str(c) for c in row) + " |")
    return "\n".join(lines) + "\n"


def scores_csv(reports: Sequence[MetricReport]) -> str:
    rows = []
    for r in reports:
        d = r.to_dict()
        rows.append({k: (fmt(d[k]) if k in PERCENT_COLUMNS else ("" if d[k] is None else d[k]))
                     for k in SCORE_COLUMNS})
    return _csv(rows, SCORE_COLUMNS)


def properties_table(props: Sequence[CorpusProperties], fmt_name: str = "md") -> str:
    rows = [p.row() for p in props]
    if fmt_name == "csv":
        return _csv(rows, PROPERTY_COLUMNS)
    if fmt_name == "json":
        return json.dumps(rows, indent=2, ensure_ascii=False) + "\n"
    header = ["Corpus", "# sent.", "# refs.", "WER", "# topics", "Multiple L1",
              "Multiple proficiency", "Public available"]
    return _md_table(header, [[r[c] for c in PROPERTY_COLUMNS] for r in rows])


def reports_table(reports: Sequence[MetricReport], fmt_name: str = "md") -> str:
    if fmt_name == "csv":
        return scores_csv(reports)
    if fmt_name == "json":
        return json.dumps([r.to_dict() for r in reports], indent=2, ensure_ascii=False) + "\n"
    cols = ["system", "corpus", "run_id", "precision", "recall", "f_beta", "gleu_mean", "gleu_std", "wer"]
    header = ["System", "Corpus", "Run", "P", "R", "F0.5", "GLEU", "GLEU std", "WER"]
    rows = []
    for r in reports:
        d = r.to_dict()
        rows.append([fmt(d[c]) if c in PERCENT_COLUMNS else d[c] for c in cols])
    return _md_table(header, rows)


def rankings_md(tables: Sequence[RankingTable]) -> str:
    parts = ["# Per-corpus system rankings\n"]
    for t in tables:
        label = METRIC_LABELS.get(t.metric, t.metric)
        parts.append(f"\n## {label}\n\nSystems ranked best to worst on each corpus.\n\n")
        depth = len(t.systems)
        header = ["Corpus"] + [f"#{i + 1}" for i in range(depth)]
        rows = [[c] + [f"{s} ({fmt(v)})" for s, v in t.rankings[c]] for c in t.corpora]
        parts.append(_md_table(header, rows))
        parts.append("\nRank of each system per corpus:\n\n")
        header = ["System"] + list(t.corpora)
        rows = [[s] + [t.rank_of(c, s) for c in t.corpora] for s in t.systems]
        parts.append(_md_table(header, rows))
        if t.tau:
            parts.append("\nKendall's tau-b between corpus rankings:\n\n")
            rows = [[a, b, "n/a" if v is None else f"{v:.4f}"] for (a, b), v in t.tau.items()]
            parts.append(_md_table(["Corpus A", "Corpus B", "tau-b"], rows))
        tops = ", ".join(f"{c}: {t.top(c)}" for c in t.corpora)
        flag = "yes" if t.top_disagreement else "no"
        parts.append(f"\nTop system per corpus: {tops}\n\nTop-system disagreement: {flag}\n")
    return "".join(parts)


def extremes_md(table: ExtremesTable) -> str:
    cols = [[row[1][k] for row in table.rows] for k in range(3)] + [[row[2][k] for row in table.rows] for k in range(3)]
    maxima = [max((v for v in col if v is not None), default=None) for col in cols]
    rows = []
    for i, (system, low, high) in enumerate(table.rows):
        cells = []
        for k, v in enumerate(low + high):
            text = fmt(v) if v is not None else "n/a"
            if v is not None and maxima[k] is not None and fmt(v) == fmt(maxima[k]):
                text = f"**{text}**"
            cells.append(text)
        rows.append([system] + cells)
    lo, hi = percent(table.low_wer), percent(table.high_wer)
    out = [
        "# Performance on the lowest- and highest-WER corpora\n\n",
        f"Low: {table.low} (WER {lo}); high: {table.high} (WER {hi}).\n\n",
        _md_table(
            ["System", f"P (low {lo})", f"R (low {lo})", f"F0.5 (low {lo})",
             f"P (high {hi})", f"R (high {hi})", f"F0.5 (high {hi})"],
            rows,
        ),
    ]
    for note in table.notes:
        out.append(f"\nNote: {note}\n")
    return "".join(out)


def report_json(
    reports: Sequence[MetricReport],
    aggregated: Sequence[Aggregate],
    rankings: Sequence[RankingTable],
    extremes: ExtremesTable | None,
    properties: Sequence[CorpusProperties],
    failures: Sequence = (),
) -> str:
    doc = {
        "corpora": [p.row() for p in properties],
        "runs": [r.to_dict() for r in reports],
        "aggregated": [
            {"system": a.system, "corpus": a.corpus, "runs": a.runs, "mean": a.mean, "std": a.std}
            for a in aggregated
        ],
        "rankings": [
            {
                "metric": t.metric,
                "rankings": {c: [{"system": s, "score": v} for s, v in t.rankings[c]] for c in t.corpora},
                "kendall_tau_b": [{"a": a, "b": b, "tau": v} for (a, b), v in t.tau.items()],
                "top_system_disagreement": t.top_disagreement,
            }
            for t in rankings
        ],
        "wer_extremes": None if extremes is None else {
            "low": extremes.low, "high": extremes.high,
            "low_wer": float(extremes.low_wer), "high_wer": float(extremes.high_wer),
            "rows": [{"system": s, "low": list(lo), "high": list(hi)} for s, lo, hi in extremes.rows],
            "notes": extremes.notes,
        },
        "failures": [f.__dict__ for f in failures],
    }
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def write_text(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
