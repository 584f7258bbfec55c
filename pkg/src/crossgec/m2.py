"""Reading and writing M2 gold-edit files.

A block looks like::

    S This are a sentence .
    A 1 2|||SVA|||is|||REQUIRED|||-NONE-|||0
    A 3 3|||ArtOrDet|||good|||REQUIRED|||-NONE-|||1

Blocks are separated by blank lines. ``A -1 -1|||noop|||...`` registers an
annotator who found nothing to correct.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from .core import (
    AnnotatedSentence,
    Corpus,
    CorpusMetadata,
    Edit,
    ParseError,
    Sentence,
    ValidationError,
    tokenize,
)

NOOP = "noop"
NONE_TOKEN = "-NONE-"


@dataclass(frozen=True)
class M2Document:
    sentences: tuple[AnnotatedSentence, ...]
    # verbatim (required, comment) fields keyed by (sentence index, edit); not used for scoring
    extras: dict = field(default_factory=dict, compare=False, repr=False)

    def __len__(self) -> int:
        return len(self.sentences)

    def to_corpus(self, name: str, metadata: CorpusMetadata | None = None) -> Corpus:
        return Corpus(name, self.sentences, metadata or CorpusMetadata())


def _blocks(text: str) -> Iterator[list[tuple[int, str]]]:
    block: list[tuple[int, str]] = []
    for lineno, line in enumerate(text.replace("\r\n", "\n").split("\n"), start=1):
        if line.strip():
            block.append((lineno, line.rstrip("\r")))
        elif block:
            yield block
            block = []
    if block:
        yield block


def _parse_a_line(line: str, lineno: int) -> tuple[int, int, str, Sentence, str, str, int]:
    fields = line[2:].split("|||")
    if len(fields) < 6:
        raise ParseError(f"expected 6 '|||'-separated fields, got {len(fields)}", lineno)
    offsets = fields[0].split()
    if len(offsets) != 2:
        raise ParseError(f"expected 'start end' offsets, got {fields[0]!r}", lineno)
    try:
        start, end = int(offsets[0]), int(offsets[1])
        annotator = int(fields[-1].strip())
    except ValueError:
        raise ParseError(f"non-integer offset or annotator id in {line!r}", lineno) from None
    if annotator < 0:
        raise ParseError(f"negative annotator id {annotator}", lineno)
    etype = fields[1]
    repl_text = fields[2].strip()
    replacement = () if repl_text in ("", NONE_TOKEN) else tokenize(repl_text)
    required = fields[3]
    comment = "|||".join(fields[4:-1])
    return start, end, etype, replacement, required, comment, annotator


def _parse_block(block: list[tuple[int, str]], index: int, extras: dict) -> AnnotatedSentence:
    first_no, first = block[0]
    if not first.startswith("S ") and first != "S":
        if first.startswith("A "):
            raise ParseError("annotation line before any source line", first_no)
        raise ParseError(f"expected a line starting with 'S ', got {first[:20]!r}", first_no)
    source = tokenize(first[1:])
    gold: dict[int, list[Edit]] = {}
    for lineno, line in block[1:]:
        if not line.startswith("A "):
            raise ParseError(f"expected a line starting with 'A ', got {line[:20]!r}", lineno)
        start, end, etype, repl, required, comment, ann = _parse_a_line(line, lineno)
        edits = gold.setdefault(ann, [])
        if etype.lower() == NOOP or (start == -1 and end == -1):
            continue
        if not (0 <= start <= end <= len(source)):
            raise ValidationError(
                f"line {lineno}: offsets {start} {end} out of bounds for "
                f"sentence of length {len(source)}"
            )
        edit = Edit(start, end, repl, etype, ann)
        for other in edits:
            if other.overlaps(edit):
                raise ValidationError(
                    f"line {lineno}: edit ({edit}) overlaps ({other}) for annotator {ann}"
                )
        edits.append(edit)
        extras[(index, ann, edit.key())] = (required, comment)
    if not gold:
        gold[0] = []
    return AnnotatedSentence(source, {a: frozenset(e) for a, e in gold.items()})


def parse_m2(text: str) -> M2Document:
    """Parse M2 text. Raises ParseError/ValidationError on the first problem."""
    extras: dict = {}
    sentences = [_parse_block(b, i, extras) for i, b in enumerate(_blocks(text))]
    return M2Document(tuple(sentences), extras)


def validate_m2(text: str) -> list[str]:
    """Check every block and return all problems as ``line N: message`` strings."""
    problems = []
    for i, block in enumerate(_blocks(text)):
        try:
            _parse_block(block, i, {})
        except ParseError as exc:
            problems.append(f"line {exc.line}: {exc.reason}")
        except ValidationError as exc:
            problems.append(str(exc))
    return problems


def load_m2(path, name: str | None = None, metadata: CorpusMetadata | None = None) -> Corpus:
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    try:
        doc = parse_m2(text)
    except ParseError as exc:
        raise ParseError(exc.reason, exc.line, str(path)) from None
    return doc.to_corpus(name or str(path), metadata)


def serialize_m2(doc: M2Document) -> str:
    """Inverse of :func:`parse_m2`; emits LF line endings."""
    out = []
    for i, sent in enumerate(doc.sentences):
        lines = ["S " + " ".join(sent.source) if sent.source else "S"]
        for ann, edits in sent.gold.items():
            if not edits:
                lines.append(f"A -1 -1|||{NOOP}|||{NONE_TOKEN}|||REQUIRED|||-NONE-|||{ann}")
                continue
            for e in sorted(edits, key=lambda e: (e.start, e.end, e.replacement)):
                required, comment = doc.extras.get((i, ann, e.key()), ("REQUIRED", "-NONE-"))
                repl = " ".join(e.replacement) if e.replacement else NONE_TOKEN
                lines.append(
                    f"A {e.start} {e.end}|||{e.error_type}|||{repl}|||{required}|||{comment}|||{ann}"
                )
        out.append("\n".join(lines) + "\n\n")
    return "".join(out)


def to_parallel(doc: M2Document | Corpus, annotator_policy: str = "all"):
    """Materialize source lines and one reference line-list per annotator.

    Annotator ``k`` missing on a sentence falls back to that sentence's
    lowest-id annotator. Returns ``(sources, references)`` where
    ``references`` maps annotator id to a list of lines.
    """
    if annotator_policy not in ("all", "first"):
        raise ValueError(f"unknown annotator policy {annotator_policy!r}")
    sentences = doc.sentences
    sources = [" ".join(s.source) for s in sentences]
    if annotator_policy == "first":
        ids = [0]
    else:
        ids = sorted({a for s in sentences for a in s.gold})
    refs: dict[int, list[str]] = {k: [] for k in ids}
    for sent in sentences:
        fallback = min(sent.gold)
        for k in ids:
            ann = k if k in sent.gold else fallback
            refs[k].append(" ".join(sent.reference(ann)))
    return sources, refs
