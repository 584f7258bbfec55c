"""Shared domain types: sentences, edits, annotated corpora, hypothesis sets.

Tokens are plain ``str`` and a sentence is a ``tuple`` of tokens. Everything
here is immutable once built.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

Sentence = tuple[str, ...]


class CrossGecError(Exception):
    """Base class for toolkit errors."""


class ValidationError(CrossGecError, ValueError):
    """Structurally invalid input (overlapping edits, bad offsets, ...)."""


class ParseError(ValidationError):
    """Malformed annotation or manifest text."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        self.reason = message
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class ScoringError(CrossGecError):
    """Inputs that cannot be scored together (e.g. length mismatch)."""


def tokenize(line: str) -> Sentence:
    """Split a pre-tokenized line on whitespace runs."""
    return tuple(line.split())


def detokenize(tokens: Iterable[str]) -> str:
    return " ".join(tokens)


@dataclass(frozen=True, order=True)
class Edit:
    """Replace source tokens ``[start, end)`` with ``replacement``.

    ``start == end`` is a pure insertion before ``start``. ``error_type`` and
    ``annotator_id`` are carried along but do not take part in matching; use
    :meth:`key` for that.
    """

    start: int
    end: int
    replacement: Sentence = ()
    error_type: str = field(default="UNK", compare=False)
    annotator_id: int | None = field(default=None, compare=False)

    def __post_init__(self):
        if not isinstance(self.replacement, tuple):
            object.__setattr__(self, "replacement", tuple(self.replacement))
        if self.start < 0 or self.end < self.start:
            raise ValidationError(f"invalid edit span [{self.start}, {self.end})")
        for tok in self.replacement:
            if not tok or any(c.isspace() for c in tok):
                raise ValidationError(f"invalid replacement token {tok!r}")

    @property
    def is_insertion(self) -> bool:
        return self.start == self.end

    def key(self, case_insensitive: bool = False) -> tuple:
        repl = self.replacement
        if case_insensitive:
            repl = tuple(t.lower() for t in repl)
        return (self.start, self.end, repl)

    def overlaps(self, other: "Edit") -> bool:
        if self.is_insertion and other.is_insertion:
            return self.start == other.start
        return not (self.end <= other.start or other.end <= self.start)

    def __str__(self) -> str:
        return f"{self.start} {self.end}|||{' '.join(self.replacement)}"


def check_edits(edits: Iterable[Edit], length: int) -> list[Edit]:
    """Return edits sorted by position, raising on overlap or bad bounds."""
    ordered = sorted(edits, key=lambda e: (e.start, e.end, e.replacement))
    for e in ordered:
        if e.end > length:
            raise ValidationError(
                f"edit [{e.start}, {e.end}) out of bounds for sentence of length {length}"
            )
    for a, b in zip(ordered, ordered[1:]):
        if a.overlaps(b):
            raise ValidationError(f"overlapping edits: ({a}) and ({b})")
    return ordered


def apply_edits(source: Sequence[str], edits: Iterable[Edit]) -> Sentence:
    """Apply a non-overlapping edit set, right to left so offsets stay valid."""
    ordered = check_edits(edits, len(source))
    out = list(source)
    for e in reversed(ordered):
        out[e.start:e.end] = e.replacement
    return tuple(out)


@dataclass(frozen=True)
class AnnotatedSentence:
    """A source sentence with gold edits per annotator.

    Corpora loaded from parallel text have no gold edits; they carry explicit
    ``references`` instead and cannot be scored with MaxMatch.
    """

    source: Sentence
    gold: Mapping[int, frozenset[Edit]]
    references: tuple[Sentence, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "source", tuple(self.source))
        gold = {int(k): frozenset(v) for k, v in sorted(self.gold.items())}
        object.__setattr__(self, "gold", gold)
        if not gold and not self.references:
            raise ValidationError("annotated sentence needs at least one annotator")
        for edits in gold.values():
            check_edits(edits, len(self.source))

    @property
    def annotators(self) -> list[int]:
        return list(self.gold)

    @property
    def has_gold(self) -> bool:
        return bool(self.gold)

    def reference(self, annotator: int) -> Sentence:
        return apply_edits(self.source, self.gold[annotator])

    def all_references(self) -> list[Sentence]:
        """References ordered by annotator id (or the explicit parallel ones)."""
        if self.references:
            return list(self.references)
        return [self.reference(a) for a in self.gold]


@dataclass(frozen=True)
class CorpusMetadata:
    topics: int | str | None = None
    multiple_l1: bool | None = None
    multiple_proficiency: bool | None = None
    public: bool | None = None


@dataclass(frozen=True)
class Corpus:
    name: str
    sentences: tuple[AnnotatedSentence, ...]
    metadata: CorpusMetadata = CorpusMetadata()

    def __post_init__(self):
        object.__setattr__(self, "sentences", tuple(self.sentences))

    def __len__(self) -> int:
        return len(self.sentences)

    @property
    def has_gold(self) -> bool:
        return all(s.has_gold for s in self.sentences)


@dataclass(frozen=True)
class HypothesisSet:
    system_name: str
    run_id: int
    sentences: tuple[Sentence, ...]

    def __post_init__(self):
        object.__setattr__(self, "sentences", tuple(tuple(s) for s in self.sentences))

    @classmethod
    def from_lines(cls, system_name: str, run_id: int, lines: Iterable[str]) -> "HypothesisSet":
        return cls(system_name, run_id, tuple(tokenize(l) for l in lines))

    def check_against(self, corpus: Corpus) -> None:
        if len(self.sentences) != len(corpus.sentences):
            raise ScoringError(
                f"system {self.system_name!r} run {self.run_id} has {len(self.sentences)} "
                f"sentences but corpus {corpus.name!r} has {len(corpus.sentences)}"
            )


def read_lines(path) -> list[str]:
    """Read a UTF-8 text file as lines, accepting LF or CRLF endings."""
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    lines = text.replace("\r\n", "\n").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return lines
