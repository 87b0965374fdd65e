"""Canonical annotated-corpus model.

A corpus is a set of documents with character-offset entity annotations.
Offsets count Unicode scalar values (Python string indices), never bytes.
Each document carries the class inventory of its source dataset: the set of
classes that dataset annotates, whether or not a given sentence contains them.

File format (one JSON object per line, UTF-8):

    {"doc_id": "d1", "dataset": "demo", "text": "X binds Y",
     "classes": ["Gene"], "annotations": [{"start": 0, "end": 1, "class": "Gene"}]}

A secondary reader accepts CoNLL-style two-column token/tag files with IO or
BIO tags.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Iterable, Mapping

from .errors import DataError

# ---------------------------------------------------------------------------
# Word tokenization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Word:
    """A word token with its character span in the owning text."""

    text: str
    start: int
    end: int


_WORD_RE = re.compile(r"\w+|[^\w\s]")


def word_tokenize(text: str) -> list[Word]:
    """Split text into words (alphanumeric runs or single punctuation marks)."""
    return [Word(m.group(), m.start(), m.end()) for m in _WORD_RE.finditer(text)]


WordTokenizer = Callable[[str], "list[Word]"]


def spans_intersect(a_start: int, a_end: int, b_start: int, b_end: int) -> bool:
    return a_start < b_end and b_start < a_end


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class EntitySpan:
    """One annotated mention: [start, end) character offsets into the owning text."""

    start: int
    end: int
    class_name: str
    source_dataset: str = ""

    def __post_init__(self) -> None:
        if self.start < 0 or self.end <= self.start:
            raise DataError(f"invalid span ({self.start}, {self.end}): need 0 <= start < end")
        if not self.class_name.strip():
            raise DataError("span class_name must be non-empty")


def _check_annotations(owner: str, text: str, annotations: tuple[EntitySpan, ...],
                       inventory: frozenset[str]) -> None:
    n = len(text)
    for span in annotations:
        if span.end > n:
            raise DataError(
                f"{owner}: span ({span.start}, {span.end}, {span.class_name!r}) "
                f"exceeds text length {n}"
            )
        if span.class_name not in inventory:
            raise DataError(
                f"{owner}: span class {span.class_name!r} not in class inventory "
                f"{sorted(inventory)}"
            )
    by_class: dict[str, list[EntitySpan]] = {}
    for span in annotations:
        by_class.setdefault(span.class_name, []).append(span)
    for class_name, spans in by_class.items():
        spans.sort()
        for left, right in zip(spans, spans[1:]):
            if right.start < left.end:
                raise DataError(
                    f"{owner}: overlapping {class_name!r} spans "
                    f"({left.start}, {left.end}) and ({right.start}, {right.end})"
                )


@dataclass(frozen=True)
class Document:
    doc_id: str
    dataset: str
    text: str
    annotations: tuple[EntitySpan, ...]
    class_inventory: frozenset[str]

    def __post_init__(self) -> None:
        if not self.doc_id:
            raise DataError("doc_id must be non-empty")
        _check_annotations(f"doc {self.doc_id!r}", self.text, self.annotations,
                           self.class_inventory)


@dataclass(frozen=True)
class Sentence:
    """A sentence extracted from a document; span offsets are sentence-relative."""

    doc_id: str
    sent_index: int
    dataset: str
    text: str
    annotations: tuple[EntitySpan, ...]
    class_inventory: frozenset[str]

    def __post_init__(self) -> None:
        _check_annotations(f"doc {self.doc_id!r} sentence {self.sent_index}", self.text,
                           self.annotations, self.class_inventory)


@dataclass(frozen=True)
class Corpus:
    documents: tuple[Document, ...]
    sentences: tuple[Sentence, ...] | None = None
    classes_merged: bool = False

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for doc in self.documents:
            if doc.doc_id in seen:
                raise DataError(f"duplicate doc_id {doc.doc_id!r}")
            seen.add(doc.doc_id)

    @property
    def is_sentence_level(self) -> bool:
        return self.sentences is not None

    def all_classes(self) -> list[str]:
        classes: set[str] = set()
        for doc in self.documents:
            classes |= doc.class_inventory
        return sorted(classes)


@dataclass(frozen=True)
class ClassStatsRow:
    dataset: str
    class_name: str
    sentence_count: int
    labeled_token_count: int
    labeled_token_percentage: float


@dataclass(frozen=True)
class ClassStats:
    rows: tuple[ClassStatsRow, ...]


# ---------------------------------------------------------------------------
# Parsing / serialization
# ---------------------------------------------------------------------------

_RECORD_FIELDS = ("doc_id", "dataset", "text", "classes", "annotations")


def _parse_record(line: str, lineno: int) -> Document:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DataError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
    if not isinstance(record, dict):
        raise DataError(f"line {lineno}: record must be an object")
    for field in _RECORD_FIELDS:
        if field not in record:
            raise DataError(f"line {lineno}: missing field {field!r}")
    doc_id, dataset, text = record["doc_id"], record["dataset"], record["text"]
    if not isinstance(doc_id, str) or not isinstance(dataset, str) or not isinstance(text, str):
        raise DataError(f"line {lineno}: doc_id, dataset and text must be strings")
    classes = record["classes"]
    if not isinstance(classes, list) or not all(isinstance(c, str) for c in classes):
        raise DataError(f"line {lineno}: classes must be a list of strings")
    raw_annotations = record["annotations"]
    if not isinstance(raw_annotations, list):
        raise DataError(f"line {lineno}: annotations must be a list")
    spans = []
    for i, raw in enumerate(raw_annotations):
        if not isinstance(raw, dict) or not {"start", "end", "class"} <= raw.keys():
            raise DataError(f"line {lineno}: annotation {i} needs start/end/class fields")
        if not isinstance(raw["start"], int) or not isinstance(raw["end"], int):
            raise DataError(f"line {lineno}: annotation {i} offsets must be integers")
        spans.append(EntitySpan(raw["start"], raw["end"], str(raw["class"]), dataset))
    try:
        return Document(doc_id, dataset, text, tuple(sorted(spans)), frozenset(classes))
    except DataError as exc:
        raise DataError(f"line {lineno}: {exc}") from exc


def parse_corpus(source: str | bytes | Iterable[str]) -> Corpus:
    """Parse the canonical line-oriented corpus format.

    ``source`` may be the file content (str or UTF-8 bytes) or an iterable of
    lines. Raises DataError with a line number for any malformed record.
    """
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    lines = source.splitlines() if isinstance(source, str) else list(source)
    documents = []
    seen: dict[str, int] = {}
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        doc = _parse_record(line, lineno)
        if doc.doc_id in seen:
            raise DataError(
                f"line {lineno}: duplicate doc_id {doc.doc_id!r} (first seen on line "
                f"{seen[doc.doc_id]})"
            )
        seen[doc.doc_id] = lineno
        documents.append(doc)
    return Corpus(tuple(documents))


def parse_corpus_path(path: str | Path) -> Corpus:
    return parse_corpus(Path(path).read_text(encoding="utf-8"))


def serialize_corpus(corpus: Corpus) -> str:
    """Inverse of parse_corpus; deterministic field and annotation order."""
    lines = []
    for doc in corpus.documents:
        record = {
            "doc_id": doc.doc_id,
            "dataset": doc.dataset,
            "text": doc.text,
            "classes": sorted(doc.class_inventory),
            "annotations": [
                {"start": s.start, "end": s.end, "class": s.class_name}
                for s in sorted(doc.annotations)
            ],
        }
        lines.append(json.dumps(record, ensure_ascii=False))
    return "\n".join(lines) + ("\n" if lines else "")


def write_corpus(corpus: Corpus, path: str | Path) -> None:
    Path(path).write_text(serialize_corpus(corpus), encoding="utf-8")


# ---------------------------------------------------------------------------
# CoNLL-style reader
# ---------------------------------------------------------------------------


def read_conll(source: str, dataset: str = "conll") -> Corpus:
    """Read two-column token/tag text (IO or BIO tags, blank-line separated).

    Each block becomes one single-sentence document; text is the tokens joined
    by single spaces. The class inventory is every class seen in the file.
    """
    blocks: list[list[tuple[str, str]]] = [[]]
    for lineno, line in enumerate(source.splitlines(), start=1):
        if not line.strip():
            if blocks[-1]:
                blocks.append([])
            continue
        parts = line.split("\t") if "\t" in line else line.split()
        if len(parts) != 2:
            raise DataError(f"line {lineno}: expected 'token<TAB>tag', got {line!r}")
        blocks[-1].append((parts[0], parts[1]))
    if not blocks[-1]:
        blocks.pop()

    inventory: set[str] = set()
    parsed: list[tuple[str, list[tuple[int, int, str]]]] = []
    for block in blocks:
        text_parts: list[str] = []
        offsets: list[tuple[int, int]] = []
        pos = 0
        for token, _ in block:
            if text_parts:
                pos += 1
            offsets.append((pos, pos + len(token)))
            pos += len(token)
            text_parts.append(token)
        text = " ".join(text_parts)

        spans: list[tuple[int, int, str]] = []
        open_class: str | None = None
        open_start = 0
        last_end = 0
        for (token, tag), (start, end) in zip(block, offsets):
            if tag == "O":
                label, begin = None, False
            elif tag.startswith("B-"):
                label, begin = tag[2:], True
            elif tag.startswith("I-"):
                label, begin = tag[2:], False
            else:
                label, begin = tag, False  # plain IO tag
            if label is not None:
                inventory.add(label)
            if open_class is not None and (label != open_class or begin):
                spans.append((open_start, last_end, open_class))
                open_class = None
            if label is not None and open_class is None:
                open_class, open_start = label, start
            last_end = end
        if open_class is not None:
            spans.append((open_start, last_end, open_class))
        parsed.append((text, spans))

    documents = []
    for i, (text, spans) in enumerate(parsed):
        annotations = tuple(sorted(EntitySpan(s, e, c, dataset) for s, e, c in spans))
        documents.append(
            Document(f"{dataset}-{i:05d}", dataset, text, annotations, frozenset(inventory))
        )
    return Corpus(tuple(documents))


# ---------------------------------------------------------------------------
# Sentence splitting
# ---------------------------------------------------------------------------

# Lowercased tokens before a '.' that never end a sentence.
DEFAULT_ABBREVIATIONS = frozenset({
    "e.g", "i.e", "etc", "vs", "cf", "al", "fig", "figs", "eq", "ref",
    "dr", "mr", "mrs", "ms", "prof", "st", "no", "vol", "approx", "ca",
})

_TERMINATORS = ".!?"


def _abbreviation_before(text: str, dot: int, stop_list: frozenset[str]) -> bool:
    i = dot - 1
    while i >= 0 and (text[i].isalpha() or text[i] == "."):
        i -= 1
    token = text[i + 1:dot].rstrip(".").lower()
    if not token:
        return False
    if len(token) == 1 and token.isalpha():
        return True  # single initial, e.g. "J. Smith"
    return token in stop_list


def _candidate_boundaries(text: str, stop_list: frozenset[str]) -> list[tuple[int, int]]:
    """(end_of_sentence, start_of_next) pairs for every proposed split point."""
    boundaries = []
    n = len(text)
    for m in re.finditer(f"[{re.escape(_TERMINATORS)}]", text):
        i = m.start()
        j = i + 1
        if j >= n or not text[j].isspace():
            continue
        k = j
        while k < n and text[k].isspace():
            k += 1
        if k >= n:
            continue
        if not (text[k].isupper() or text[k].isdigit()):
            continue
        if text[i] == "." and _abbreviation_before(text, i, stop_list):
            continue
        boundaries.append((i + 1, k))
    return boundaries


def sentence_split(doc: Document,
                   abbreviations: frozenset[str] = DEFAULT_ABBREVIATIONS) -> list[Sentence]:
    """Split a document into sentences, remapping annotation offsets.

    Rule-based: a terminator (. ! ?) followed by whitespace and an uppercase
    letter or digit ends a sentence, unless the period follows a known
    abbreviation. A proposed boundary that falls inside any annotation is
    suppressed, merging the two sentences, so no span is ever cut.
    """
    boundaries = []
    for end0, start1 in _candidate_boundaries(doc.text, abbreviations):
        crossed = any(
            not (span.end <= end0) and not (span.start >= start1)
            for span in doc.annotations
        )
        if not crossed:
            boundaries.append((end0, start1))

    starts = [0] + [b[1] for b in boundaries]
    ends = [b[0] for b in boundaries] + [len(doc.text)]
    sentences = []
    assigned = 0
    for index, (start, end) in enumerate(zip(starts, ends)):
        inside = [s for s in doc.annotations if s.start >= start and s.end <= end]
        assigned += len(inside)
        shifted = tuple(sorted(
            replace(span, start=span.start - start, end=span.end - start) for span in inside
        ))
        sentences.append(Sentence(doc.doc_id, index, doc.dataset, doc.text[start:end],
                                  shifted, doc.class_inventory))
    if assigned != len(doc.annotations):  # cannot happen: crossing boundaries suppressed
        raise DataError(f"doc {doc.doc_id!r}: annotations lost during sentence split")
    return sentences


def split_corpus_sentences(corpus: Corpus,
                           abbreviations: frozenset[str] = DEFAULT_ABBREVIATIONS) -> Corpus:
    """Return the corpus with its sentence view populated (ordered by doc_id)."""
    sentences: list[Sentence] = []
    for doc in sorted(corpus.documents, key=lambda d: d.doc_id):
        sentences.extend(sentence_split(doc, abbreviations))
    return replace(corpus, sentences=tuple(sentences))


# ---------------------------------------------------------------------------
# Class merging
# ---------------------------------------------------------------------------


def merge_classes(corpus: Corpus, mapping: Mapping[str, str]) -> Corpus:
    """Rewrite class names through ``mapping`` (identity for unmapped names).

    Raises DataError if the merge creates overlapping same-class spans.
    """
    for old, new in mapping.items():
        if not new.strip():
            raise DataError(f"mapping for {old!r} has empty target")

    def rename(name: str) -> str:
        return mapping.get(name, name)

    def rewrite_doc(doc: Document) -> Document:
        spans = tuple(sorted(replace(s, class_name=rename(s.class_name))
                             for s in doc.annotations))
        return replace(doc, annotations=spans,
                       class_inventory=frozenset(rename(c) for c in doc.class_inventory))

    documents = tuple(rewrite_doc(d) for d in corpus.documents)
    sentences = None
    if corpus.sentences is not None:
        sentences = tuple(
            replace(s, annotations=tuple(sorted(
                replace(a, class_name=rename(a.class_name)) for a in s.annotations)),
                class_inventory=frozenset(rename(c) for c in s.class_inventory))
            for s in corpus.sentences
        )
    return Corpus(documents, sentences, classes_merged=True)


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------


def compute_stats(corpus: Corpus, tokenizer: WordTokenizer = word_tokenize) -> ClassStats:
    """Per (dataset, class): sentence count, labeled word tokens, labeled percentage.

    A sentence counts for every class in its inventory, present or not; the
    percentage denominator is the total token count over those sentences.
    """
    if corpus.sentences is None:
        raise DataError("compute_stats requires a sentence-level corpus")
    sentence_count: dict[tuple[str, str], int] = {}
    token_total: dict[tuple[str, str], int] = {}
    labeled: dict[tuple[str, str], int] = {}
    for sentence in corpus.sentences:
        words = tokenizer(sentence.text)
        for class_name in sentence.class_inventory:
            key = (sentence.dataset, class_name)
            sentence_count[key] = sentence_count.get(key, 0) + 1
            token_total[key] = token_total.get(key, 0) + len(words)
            labeled.setdefault(key, 0)
        for word in words:
            hit_classes = {span.class_name for span in sentence.annotations
                           if spans_intersect(word.start, word.end, span.start, span.end)}
            for class_name in hit_classes:
                labeled[(sentence.dataset, class_name)] += 1
    rows = []
    for key in sentence_count:
        dataset, class_name = key
        total = token_total[key]
        pct = 100.0 * labeled[key] / total if total else 0.0
        rows.append(ClassStatsRow(dataset, class_name, sentence_count[key], labeled[key], pct))
    rows.sort(key=lambda r: (r.dataset, -r.labeled_token_percentage, r.class_name))
    return ClassStats(tuple(rows))


def render_stats_table(stats: ClassStats) -> str:
    """Tab-separated table: Dataset, Class, A (sentences), B (tokens), C (percent)."""
    lines = ["Dataset\tClass\tA\tB\tC"]
    for row in stats.rows:
        lines.append(f"{row.dataset}\t{row.class_name}\t{row.sentence_count}\t"
                     f"{row.labeled_token_count}\t{row.labeled_token_percentage:.2f}")
    return "\n".join(lines) + "\n"
