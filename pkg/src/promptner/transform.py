"""Prompt factorization: rewrite multi-class NER as binary, label-conditioned examples.

Every sentence is queried once per class in its dataset's inventory, so
classes absent from a sentence yield all-negative examples. A PromptExample's
label vector covers the label-name words followed by the sentence words;
label-name positions carry the variant constant (1 under LABEL_AS_POSITIVE,
0 under LABEL_AS_NEGATIVE).
"""

from __future__ import annotations

import json
import random
import warnings
from collections import Counter
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import Corpus, Sentence, Word, WordTokenizer, spans_intersect, word_tokenize
from .errors import DataError


class LabelVariant(str, Enum):
    """Whether first-segment label words are supervised as positive or negative."""

    LABEL_AS_POSITIVE = "label_as_positive"
    LABEL_AS_NEGATIVE = "label_as_negative"

    @property
    def label_constant(self) -> int:
        return 1 if self is LabelVariant.LABEL_AS_POSITIVE else 0


@dataclass(frozen=True)
class PromptExample:
    """One (label name, sentence) unit of the factorized dataset."""

    query_class: str
    label_words: tuple[str, ...]
    sentence_words: tuple[Word, ...]
    word_labels: tuple[int, ...]  # over label_words ++ sentence_words
    variant: LabelVariant
    origin: tuple[str, int]  # (doc_id, sent_index)
    split_tag: str = ""

    def __post_init__(self) -> None:
        if len(self.word_labels) != len(self.label_words) + len(self.sentence_words):
            raise DataError("word_labels length must equal label words + sentence words")
        constant = self.variant.label_constant
        if any(l != constant for l in self.word_labels[:len(self.label_words)]):
            raise DataError(f"label-word positions must all be {constant} under {self.variant.value}")

    @property
    def sentence_labels(self) -> tuple[int, ...]:
        return self.word_labels[len(self.label_words):]

    @property
    def has_positive(self) -> bool:
        return any(self.sentence_labels)


@dataclass(frozen=True)
class SplitRatios:
    train: float = 0.85
    val: float = 0.05
    test: float = 0.10

    def __post_init__(self) -> None:
        parts = (self.train, self.val, self.test)
        if any(p <= 0 for p in parts) or abs(sum(parts) - 1.0) > 1e-9:
            raise DataError(f"split ratios must be positive and sum to 1, got {parts}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.train, self.val, self.test)


SPLIT_NAMES = ("train", "val", "test")


@dataclass(frozen=True)
class MultiClassExample:
    """One sentence with per-word class-id labels (0 = outside), IO scheme."""

    sentence_words: tuple[Word, ...]
    labels: tuple[int, ...]
    class_vocabulary: tuple[str, ...]  # id i+1 <-> class_vocabulary[i]
    origin: tuple[str, int]

    def __post_init__(self) -> None:
        if len(self.labels) != len(self.sentence_words):
            raise DataError("labels length must equal sentence word count")
        if any(l < 0 or l > len(self.class_vocabulary) for l in self.labels):
            raise DataError("label id outside class vocabulary")


# ---------------------------------------------------------------------------
# Factorization
# ---------------------------------------------------------------------------


def factorize(sentence: Sentence, query_class: str, variant: LabelVariant,
              tokenizer: WordTokenizer = word_tokenize) -> PromptExample:
    """Build the binary example asking ``query_class`` of ``sentence``.

    A sentence word is positive iff its character span intersects an
    EntitySpan of the queried class; words of other classes stay 0.
    """
    if query_class not in sentence.class_inventory:
        raise DataError(f"class {query_class!r} not in inventory of doc "
                        f"{sentence.doc_id!r} sentence {sentence.sent_index}")
    label_words = tuple(w.text for w in tokenizer(query_class))
    words = tuple(tokenizer(sentence.text))
    spans = [s for s in sentence.annotations if s.class_name == query_class]
    sentence_labels = tuple(
        1 if any(spans_intersect(w.start, w.end, s.start, s.end) for s in spans) else 0
        for w in words
    )
    constant = variant.label_constant
    labels = tuple([constant] * len(label_words)) + sentence_labels
    return PromptExample(query_class, label_words, words, labels, variant,
                         (sentence.doc_id, sentence.sent_index))


def expand_corpus(corpus: Corpus, variant: LabelVariant,
                  tokenizer: WordTokenizer = word_tokenize) -> list[PromptExample]:
    """One PromptExample per (sentence, inventory class), ordered by
    (doc_id, sent_index, class name)."""
    if corpus.sentences is None:
        raise DataError("expand_corpus requires a sentence-level corpus")
    examples = []
    for sentence in sorted(corpus.sentences, key=lambda s: (s.doc_id, s.sent_index)):
        for class_name in sorted(sentence.class_inventory):
            examples.append(factorize(sentence, class_name, variant, tokenizer))
    return examples


# ---------------------------------------------------------------------------
# Stratified splitting
# ---------------------------------------------------------------------------


def _largest_remainder(n: int, ratios: tuple[float, float, float]) -> list[int]:
    base = [int(n * r) for r in ratios]
    remainders = [n * r - b for r, b in zip(ratios, base)]
    for _ in range(n - sum(base)):
        i = max(range(3), key=lambda j: (remainders[j], -j))
        base[i] += 1
        remainders[i] = -1.0
    return base


def _split_violation(counts: dict[str, list[int]], targets: dict[str, tuple[float, ...]]) -> float:
    total = 0.0
    for class_name, per_split in counts.items():
        for s in range(3):
            total += max(0.0, abs(per_split[s] - targets[class_name][s]) - 1.0)
    return total


def split_dataset(examples: Sequence[PromptExample], ratios: SplitRatios = SplitRatios(),
                  seed: int = 0) -> tuple[list[PromptExample], list[PromptExample], list[PromptExample]]:
    """Stratified train/val/test split with the sentence as the atomic unit.

    All examples sharing an origin move together (no sentence straddles
    splits), and each class's per-split example count stays within +-1 of
    count * ratio. Classes with fewer examples than splits are pinned to
    train with a warning. Deterministic for a fixed seed.
    """
    if not examples:
        raise DataError("cannot split an empty example list")
    units: dict[tuple[str, int], list[PromptExample]] = {}
    for example in examples:
        units.setdefault(example.origin, []).append(example)
    unit_classes = {origin: frozenset(e.query_class for e in unit)
                    for origin, unit in units.items()}
    class_count: Counter[str] = Counter()
    for classes in unit_classes.values():
        class_count.update(classes)

    rare = {c for c, n in class_count.items() if n < len(SPLIT_NAMES)}
    if rare:
        warnings.warn(f"classes with fewer examples than splits assigned to train: "
                      f"{sorted(rare)}", stacklevel=2)

    pinned = [o for o in units if unit_classes[o] & rare]
    free = sorted(o for o in units if not (unit_classes[o] & rare))
    rng = random.Random(seed)
    rng.shuffle(free)

    ratio_tuple = ratios.as_tuple()
    assignment: dict[tuple[str, int], int] = {o: 0 for o in pinned}
    counts: dict[str, list[int]] = {c: [0, 0, 0] for c in class_count}
    for origin in pinned:
        for c in unit_classes[origin]:
            counts[c][0] += 1

    groups: dict[frozenset[str], list[tuple[str, int]]] = {}
    for origin in free:
        groups.setdefault(unit_classes[origin], []).append(origin)
    for signature in sorted(groups, key=lambda s: tuple(sorted(s))):
        members = groups[signature]
        quota = _largest_remainder(len(members), ratio_tuple)
        cursor = 0
        for split_index, q in enumerate(quota):
            for origin in members[cursor:cursor + q]:
                assignment[origin] = split_index
                for c in unit_classes[origin]:
                    counts[c][split_index] += 1
            cursor += q

    # Repair pass: classes spanning several signature groups can drift past
    # the +-1 band; greedy moves of free units fix that at desk scale.
    targets = {c: tuple(class_count[c] * r for r in ratio_tuple) for c in class_count}
    best = _split_violation(counts, targets)
    while best > 0:
        improved = False
        for origin in free:
            current = assignment[origin]
            for split_index in range(3):
                if split_index == current:
                    continue
                for c in unit_classes[origin]:
                    counts[c][current] -= 1
                    counts[c][split_index] += 1
                candidate = _split_violation(counts, targets)
                if candidate < best - 1e-12:
                    best = candidate
                    assignment[origin] = split_index
                    improved = True
                    break
                for c in unit_classes[origin]:
                    counts[c][split_index] -= 1
                    counts[c][current] += 1
            if improved:
                break
        if not improved:
            break

    out: tuple[list[PromptExample], ...] = ([], [], [])
    for example in examples:
        split_index = assignment[example.origin]
        out[split_index].append(replace(example, split_tag=SPLIT_NAMES[split_index]))
    return out


# ---------------------------------------------------------------------------
# Class exclusion and few-shot sampling
# ---------------------------------------------------------------------------


def exclude_class(train: Sequence[PromptExample],
                  unseen: str) -> tuple[list[PromptExample], list[PromptExample]]:
    """Remove every example querying ``unseen`` from train; return (reduced, pool)."""
    pool = [e for e in train if e.query_class == unseen]
    if not pool:
        raise DataError(f"unseen class {unseen!r} not present in the training examples")
    reduced = [e for e in train if e.query_class != unseen]
    return reduced, pool


def sample_few_shot(pool: Sequence[PromptExample], k: int, seed: int = 0) -> list[PromptExample]:
    """Uniform sample of k supporting examples (each must contain the entity)."""
    eligible = [e for e in pool if e.has_positive]
    if k > len(eligible):
        raise DataError(f"requested {k} shots but only {len(eligible)} eligible examples "
                        f"(pool size {len(pool)})")
    rng = random.Random(seed)
    return rng.sample(eligible, k)


# ---------------------------------------------------------------------------
# Multi-class pilot dataset
# ---------------------------------------------------------------------------


def to_multiclass_dataset(corpus: Corpus,
                          tokenizer: WordTokenizer = word_tokenize) -> list[MultiClassExample]:
    """One IO-labeled example per sentence over a frozen class vocabulary.

    Cross-class overlaps are resolved per word by the longest covering span,
    ties broken by earlier start.
    """
    if corpus.sentences is None:
        raise DataError("to_multiclass_dataset requires a sentence-level corpus")
    class_vocabulary = tuple(corpus.all_classes())
    class_id = {c: i + 1 for i, c in enumerate(class_vocabulary)}
    examples = []
    for sentence in sorted(corpus.sentences, key=lambda s: (s.doc_id, s.sent_index)):
        words = tuple(tokenizer(sentence.text))
        labels = []
        for word in words:
            covering = [s for s in sentence.annotations
                        if spans_intersect(word.start, word.end, s.start, s.end)]
            if not covering:
                labels.append(0)
                continue
            winner = min(covering, key=lambda s: (-(s.end - s.start), s.start, s.class_name))
            labels.append(class_id[winner.class_name])
        examples.append(MultiClassExample(words, tuple(labels), class_vocabulary,
                                          (sentence.doc_id, sentence.sent_index)))
    return examples


# ---------------------------------------------------------------------------
# Serialization (line-oriented JSON, one example per line)
# ---------------------------------------------------------------------------


def example_to_record(example: PromptExample) -> dict:
    return {
        "query_class": example.query_class,
        "variant": example.variant.value,
        "label_words": list(example.label_words),
        "words": [[w.text, w.start, w.end] for w in example.sentence_words],
        "labels": list(example.word_labels),
        "origin": [example.origin[0], example.origin[1]],
        "split": example.split_tag,
    }


def example_from_record(record: dict) -> PromptExample:
    try:
        return PromptExample(
            query_class=record["query_class"],
            label_words=tuple(record["label_words"]),
            sentence_words=tuple(Word(t, s, e) for t, s, e in record["words"]),
            word_labels=tuple(int(l) for l in record["labels"]),
            variant=LabelVariant(record["variant"]),
            origin=(record["origin"][0], int(record["origin"][1])),
            split_tag=record.get("split", ""),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed example record: {exc}") from exc


def examples_to_jsonl(examples: Iterable[PromptExample]) -> str:
    return "".join(json.dumps(example_to_record(e), ensure_ascii=False) + "\n"
                   for e in examples)


def examples_from_jsonl(text: str) -> list[PromptExample]:
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"line {lineno}: invalid JSON ({exc.msg})") from exc
        try:
            out.append(example_from_record(record))
        except DataError as exc:
            raise DataError(f"line {lineno}: {exc}") from exc
    return out


def write_examples(examples: Iterable[PromptExample], path: str | Path) -> None:
    Path(path).write_text(examples_to_jsonl(examples), encoding="utf-8")


def read_examples(path: str | Path) -> list[PromptExample]:
    return examples_from_jsonl(Path(path).read_text(encoding="utf-8"))


def multiclass_to_jsonl(examples: Iterable[MultiClassExample]) -> str:
    lines = []
    for e in examples:
        lines.append(json.dumps({
            "words": [[w.text, w.start, w.end] for w in e.sentence_words],
            "labels": list(e.labels),
            "classes": list(e.class_vocabulary),
            "origin": [e.origin[0], e.origin[1]],
        }, ensure_ascii=False))
    return "".join(line + "\n" for line in lines)


def multiclass_from_jsonl(text: str) -> list[MultiClassExample]:
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            r = json.loads(line)
            out.append(MultiClassExample(
                tuple(Word(t, s, e) for t, s, e in r["words"]),
                tuple(int(l) for l in r["labels"]),
                tuple(r["classes"]),
                (r["origin"][0], int(r["origin"][1])),
            ))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise DataError(f"line {lineno}: malformed multi-class record ({exc})") from exc
    return out
