"""Vocabulary handling, greedy longest-match subword tokenization, and
encoding of examples into fixed-length two-segment model inputs.

Input layout: [CLS] label-subtokens [SEP] sentence-subtokens [SEP] PAD...
Segment ids are 0 through the first [SEP] and 1 for the sentence and final
[SEP]; padding is segment 0. Word labels propagate to every subtoken of the
word by default (``label_all_subtokens=False`` restricts the loss to first
subtokens instead); evaluation always reads the first subtoken of each word.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError, EncodingError
from .corpus import Corpus, word_tokenize
from .transform import MultiClassExample, PromptExample

PAD, UNK, CLS, SEP, MASK = "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"
RESERVED_TOKENS = (PAD, UNK, CLS, SEP, MASK)
CONTINUATION_PREFIX = "##"


@dataclass(frozen=True)
class Vocab:
    """Immutable token <-> id table with BERT-style reserved tokens."""

    token_to_id: dict[str, int]
    id_to_token: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.id_to_token)

    @property
    def pad_id(self) -> int:
        return self.token_to_id[PAD]

    @property
    def unk_id(self) -> int:
        return self.token_to_id[UNK]

    @property
    def cls_id(self) -> int:
        return self.token_to_id[CLS]

    @property
    def sep_id(self) -> int:
        return self.token_to_id[SEP]

    @property
    def mask_id(self) -> int:
        return self.token_to_id[MASK]


def _build_vocab(tokens: Sequence[str]) -> Vocab:
    table: dict[str, int] = {}
    for i, token in enumerate(tokens):
        if token in table:
            raise DataError(f"duplicate token {token!r} (lines {table[token] + 1} and {i + 1})")
        if not token:
            raise DataError(f"line {i + 1}: empty token")
        table[token] = i
    missing = [t for t in RESERVED_TOKENS if t not in table]
    if missing:
        raise DataError(f"vocabulary missing reserved tokens: {missing}")
    return Vocab(table, tuple(tokens))


def load_vocab(path: str | Path) -> Vocab:
    """Load a one-token-per-line vocabulary file; line number = token id."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    while lines and not lines[-1]:
        lines.pop()
    return _build_vocab(lines)


def vocab_from_lines(lines: Iterable[str]) -> Vocab:
    return _build_vocab(list(lines))


def save_vocab(vocab: Vocab, path: str | Path) -> None:
    Path(path).write_text("\n".join(vocab.id_to_token) + "\n", encoding="utf-8")


def vocab_from_corpus(corpus: Corpus, *, char_fallback: bool = True,
                      skip_numeric: bool = True) -> Vocab:
    """Derive a vocabulary from corpus words and class names.

    With ``char_fallback`` every seen character is added both as a standalone
    and a continuation piece, so any in-domain word tokenizes without [UNK];
    ``skip_numeric`` keeps whole numbers out so they exercise the multi-piece
    path.
    """
    words: set[str] = set()
    chars: set[str] = set()
    for doc in corpus.documents:
        for w in word_tokenize(doc.text):
            words.add(w.text)
            chars.update(w.text)
        for class_name in doc.class_inventory:
            for w in word_tokenize(class_name):
                words.add(w.text)
                chars.update(w.text)
    if skip_numeric:
        words = {w for w in words if not w.isdigit()}
    tokens = list(RESERVED_TOKENS) + sorted(words)
    if char_fallback:
        extra = sorted(chars) + [CONTINUATION_PREFIX + c for c in sorted(chars)]
        tokens += [t for t in extra if t not in set(tokens)]
    return _build_vocab(tokens)


# ---------------------------------------------------------------------------
# Subword tokenization
# ---------------------------------------------------------------------------


def subword_tokenize(word: str, vocab: Vocab) -> list[int]:
    """Greedy longest-prefix match; a word with no parse becomes a single [UNK]."""
    if not word:
        raise DataError("cannot tokenize an empty word")
    ids = []
    start = 0
    while start < len(word):
        end = len(word)
        found = None
        while start < end:
            piece = word[start:end]
            if start > 0:
                piece = CONTINUATION_PREFIX + piece
            if piece in vocab.token_to_id:
                found = vocab.token_to_id[piece]
                break
            end -= 1
        if found is None:
            return [vocab.unk_id]
        ids.append(found)
        start = end
    return ids


# ---------------------------------------------------------------------------
# Encoding
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EncodedExample:
    """Fixed-length model input with aligned labels and masks."""

    input_ids: np.ndarray      # (L,) int32
    segment_ids: np.ndarray    # (L,) int8
    attention_mask: np.ndarray  # (L,) int8
    labels: np.ndarray         # (L,) int32
    loss_mask: np.ndarray      # (L,) int8
    eval_mask: np.ndarray      # (L,) int8, first subtoken of each kept word
    word_map: np.ndarray       # (kept words,) int32 position of first subtoken
    word_count: int            # full sentence word count, including truncated
    truncated_words: int


def _encode_layout(first_segment: list[int], word_pieces: list[list[int]],
                   word_labels: Sequence[int], first_label_value: Sequence[int],
                   vocab: Vocab, max_len: int, label_all_subtokens: bool,
                   context: str) -> EncodedExample:
    head = [vocab.cls_id] + first_segment + ([vocab.sep_id] if first_segment else [])
    budget = max_len - len(head) - 1  # final [SEP]
    if budget < 0:
        raise EncodingError(f"{context}: first segment needs {len(head) + 1} positions "
                            f"but max_len is {max_len}")

    ids = list(head)
    labels = [0] + list(first_label_value) + ([0] if first_segment else [])
    loss = [0] + [1] * len(first_segment) + ([0] if first_segment else [])
    word_map = []
    eval_positions = []
    kept_pieces = 0
    truncated_words = 0
    for pieces, label in zip(word_pieces, word_labels):
        if budget - kept_pieces <= 0:
            truncated_words += 1
            continue
        take = pieces[:budget - kept_pieces]
        word_map.append(len(ids))
        eval_positions.append(len(ids))
        for j, piece in enumerate(take):
            ids.append(piece)
            labels.append(label if (label_all_subtokens or j == 0) else 0)
            loss.append(1 if (label_all_subtokens or j == 0) else 0)
        kept_pieces += len(take)
    sentence_start = len(head)
    ids.append(vocab.sep_id)
    labels.append(0)
    loss.append(0)
    real = len(ids)
    pad = max_len - real
    ids += [vocab.pad_id] * pad
    labels += [0] * pad
    loss += [0] * pad
    segments = np.zeros(max_len, dtype=np.int8)
    segments[sentence_start:real] = 1
    attention = np.zeros(max_len, dtype=np.int8)
    attention[:real] = 1
    eval_mask = np.zeros(max_len, dtype=np.int8)
    eval_mask[eval_positions] = 1
    return EncodedExample(
        input_ids=np.asarray(ids, dtype=np.int32),
        segment_ids=segments,
        attention_mask=attention,
        labels=np.asarray(labels, dtype=np.int32),
        loss_mask=np.asarray(loss, dtype=np.int8),
        eval_mask=eval_mask,
        word_map=np.asarray(word_map, dtype=np.int32),
        word_count=len(word_pieces),
        truncated_words=truncated_words,
    )


def encode(example: PromptExample, vocab: Vocab, max_len: int,
           label_all_subtokens: bool = True) -> EncodedExample:
    """Encode a PromptExample; sentence-tail tokens are truncated if needed,
    the label segment never is."""
    label_pieces: list[int] = []
    for word in example.label_words:
        label_pieces.extend(subword_tokenize(word, vocab))
    word_pieces = [subword_tokenize(w.text, vocab) for w in example.sentence_words]
    constant = example.variant.label_constant
    return _encode_layout(label_pieces, word_pieces, example.sentence_labels,
                          [constant] * len(label_pieces), vocab, max_len,
                          label_all_subtokens,
                          context=f"example {example.origin} / {example.query_class!r}")


def encode_multiclass(example: MultiClassExample, vocab: Vocab, max_len: int,
                      label_all_subtokens: bool = True) -> EncodedExample:
    """Single-segment encoding for the multi-class pilot: [CLS] sentence [SEP]."""
    word_pieces = [subword_tokenize(w.text, vocab) for w in example.sentence_words]
    encoded = _encode_layout([], word_pieces, example.labels, [], vocab, max_len,
                             label_all_subtokens, context=f"example {example.origin}")
    segments = np.zeros_like(encoded.segment_ids)
    return EncodedExample(encoded.input_ids, segments, encoded.attention_mask,
                          encoded.labels, encoded.loss_mask, encoded.eval_mask,
                          encoded.word_map, encoded.word_count, encoded.truncated_words)


def align_predictions(predictions: np.ndarray, encoded: EncodedExample) -> np.ndarray:
    """Per-word labels from per-position predictions (first-subtoken rule).

    Words truncated away during encoding come back as 0.
    """
    predictions = np.asarray(predictions)
    if predictions.shape[0] != encoded.input_ids.shape[0]:
        raise DataError(f"prediction length {predictions.shape[0]} != encoded length "
                        f"{encoded.input_ids.shape[0]}")
    out = np.zeros(encoded.word_count, dtype=np.int32)
    kept = predictions[encoded.word_map].astype(np.int32)
    out[:len(encoded.word_map)] = kept
    return out
