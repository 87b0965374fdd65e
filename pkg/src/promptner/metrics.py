"""Prediction and token-level precision/recall/F1.

Metrics are word-level on the positive class using the first-subtoken
convention; first-segment label tokens never enter the counts. Exact-span
scores (maximal runs of positive words compared as whole spans) are also
available for comparison with entity-level reporting.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError, EncodingError
from .model import Model, forward, make_batch
from .subword import Vocab, align_predictions, encode, encode_multiclass
from .transform import MultiClassExample, PromptExample


@dataclass(frozen=True)
class PredictionRecord:
    origin: tuple[str, int]
    query_class: str
    gold_labels: tuple[int, ...]
    pred_labels: tuple[int, ...]
    pred_spans: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        if len(self.gold_labels) != len(self.pred_labels):
            raise DataError("gold and predicted label vectors differ in length")


def reconstruct_spans(labels_or_record) -> tuple[tuple[int, int], ...]:
    """Maximal runs of positive word labels as [start, end) word-index ranges."""
    labels = getattr(labels_or_record, "pred_labels", labels_or_record)
    spans = []
    start = None
    for i, value in enumerate(labels):
        if value and start is None:
            start = i
        elif not value and start is not None:
            spans.append((start, i))
            start = None
    if start is not None:
        spans.append((start, len(labels)))
    return tuple(spans)


def record_counts(record: PredictionRecord) -> tuple[int, int, int]:
    """(TP, FP, FN) on the positive class for one record."""
    tp = fp = fn = 0
    for gold, pred in zip(record.gold_labels, record.pred_labels):
        if pred and gold:
            tp += 1
        elif pred and not gold:
            fp += 1
        elif gold and not pred:
            fn += 1
    return tp, fp, fn


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def token_prf(records: Sequence[PredictionRecord]) -> tuple[float, float, float]:
    """Micro-averaged word-level (precision, recall, F1) on the positive class."""
    tp = fp = fn = 0
    for record in records:
        a, b, c = record_counts(record)
        tp, fp, fn = tp + a, fp + b, fn + c
    return _prf(tp, fp, fn)


def span_prf(records: Sequence[PredictionRecord]) -> tuple[float, float, float]:
    """Exact-span (precision, recall, F1): a predicted run scores iff it matches
    a gold run exactly."""
    tp = fp = fn = 0
    for record in records:
        gold_spans = set(reconstruct_spans(record.gold_labels))
        pred_spans = set(record.pred_spans)
        tp += len(gold_spans & pred_spans)
        fp += len(pred_spans - gold_spans)
        fn += len(gold_spans - pred_spans)
    return _prf(tp, fp, fn)


def macro_f1(records: Sequence[PredictionRecord]) -> float:
    """Unweighted mean of per-query-class F1."""
    by_class: dict[str, list[PredictionRecord]] = {}
    for record in records:
        by_class.setdefault(record.query_class, []).append(record)
    if not by_class:
        return 0.0
    return float(np.mean([token_prf(group)[2] for group in by_class.values()]))


# ---------------------------------------------------------------------------
# Prediction
# ---------------------------------------------------------------------------


def predict(model: Model, examples: Sequence[PromptExample], vocab: Vocab,
            max_len: int, *, batch_size: int = 64, label_all_subtokens: bool = True,
            threads: int = 1) -> list[PredictionRecord]:
    """Word-level predictions for each example (eval mode, deterministic order).

    A word is positive iff the probability of class 1 is the argmax at its
    first subtoken. Words truncated away by the length budget predict 0.
    """
    if not examples:
        return []

    def encode_one(example: PromptExample):
        try:
            return encode(example, vocab, max_len, label_all_subtokens)
        except EncodingError as exc:
            raise EncodingError(f"origin {example.origin}: {exc}") from exc

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            encoded = list(pool.map(encode_one, examples))
    else:
        encoded = [encode_one(e) for e in examples]

    records = []
    for start in range(0, len(encoded), batch_size):
        chunk = encoded[start:start + batch_size]
        probs = forward(model, make_batch(chunk))
        decisions = probs.argmax(axis=-1)
        for offset, enc in enumerate(chunk):
            example = examples[start + offset]
            word_preds = align_predictions(decisions[offset], enc)
            pred = tuple(int(v == 1) for v in word_preds) if probs.shape[-1] == 2 \
                else tuple(int(v) for v in word_preds)
            records.append(PredictionRecord(
                origin=example.origin,
                query_class=example.query_class,
                gold_labels=example.sentence_labels,
                pred_labels=pred,
                pred_spans=reconstruct_spans(pred),
            ))
    return records


@dataclass(frozen=True)
class MultiClassPrediction:
    origin: tuple[str, int]
    gold_ids: tuple[int, ...]
    pred_ids: tuple[int, ...]


def predict_multiclass(model: Model, examples: Sequence[MultiClassExample], vocab: Vocab,
                       max_len: int, *, batch_size: int = 64) -> list[MultiClassPrediction]:
    if not examples:
        return []
    encoded = [encode_multiclass(e, vocab, max_len) for e in examples]
    out = []
    for start in range(0, len(encoded), batch_size):
        chunk = encoded[start:start + batch_size]
        probs = forward(model, make_batch(chunk))
        decisions = probs.argmax(axis=-1)
        for offset, enc in enumerate(chunk):
            example = examples[start + offset]
            preds = align_predictions(decisions[offset], enc)
            out.append(MultiClassPrediction(example.origin, tuple(example.labels),
                                            tuple(int(v) for v in preds)))
    return out


def multiclass_class_f1(predictions: Sequence[MultiClassPrediction],
                        class_vocabulary: Sequence[str]) -> dict[str, float]:
    """Per-class one-vs-rest word-level F1 for the pilot comparison."""
    scores = {}
    for class_id, class_name in enumerate(class_vocabulary, start=1):
        tp = fp = fn = 0
        for record in predictions:
            for gold, pred in zip(record.gold_ids, record.pred_ids):
                if pred == class_id and gold == class_id:
                    tp += 1
                elif pred == class_id:
                    fp += 1
                elif gold == class_id:
                    fn += 1
        scores[class_name] = _prf(tp, fp, fn)[2]
    return scores
