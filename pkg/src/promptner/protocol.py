"""The zero-/few-shot evaluation protocol and report rendering.

For each requested shot count k, a fresh copy of the zero-shot model is
fine-tuned on k sampled supporting examples (k=0 evaluates the zero-shot
model as-is) and scored on the unseen class's test examples. Reports render
as an aligned text table ("F1 (precision,recall)" percentages, two decimals),
CSV, or line-oriented JSON records.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DataError
from .metrics import predict, span_prf, token_prf
from .model import Model
from .subword import Vocab
from .training import OptimizerConfig, fine_tune_few_shot
from .transform import PromptExample, sample_few_shot


@dataclass(frozen=True)
class ReportRow:
    class_name: str
    shots: int
    precision: float  # fractions in [0, 1]; rendered as percentages
    recall: float
    f1: float
    span_precision: float
    span_recall: float
    span_f1: float
    test_examples: int
    best_epoch: int | None = None


@dataclass(frozen=True)
class MetricsReport:
    rows: tuple[ReportRow, ...]
    variant: str = ""
    metadata: dict | None = None

    def classes(self) -> list[str]:
        seen: list[str] = []
        for row in self.rows:
            if row.class_name not in seen:
                seen.append(row.class_name)
        return seen

    def shot_counts(self) -> list[int]:
        return sorted({row.shots for row in self.rows})

    def macro_rows(self) -> list[ReportRow]:
        """Unweighted means over classes, one row per shot count."""
        out = []
        for k in self.shot_counts():
            rows = [r for r in self.rows if r.shots == k]
            epochs = [r.best_epoch for r in rows if r.best_epoch is not None]
            out.append(ReportRow(
                "Average", k,
                float(np.mean([r.precision for r in rows])),
                float(np.mean([r.recall for r in rows])),
                float(np.mean([r.f1 for r in rows])),
                float(np.mean([r.span_precision for r in rows])),
                float(np.mean([r.span_recall for r in rows])),
                float(np.mean([r.span_f1 for r in rows])),
                sum(r.test_examples for r in rows),
                int(round(np.mean(epochs))) if epochs else None,
            ))
        return out


def evaluate_protocol(model: Model, pool: Sequence[PromptExample],
                      test_split: Sequence[PromptExample], unseen: str,
                      ks: Sequence[int] = (0, 1, 10, 100), *, vocab: Vocab,
                      optimizer_config: OptimizerConfig | None = None,
                      few_shot_epochs: int = 10, seed: int = 0,
                      max_len: int | None = None, label_all_subtokens: bool = True,
                      best_epoch: int | None = None, variant: str = "",
                      metadata: dict | None = None) -> MetricsReport:
    """Score the unseen class at each shot count, mirroring the tables' shape."""
    test_examples = [e for e in test_split if e.query_class == unseen]
    if not test_examples:
        raise DataError(f"test split has no examples of unseen class {unseen!r}")
    max_len = max_len or model.config.max_seq_len
    optimizer_config = optimizer_config or OptimizerConfig()
    rows = []
    for k in ks:
        if k == 0:
            scored = model
        else:
            shots = sample_few_shot(pool, k, seed)
            scored = fine_tune_few_shot(model, shots, vocab, optimizer_config,
                                        epochs=few_shot_epochs, seed=seed, max_len=max_len,
                                        label_all_subtokens=label_all_subtokens)
        records = predict(scored, test_examples, vocab, max_len,
                          batch_size=optimizer_config.batch_size,
                          label_all_subtokens=label_all_subtokens)
        precision, recall, f1 = token_prf(records)
        s_precision, s_recall, s_f1 = span_prf(records)
        rows.append(ReportRow(unseen, int(k), precision, recall, f1,
                              s_precision, s_recall, s_f1, len(test_examples), best_epoch))
    return MetricsReport(tuple(rows), variant=variant, metadata=metadata)


def merge_reports(reports: Sequence[MetricsReport]) -> MetricsReport:
    rows: list[ReportRow] = []
    for report in reports:
        rows.extend(report.rows)
    variant = reports[0].variant if reports else ""
    return MetricsReport(tuple(rows), variant=variant)


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------


def _cell(row: ReportRow) -> str:
    return (f"{100 * row.f1:.2f} ({100 * row.precision:.2f},{100 * row.recall:.2f})")


def _render_text(report: MetricsReport) -> str:
    ks = report.shot_counts()
    header = ["Class", "Epoch"] + [str(k) for k in ks]
    lines = []
    all_rows = []
    for class_name in report.classes():
        cells = {r.shots: r for r in report.rows if r.class_name == class_name}
        all_rows.append((class_name, cells))
    if report.rows:
        all_rows.append(("Average", {r.shots: r for r in report.macro_rows()}))
    table = [header]
    for name, cells in all_rows:
        some_row = next(iter(cells.values()))
        epoch = "" if some_row.best_epoch is None else str(some_row.best_epoch)
        table.append([name, epoch] + [_cell(cells[k]) if k in cells else "-" for k in ks])
    widths = [max(len(row[i]) for row in table) for i in range(len(header))]
    for row in table:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    if report.variant:
        lines.append("")
        lines.append(f"variant: {report.variant}")
    return "\n".join(lines) + "\n"


_CSV_COLUMNS = ("class", "shots", "f1", "precision", "recall",
                "span_f1", "span_precision", "span_recall", "test_examples", "best_epoch")


def _row_values(row: ReportRow) -> list[str]:
    return [
        row.class_name, str(row.shots),
        f"{100 * row.f1:.2f}", f"{100 * row.precision:.2f}", f"{100 * row.recall:.2f}",
        f"{100 * row.span_f1:.2f}", f"{100 * row.span_precision:.2f}",
        f"{100 * row.span_recall:.2f}",
        str(row.test_examples),
        "" if row.best_epoch is None else str(row.best_epoch),
    ]


def _render_csv(report: MetricsReport) -> str:
    lines = [",".join(_CSV_COLUMNS)]
    for row in list(report.rows) + report.macro_rows():
        lines.append(",".join(_row_values(row)))
    return "\n".join(lines) + "\n"


def _render_jsonl(report: MetricsReport) -> str:
    lines = []
    for row in list(report.rows) + report.macro_rows():
        record = dict(zip(_CSV_COLUMNS, _row_values(row)))
        record["variant"] = report.variant
        lines.append(json.dumps(record, ensure_ascii=False))
    return "\n".join(lines) + "\n"


def render_report(report: MetricsReport, fmt: str = "text") -> str:
    renderers = {"text": _render_text, "csv": _render_csv, "jsonl": _render_jsonl}
    if fmt not in renderers:
        raise DataError(f"unknown report format {fmt!r}; choose from {sorted(renderers)}")
    return renderers[fmt](report)
