"""Optimization and the zero-/few-shot fine-tuning loops.

Adam with decoupled weight decay (decay skips layer-norm parameters and
biases), per-epoch seeded shuffling, per-epoch checkpoints, and validation
under the configurable strategies. Runs are fully deterministic for a fixed
(data, config, seed) triple.

Run directory layout: ``config.json`` snapshot, ``checkpoint_epoch_NNN.ckpt``
per epoch, ``trainlog.tsv`` with one (epoch, split, metric, value) record per
line, and a ``selected`` marker naming the best-epoch checkpoint.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import DataError, NumericsError
from .metrics import macro_f1, predict
from .model import (Batch, Model, ModelConfig, backward, init_model, make_batch,
                    save_checkpoint)
from .subword import EncodedExample, Vocab, encode, encode_multiclass
from .transform import MultiClassExample, PromptExample

# ---------------------------------------------------------------------------
# Optimizer
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OptimizerConfig:
    learning_rate: float = 5e-5
    weight_decay: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: int = 32

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise DataError("learning_rate must be positive")
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise DataError("betas must lie in (0, 1)")
        if self.batch_size < 1:
            raise DataError("batch_size must be >= 1")
        if self.weight_decay < 0 or self.epsilon <= 0:
            raise DataError("weight_decay must be >= 0 and epsilon > 0")


@dataclass
class OptimizerState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    step: int = 0


def init_optimizer_state(model: Model) -> OptimizerState:
    return OptimizerState(
        m={k: np.zeros_like(p) for k, p in model.params.items()},
        v={k: np.zeros_like(p) for k, p in model.params.items()},
    )


def _decays(name: str) -> bool:
    return ".ln" not in name and not name.endswith(".bias")


def adam_step(model: Model, gradients: Mapping[str, np.ndarray], state: OptimizerState,
              config: OptimizerConfig) -> None:
    """One bias-corrected Adam update, in place, with decoupled weight decay."""
    state.step += 1
    t = state.step
    bc1 = 1.0 - config.beta1 ** t
    bc2 = 1.0 - config.beta2 ** t
    for name, param in model.params.items():
        g = gradients[name]
        if not np.isfinite(g).all():
            raise NumericsError(f"non-finite gradient for tensor {name!r}")
        m = state.m[name]
        v = state.v[name]
        m *= config.beta1
        m += (1.0 - config.beta1) * g
        v *= config.beta2
        v += (1.0 - config.beta2) * np.square(g)
        update = (m / bc1) / (np.sqrt(v / bc2) + config.epsilon)
        if config.weight_decay and _decays(name):
            update = update + config.weight_decay * param
        param -= config.learning_rate * update


# ---------------------------------------------------------------------------
# Validation strategies
# ---------------------------------------------------------------------------


class ValidationStrategyKind(str, Enum):
    ALL_WITH_UNSEEN = "all_with_unseen"
    SEEN_ONLY = "seen_only"
    SINGLE_UNSEEN_ONLY = "single_unseen_only"
    FEW_UNSEEN = "few_unseen"
    MANUAL = "manual"


@dataclass(frozen=True)
class ValidationStrategy:
    kind: ValidationStrategyKind
    classes: tuple[str, ...] = ()  # payload for FEW_UNSEEN

    def __post_init__(self) -> None:
        if self.kind is ValidationStrategyKind.FEW_UNSEEN and not self.classes:
            raise DataError("few_unseen strategy needs at least one class")


def build_validation_set(val_split: Sequence[PromptExample], strategy: ValidationStrategy,
                         unseen: str) -> list[PromptExample]:
    """Filter the validation split according to the strategy.

    The manual strategy returns an empty list: inspection happens through
    prediction export, and no automatic model selection is possible.
    """
    kind = strategy.kind
    if kind is ValidationStrategyKind.MANUAL:
        return []
    if kind is ValidationStrategyKind.ALL_WITH_UNSEEN:
        result = list(val_split)
    elif kind is ValidationStrategyKind.SEEN_ONLY:
        result = [e for e in val_split if e.query_class != unseen]
    elif kind is ValidationStrategyKind.SINGLE_UNSEEN_ONLY:
        result = [e for e in val_split if e.query_class == unseen]
    else:
        present = {e.query_class for e in val_split}
        missing = [c for c in strategy.classes if c not in present]
        if missing:
            raise DataError(f"strategy classes not in validation split: {missing}")
        result = [e for e in val_split if e.query_class in strategy.classes]
    if not result:
        raise DataError(f"validation strategy {kind.value!r} selected no examples")
    return result


# ---------------------------------------------------------------------------
# Train log
# ---------------------------------------------------------------------------


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_macro_f1: dict[str, float] = field(default_factory=dict)
    checkpoint: str | None = None


@dataclass
class TrainLog:
    seed: int
    records: list[EpochRecord] = field(default_factory=list)
    wall_clock_seconds: float = 0.0  # in-memory only; never serialized

    def __post_init__(self) -> None:
        for i, record in enumerate(self.records, start=1):
            if record.epoch != i:
                raise DataError("epoch records must be contiguous from 1")


def serialize_train_log(log: TrainLog) -> str:
    """Line-oriented (epoch, split, metric, value) records; excludes wall clock."""
    lines = [f"0\tmeta\tseed\t{log.seed}"]
    for record in log.records:
        lines.append(f"{record.epoch}\ttrain\tloss\t{record.train_loss!r}")
        for label, value in record.val_macro_f1.items():
            lines.append(f"{record.epoch}\t{label}\tmacro_f1\t{value!r}")
        if record.checkpoint:
            lines.append(f"{record.epoch}\tmeta\tcheckpoint\t{record.checkpoint}")
    return "\n".join(lines) + "\n"


def parse_train_log(text: str) -> TrainLog:
    seed = 0
    by_epoch: dict[int, EpochRecord] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise DataError(f"line {lineno}: expected 4 tab-separated fields")
        epoch, split, metric, value = int(parts[0]), parts[1], parts[2], parts[3]
        if epoch == 0 and metric == "seed":
            seed = int(value)
            continue
        record = by_epoch.setdefault(epoch, EpochRecord(epoch, math.nan))
        if split == "train" and metric == "loss":
            record.train_loss = float(value)
        elif metric == "macro_f1":
            record.val_macro_f1[split] = float(value)
        elif split == "meta" and metric == "checkpoint":
            record.checkpoint = value
    records = [by_epoch[e] for e in sorted(by_epoch)]
    return TrainLog(seed, records)


@dataclass
class TrainResult:
    log: TrainLog
    model: Model
    epoch_models: list[Model]
    checkpoint_paths: list[Path]
    selected_epoch: int | None = None


# ---------------------------------------------------------------------------
# Shared loop machinery
# ---------------------------------------------------------------------------


def _run_epoch(model: Model, encoded: list[EncodedExample], order: np.ndarray,
               batch_size: int, opt: OptimizerConfig, state: OptimizerState,
               rng: np.random.Generator,
               batch_guard: Callable[[np.ndarray], None] | None = None) -> float:
    losses = []
    for start in range(0, len(order), batch_size):
        index = order[start:start + batch_size]
        if batch_guard is not None:
            batch_guard(index)
        batch = make_batch([encoded[i] for i in index])
        loss_value, grads = backward(model, batch, train_mode=True, rng=rng)
        adam_step(model, grads, state, opt)
        losses.append(loss_value)
    return float(np.mean(losses))


def _validation_scores(model: Model, validation: Mapping[str, Sequence[PromptExample]],
                       vocab: Vocab, max_len: int, batch_size: int) -> dict[str, float]:
    scores = {}
    for label, examples in validation.items():
        records = predict(model, examples, vocab, max_len, batch_size=batch_size)
        scores[label] = macro_f1(records)
    return scores


def train_zero_shot(train_examples: Sequence[PromptExample],
                    validation: Sequence[PromptExample] | Mapping[str, Sequence[PromptExample]],
                    vocab: Vocab, model_config: ModelConfig, optimizer_config: OptimizerConfig,
                    *, epochs: int = 5, seed: int = 0, unseen: str | None = None,
                    max_len: int | None = None, label_all_subtokens: bool = True,
                    run_dir: str | Path | None = None,
                    config_snapshot: dict | None = None) -> TrainResult:
    """Zero-shot fine-tuning: train on everything except the unseen class.

    Shuffles per epoch with the run seed, checkpoints after every epoch, and
    records validation macro-F1 per strategy. The batching path re-asserts
    that no unseen-class example is ever consumed.
    """
    if not train_examples:
        raise DataError("empty training set")
    if unseen is not None:
        offenders = [e.origin for e in train_examples if e.query_class == unseen]
        if offenders:
            raise DataError(f"unseen class {unseen!r} present in training examples "
                            f"(e.g. {offenders[0]})")
    if isinstance(validation, Mapping):
        val_sets = dict(validation)
    else:
        val_sets = {"val": list(validation)} if validation else {}
    max_len = max_len or model_config.max_seq_len

    started = time.perf_counter()
    encoded = [encode(e, vocab, max_len, label_all_subtokens) for e in train_examples]
    model = init_model(model_config)
    state = init_optimizer_state(model)
    rng = np.random.default_rng(seed)
    run_path = Path(run_dir) if run_dir is not None else None
    if run_path is not None:
        run_path.mkdir(parents=True, exist_ok=True)
        if config_snapshot is not None:
            _write_config_snapshot(run_path, config_snapshot)

    def guard(index: np.ndarray) -> None:
        if unseen is None:
            return
        for i in index:
            if train_examples[i].query_class == unseen:
                raise DataError(f"exclusion violated: unseen class {unseen!r} reached a batch")

    log = TrainLog(seed=seed)
    epoch_models: list[Model] = []
    checkpoint_paths: list[Path] = []
    for epoch in range(1, epochs + 1):
        order = rng.permutation(len(encoded))
        train_loss = _run_epoch(model, encoded, order, optimizer_config.batch_size,
                                optimizer_config, state, rng, guard)
        scores = _validation_scores(model, val_sets, vocab, max_len,
                                    optimizer_config.batch_size)
        record = EpochRecord(epoch, train_loss, scores)
        if run_path is not None:
            name = f"checkpoint_epoch_{epoch:03d}.ckpt"
            (run_path / name).write_bytes(
                save_checkpoint(model, {"epoch": epoch, "seed": seed}))
            record.checkpoint = name
            checkpoint_paths.append(run_path / name)
        epoch_models.append(model.copy())
        log.records.append(record)

    log.wall_clock_seconds = time.perf_counter() - started
    result = TrainResult(log, model, epoch_models, checkpoint_paths)
    if val_sets:
        result.selected_epoch = select_model(log)
    if run_path is not None:
        (run_path / "trainlog.tsv").write_text(serialize_train_log(log), encoding="utf-8")
        if result.selected_epoch is not None:
            (run_path / "selected").write_text(
                f"epoch\t{result.selected_epoch}\n"
                f"checkpoint\tcheckpoint_epoch_{result.selected_epoch:03d}.ckpt\n",
                encoding="utf-8")
    return result


def select_model(log: TrainLog, strategy_label: str | None = None) -> int:
    """Best epoch by validation macro-F1; ties go to the earliest epoch."""
    if not log.records:
        raise DataError("empty train log")
    labels = list(log.records[0].val_macro_f1)
    if not labels:
        raise DataError("no validation scores recorded (manual strategy?); "
                        "select a checkpoint by inspection instead")
    label = strategy_label or labels[0]
    best_epoch, best_score = None, -1.0
    for record in log.records:
        score = record.val_macro_f1[label]
        if score > best_score:
            best_epoch, best_score = record.epoch, score
    return best_epoch


def fine_tune_few_shot(model: Model, shots: Sequence[PromptExample], vocab: Vocab,
                       optimizer_config: OptimizerConfig, *, epochs: int = 10,
                       seed: int = 0, max_len: int | None = None,
                       label_all_subtokens: bool = True) -> Model:
    """Continue from a checkpoint on the supporting examples, fresh optimizer state."""
    if not shots:
        raise DataError("few-shot fine-tuning needs at least one example")
    classes = {e.query_class for e in shots}
    if len(classes) != 1:
        raise DataError(f"shots mix query classes: {sorted(classes)}")
    max_len = max_len or model.config.max_seq_len
    encoded = [encode(e, vocab, max_len, label_all_subtokens) for e in shots]
    tuned = model.copy()
    state = init_optimizer_state(tuned)
    rng = np.random.default_rng(seed)
    for _ in range(epochs):
        order = rng.permutation(len(encoded))
        _run_epoch(tuned, encoded, order, optimizer_config.batch_size,
                   optimizer_config, state, rng)
    return tuned


def train_multiclass_pilot(examples: Sequence[MultiClassExample], vocab: Vocab,
                           model_config: ModelConfig, optimizer_config: OptimizerConfig,
                           *, epochs: int = 5, seed: int = 0, max_len: int | None = None,
                           run_dir: str | Path | None = None) -> TrainResult:
    """Same loop mechanics with a (C+1)-way head for the pilot comparison."""
    if not examples:
        raise DataError("empty training set")
    num_classes = len(examples[0].class_vocabulary)
    if model_config.num_labels != num_classes + 1:
        raise DataError(f"model num_labels {model_config.num_labels} != "
                        f"{num_classes} classes + 1")
    max_len = max_len or model_config.max_seq_len
    started = time.perf_counter()
    encoded = [encode_multiclass(e, vocab, max_len) for e in examples]
    model = init_model(model_config)
    state = init_optimizer_state(model)
    rng = np.random.default_rng(seed)
    log = TrainLog(seed=seed)
    epoch_models: list[Model] = []
    checkpoint_paths: list[Path] = []
    run_path = Path(run_dir) if run_dir is not None else None
    if run_path is not None:
        run_path.mkdir(parents=True, exist_ok=True)
    for epoch in range(1, epochs + 1):
        order = rng.permutation(len(encoded))
        train_loss = _run_epoch(model, encoded, order, optimizer_config.batch_size,
                                optimizer_config, state, rng)
        record = EpochRecord(epoch, train_loss)
        if run_path is not None:
            name = f"checkpoint_epoch_{epoch:03d}.ckpt"
            (run_path / name).write_bytes(save_checkpoint(model, {"epoch": epoch, "seed": seed}))
            record.checkpoint = name
            checkpoint_paths.append(run_path / name)
        epoch_models.append(model.copy())
        log.records.append(record)
    log.wall_clock_seconds = time.perf_counter() - started
    if run_path is not None:
        (run_path / "trainlog.tsv").write_text(serialize_train_log(log), encoding="utf-8")
    return TrainResult(log, model, epoch_models, checkpoint_paths)


def _write_config_snapshot(run_path: Path, snapshot: dict) -> None:
    import json

    (run_path / "config.json").write_text(
        json.dumps(snapshot, indent=2, sort_keys=True) + "\n", encoding="utf-8")
