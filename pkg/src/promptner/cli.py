"""Command-line entry point orchestrating the full pipeline.

Subcommands: ingest | stats | transform | split | synth | train | finetune |
evaluate | gradcheck | pilot. Every flag can also come from a JSON config
file (--config); flags override config keys. Commands that produce a run
directory write the effective config snapshot there, so a run can be
replayed from its artifacts alone.

Exit codes: 0 success, 1 usage, 2 data validation, 3 numerical failure, 4 I/O.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import (DataError, LabelVariant, ModelConfig, NumericsError, OptimizerConfig,
               SplitRatios, ValidationStrategy, ValidationStrategyKind,
               build_validation_set, compute_stats, default_synthetic_spec,
               evaluate_protocol, exclude_class, expand_corpus, fine_tune_few_shot,
               generate_synthetic, gradient_check, init_model, load_checkpoint,
               load_spec, load_vocab, merge_classes, parse_corpus, parse_corpus_path,
               read_conll, read_examples, render_report, render_stats_table,
               sample_few_shot, save_checkpoint, save_vocab, split_corpus_sentences,
               split_dataset, to_multiclass_dataset, train_multiclass_pilot,
               train_zero_shot, vocab_from_corpus, write_corpus, write_examples,
               multiclass_to_jsonl)
from .metrics import multiclass_class_f1, predict, predict_multiclass, token_prf
from .model import Batch

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 instead of argparse's default 2
        raise UsageError(message)


# ---------------------------------------------------------------------------
# Config handling
# ---------------------------------------------------------------------------

_MODEL_KEYS = ("hidden_dim", "num_layers", "num_heads", "ffn_dim", "max_seq_len",
               "num_labels", "dropout_rate")
_OPT_KEYS = ("learning_rate", "weight_decay", "beta1", "beta2", "epsilon", "batch_size")

DEFAULTS: dict = {
    "corpus": None, "vocab": None, "run_dir": None,
    "variant": "label_as_positive",
    "ratios": [0.85, 0.05, 0.10],
    "unseen": None,
    "ks": [0, 1, 10, 100],
    "seed": 0,
    "epochs": 5,
    "few_shot_epochs": 10,
    "max_len": 128,
    "validation_strategy": "all_with_unseen",
    "validation_classes": [],
    "label_all_subtokens": True,
    "threads": 1,
    "model": {"hidden_dim": 64, "num_layers": 2, "num_heads": 2, "ffn_dim": 256,
              "max_seq_len": 128, "num_labels": 2, "dropout_rate": 0.1},
    "optimizer": {"learning_rate": 5e-5, "weight_decay": 0.01, "beta1": 0.9,
                  "beta2": 0.999, "epsilon": 1e-8, "batch_size": 32},
}


def _load_config(path: str | None) -> dict:
    config = json.loads(json.dumps(DEFAULTS))  # deep copy
    if path:
        try:
            user = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise DataError(f"config {path}: invalid JSON ({exc.msg})") from exc
        for key, value in user.items():
            if key in ("model", "optimizer") and isinstance(value, dict):
                config[key].update(value)
            else:
                config[key] = value
    return config


def _apply_flags(config: dict, args: argparse.Namespace) -> dict:
    mapping = vars(args)
    for key in list(config):
        if key in ("model", "optimizer"):
            continue
        if mapping.get(key) is not None:
            config[key] = mapping[key]
    for key in _MODEL_KEYS:
        if mapping.get(key) is not None:
            config["model"][key] = mapping[key]
    for key in _OPT_KEYS:
        if mapping.get(key) is not None:
            config["optimizer"][key] = mapping[key]
    return config


def _model_config(config: dict, vocab_size: int, num_labels: int | None = None) -> ModelConfig:
    kwargs = dict(config["model"])
    if num_labels is not None:
        kwargs["num_labels"] = num_labels
    return ModelConfig(vocab_size=vocab_size, seed=config["seed"], **kwargs)


def _optimizer_config(config: dict) -> OptimizerConfig:
    return OptimizerConfig(**config["optimizer"])


def _require(config: dict, *keys: str) -> None:
    missing = [k for k in keys if not config.get(k)]
    if missing:
        raise UsageError(f"missing required option(s): {', '.join('--' + k.replace('_', '-') for k in missing)}")


def _check_paths(config: dict, *keys: str) -> None:
    for key in keys:
        value = config.get(key)
        if value and not Path(value).exists():
            raise FileNotFoundError(f"{key} file not found: {value}")


def _snapshot(config: dict, run_dir: str | Path, command: str) -> None:
    path = Path(run_dir)
    path.mkdir(parents=True, exist_ok=True)
    payload = dict(config)
    payload["command"] = command
    (path / f"config_{command}.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _strategy(config: dict) -> ValidationStrategy:
    kind = ValidationStrategyKind(config["validation_strategy"])
    return ValidationStrategy(kind, tuple(config.get("validation_classes") or ()))


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_synth(config: dict, args: argparse.Namespace) -> int:
    if args.spec:
        spec = load_spec(args.spec)
    else:
        spec = default_synthetic_spec(sentence_count=args.sentences or 800,
                                      seed=config["seed"])
    corpus = generate_synthetic(spec)
    out = args.out or "synthetic_corpus.jsonl"
    write_corpus(corpus, out)
    print(f"wrote {len(corpus.documents)} documents to {out}")
    if args.vocab_out:
        vocab = vocab_from_corpus(corpus)
        save_vocab(vocab, args.vocab_out)
        print(f"wrote {len(vocab)} vocabulary tokens to {args.vocab_out}")
    if config["run_dir"]:
        _snapshot(config, config["run_dir"], "synth")
    return EXIT_OK


def _cmd_ingest(config: dict, args: argparse.Namespace) -> int:
    if not args.infile:
        raise UsageError("ingest requires --in")
    text = Path(args.infile).read_text(encoding="utf-8")
    if args.format == "conll":
        corpus = read_conll(text, dataset=args.dataset or Path(args.infile).stem)
    else:
        corpus = parse_corpus(text)
    if args.merge:
        mapping = {}
        for item in args.merge:
            if "=" not in item:
                raise UsageError(f"--merge expects OLD=NEW, got {item!r}")
            old, new = item.split("=", 1)
            mapping[old] = new
        corpus = merge_classes(corpus, mapping)
    out = args.out or "corpus.jsonl"
    write_corpus(corpus, out)
    spans = sum(len(d.annotations) for d in corpus.documents)
    print(f"wrote {len(corpus.documents)} documents ({spans} spans) to {out}")
    if config["run_dir"]:
        _snapshot(config, config["run_dir"], "ingest")
    return EXIT_OK


def _cmd_stats(config: dict, args: argparse.Namespace) -> int:
    _require(config, "corpus")
    _check_paths(config, "corpus")
    corpus = split_corpus_sentences(parse_corpus_path(config["corpus"]))
    table = render_stats_table(compute_stats(corpus))
    if args.out:
        Path(args.out).write_text(table, encoding="utf-8")
        print(f"wrote stats to {args.out}")
    else:
        print(table, end="")
    return EXIT_OK


def _cmd_transform(config: dict, args: argparse.Namespace) -> int:
    _require(config, "corpus")
    _check_paths(config, "corpus")
    corpus = split_corpus_sentences(parse_corpus_path(config["corpus"]))
    variant = LabelVariant(config["variant"])
    examples = expand_corpus(corpus, variant)
    out = args.out or "examples.jsonl"
    write_examples(examples, out)
    print(f"wrote {len(examples)} examples ({variant.value}) to {out}")
    if config["run_dir"]:
        _snapshot(config, config["run_dir"], "transform")
    return EXIT_OK


def _cmd_split(config: dict, args: argparse.Namespace) -> int:
    if not args.infile:
        raise UsageError("split requires --in (an examples file)")
    examples = read_examples(args.infile)
    r = config["ratios"]
    ratios = SplitRatios(*r)
    train, val, test = split_dataset(examples, ratios, seed=config["seed"])
    out_dir = Path(args.out_dir or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, part in (("train", train), ("val", val), ("test", test)):
        write_examples(part, out_dir / f"{name}.jsonl")
    print(f"split {len(examples)} examples into "
          f"{len(train)}/{len(val)}/{len(test)} under {out_dir}")
    if config["run_dir"]:
        _snapshot(config, config["run_dir"], "split")
    return EXIT_OK


def _cmd_train(config: dict, args: argparse.Namespace) -> int:
    _require(config, "vocab", "run_dir", "unseen")
    if not args.train_file or not args.val_file:
        raise UsageError("train requires --train-file and --val-file")
    _check_paths(config, "vocab")
    _check_paths({"train_file": args.train_file, "val_file": args.val_file},
                 "train_file", "val_file")
    vocab = load_vocab(config["vocab"])
    train_examples = read_examples(args.train_file)
    val_split = read_examples(args.val_file)
    unseen = config["unseen"]
    reduced, pool = exclude_class(train_examples, unseen)
    strategy = _strategy(config)
    validation = build_validation_set(val_split, strategy, unseen)
    run_dir = Path(config["run_dir"])
    result = train_zero_shot(
        reduced, {strategy.kind.value: validation} if validation else {},
        vocab,
        _model_config(config, len(vocab)),
        _optimizer_config(config),
        epochs=config["epochs"], seed=config["seed"], unseen=unseen,
        max_len=config["max_len"], label_all_subtokens=config["label_all_subtokens"],
        run_dir=run_dir, config_snapshot=config,
    )
    write_examples(pool, run_dir / "few_shot_pool.jsonl")
    _snapshot(config, run_dir, "train")
    if strategy.kind is ValidationStrategyKind.MANUAL:
        for epoch, model in enumerate(result.epoch_models, start=1):
            records = predict(model, val_split, vocab, config["max_len"])
            lines = [json.dumps({"origin": list(r.origin), "class": r.query_class,
                                 "gold": list(r.gold_labels), "pred": list(r.pred_labels)})
                     for r in records]
            (run_dir / f"val_predictions_epoch_{epoch:03d}.jsonl").write_text(
                "\n".join(lines) + "\n", encoding="utf-8")
        print(f"manual validation: exported per-epoch predictions to {run_dir}")
    for record in result.log.records:
        scores = ", ".join(f"{k} F1={v:.4f}" for k, v in record.val_macro_f1.items())
        print(f"epoch {record.epoch}: loss={record.train_loss:.4f}"
              + (f", {scores}" if scores else ""))
    if result.selected_epoch is not None:
        print(f"selected epoch {result.selected_epoch}")
    return EXIT_OK


def _cmd_finetune(config: dict, args: argparse.Namespace) -> int:
    _require(config, "vocab")
    if not args.checkpoint or not args.pool:
        raise UsageError("finetune requires --checkpoint and --pool")
    _check_paths(config, "vocab")
    _check_paths({"checkpoint": args.checkpoint, "pool": args.pool}, "checkpoint", "pool")
    vocab = load_vocab(config["vocab"])
    model, _, _ = load_checkpoint(Path(args.checkpoint).read_bytes())
    pool = read_examples(args.pool)
    shots = sample_few_shot(pool, args.k, seed=config["seed"])
    tuned = fine_tune_few_shot(model, shots, vocab, _optimizer_config(config),
                               epochs=config["few_shot_epochs"], seed=config["seed"],
                               max_len=config["max_len"],
                               label_all_subtokens=config["label_all_subtokens"])
    out = args.out or f"finetuned_k{args.k}.ckpt"
    Path(out).write_bytes(save_checkpoint(tuned, {"shots": args.k, "seed": config["seed"]}))
    print(f"fine-tuned on {args.k} shots for {config['few_shot_epochs']} epochs -> {out}")
    return EXIT_OK


def _read_selected(run_dir: Path) -> Path:
    marker = run_dir / "selected"
    if not marker.exists():
        raise FileNotFoundError(f"no 'selected' marker in {run_dir}")
    for line in marker.read_text(encoding="utf-8").splitlines():
        key, _, value = line.partition("\t")
        if key == "checkpoint":
            return run_dir / value
    raise DataError(f"malformed selected marker in {run_dir}")


def _cmd_evaluate(config: dict, args: argparse.Namespace) -> int:
    _require(config, "vocab", "run_dir", "unseen")
    if not args.test_file:
        raise UsageError("evaluate requires --test-file")
    _check_paths(config, "vocab")
    _check_paths({"test_file": args.test_file}, "test_file")
    run_dir = Path(config["run_dir"])
    vocab = load_vocab(config["vocab"])
    checkpoint_path = Path(args.checkpoint) if args.checkpoint else _read_selected(run_dir)
    model, _, meta = load_checkpoint(checkpoint_path.read_bytes())
    pool = read_examples(run_dir / "few_shot_pool.jsonl")
    test_split = read_examples(args.test_file)
    best_epoch = meta.get("epoch")
    report = evaluate_protocol(
        model, pool, test_split, config["unseen"], config["ks"], vocab=vocab,
        optimizer_config=_optimizer_config(config),
        few_shot_epochs=config["few_shot_epochs"], seed=config["seed"],
        max_len=config["max_len"], label_all_subtokens=config["label_all_subtokens"],
        best_epoch=best_epoch, variant=config["variant"],
    )
    fmt = args.format or "text"
    rendered = render_report(report, fmt)
    suffix = {"text": "txt", "csv": "csv", "jsonl": "jsonl"}[fmt]
    out_path = run_dir / f"metrics.{suffix}"
    out_path.write_text(rendered, encoding="utf-8")
    _snapshot(config, run_dir, "evaluate")
    print(rendered, end="")
    print(f"wrote {out_path}")
    return EXIT_OK


def _cmd_gradcheck(config: dict, args: argparse.Namespace) -> int:
    model_config = ModelConfig(
        vocab_size=args.vocab_size,
        hidden_dim=config["model"]["hidden_dim"],
        num_layers=config["model"]["num_layers"],
        num_heads=config["model"]["num_heads"],
        ffn_dim=config["model"]["ffn_dim"],
        max_seq_len=32,
        num_labels=config["model"]["num_labels"],
        dropout_rate=0.0,
        seed=config["seed"],
    )
    model = init_model(model_config)
    rng = np.random.default_rng(config["seed"])
    B, L = 4, 16
    ids = rng.integers(0, model_config.vocab_size, (B, L)).astype(np.int32)
    segments = np.zeros((B, L), dtype=np.int32)
    segments[:, L // 2:] = 1
    attention = np.ones((B, L), dtype=np.int32)
    attention[:, L - 2:] = 0
    labels = rng.integers(0, model_config.num_labels, (B, L)).astype(np.int32)
    loss_mask = np.ones((B, L), dtype=np.int32)
    loss_mask[:, 0] = 0
    loss_mask[:, L - 2:] = 0
    batch = Batch(ids, segments, attention, labels, loss_mask)
    worst = gradient_check(model, batch, epsilon=args.epsilon,
                           samples_per_tensor=args.samples, seed=config["seed"])
    print(f"max relative error: {worst:.3e} (tolerance {args.tolerance:.1e})")
    if worst >= args.tolerance:
        raise NumericsError(f"gradient check failed: {worst:.3e} >= {args.tolerance:.1e}")
    return EXIT_OK


def _cmd_pilot(config: dict, args: argparse.Namespace) -> int:
    _require(config, "corpus", "vocab", "run_dir")
    _check_paths(config, "corpus", "vocab")
    corpus = split_corpus_sentences(parse_corpus_path(config["corpus"]))
    vocab = load_vocab(config["vocab"])
    run_dir = Path(config["run_dir"])
    run_dir.mkdir(parents=True, exist_ok=True)
    variant = LabelVariant(config["variant"])
    opt = _optimizer_config(config)

    binary_examples = expand_corpus(corpus, variant)
    binary_result = train_zero_shot(binary_examples, {}, vocab,
                                    _model_config(config, len(vocab)), opt,
                                    epochs=config["epochs"], seed=config["seed"],
                                    max_len=config["max_len"])
    records = predict(binary_result.model, binary_examples, vocab, config["max_len"])
    per_class: dict[str, list] = {}
    for record in records:
        per_class.setdefault(record.query_class, []).append(record)
    binary_f1 = {c: token_prf(rs)[2] for c, rs in sorted(per_class.items())}

    mc_examples = to_multiclass_dataset(corpus)
    (run_dir / "multiclass.jsonl").write_text(multiclass_to_jsonl(mc_examples),
                                              encoding="utf-8")
    num_classes = len(mc_examples[0].class_vocabulary)
    mc_result = train_multiclass_pilot(mc_examples, vocab,
                                       _model_config(config, len(vocab), num_classes + 1),
                                       opt, epochs=config["epochs"], seed=config["seed"],
                                       max_len=config["max_len"])
    mc_predictions = predict_multiclass(mc_result.model, mc_examples, vocab,
                                        config["max_len"])
    mc_f1 = multiclass_class_f1(mc_predictions, mc_examples[0].class_vocabulary)

    lines = ["class\tbinary_f1\tmulticlass_f1"]
    for class_name in binary_f1:
        lines.append(f"{class_name}\t{binary_f1[class_name]:.4f}\t"
                     f"{mc_f1.get(class_name, 0.0):.4f}")
    binary_avg = float(np.mean(list(binary_f1.values())))
    mc_avg = float(np.mean(list(mc_f1.values())))
    lines.append(f"Average\t{binary_avg:.4f}\t{mc_avg:.4f}")
    table = "\n".join(lines) + "\n"
    (run_dir / "pilot_report.tsv").write_text(table, encoding="utf-8")
    _snapshot(config, run_dir, "pilot")
    print(table, end="")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override its keys")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--run-dir", dest="run_dir", default=None)
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads for encoding (1 = deterministic baseline)")


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--hidden-dim", dest="hidden_dim", type=int, default=None)
    parser.add_argument("--num-layers", dest="num_layers", type=int, default=None)
    parser.add_argument("--num-heads", dest="num_heads", type=int, default=None)
    parser.add_argument("--ffn-dim", dest="ffn_dim", type=int, default=None)
    parser.add_argument("--num-labels", dest="num_labels", type=int, default=None)
    parser.add_argument("--dropout-rate", dest="dropout_rate", type=float, default=None)
    parser.add_argument("--max-len", dest="max_len", type=int, default=None)


def _add_optimizer_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--learning-rate", dest="learning_rate", type=float, default=None)
    parser.add_argument("--weight-decay", dest="weight_decay", type=float, default=None)
    parser.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    parser.add_argument("--epochs", type=int, default=None)
    parser.add_argument("--few-shot-epochs", dest="few_shot_epochs", type=int, default=None)


def build_parser() -> _Parser:
    parser = _Parser(prog="promptner", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus (and optional vocab)")
    _add_common(p)
    p.add_argument("--spec", help="synthetic spec JSON (default: bundled spec)")
    p.add_argument("--sentences", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--vocab-out", dest="vocab_out", default=None)

    p = sub.add_parser("ingest", help="read canonical or CoNLL data, validate, re-emit")
    _add_common(p)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--format", choices=("canonical", "conll"), default="canonical")
    p.add_argument("--dataset", default=None, help="dataset name for CoNLL input")
    p.add_argument("--merge", action="append", default=None, metavar="OLD=NEW")
    p.add_argument("--out", default=None)

    p = sub.add_parser("stats", help="Table-1-style class/token statistics")
    _add_common(p)
    p.add_argument("corpus_positional", nargs="?", default=None, metavar="CORPUS")
    p.add_argument("--corpus", default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("transform", help="factorize a corpus into prompt examples")
    _add_common(p)
    p.add_argument("--corpus", default=None)
    p.add_argument("--variant", choices=[v.value for v in LabelVariant], default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("split", help="stratified train/val/test split")
    _add_common(p)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out-dir", dest="out_dir", default=None)
    p.add_argument("--ratios", default=None, help="e.g. 0.85,0.05,0.10")

    p = sub.add_parser("train", help="zero-shot fine-tuning with class exclusion")
    _add_common(p)
    _add_model_flags(p)
    _add_optimizer_flags(p)
    p.add_argument("--train-file", dest="train_file", default=None)
    p.add_argument("--val-file", dest="val_file", default=None)
    p.add_argument("--vocab", default=None)
    p.add_argument("--unseen", default=None)
    p.add_argument("--variant", choices=[v.value for v in LabelVariant], default=None)
    p.add_argument("--validation-strategy", dest="validation_strategy", default=None,
                   choices=[k.value for k in ValidationStrategyKind])
    p.add_argument("--validation-classes", dest="validation_classes", default=None,
                   help="comma-separated classes for few_unseen")

    p = sub.add_parser("finetune", help="few-shot fine-tuning from a checkpoint")
    _add_common(p)
    _add_optimizer_flags(p)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--pool", default=None)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--vocab", default=None)
    p.add_argument("--max-len", dest="max_len", type=int, default=None)
    p.add_argument("--out", default=None)

    p = sub.add_parser("evaluate", help="k-shot protocol report for the unseen class")
    _add_common(p)
    _add_optimizer_flags(p)
    p.add_argument("--test-file", dest="test_file", default=None)
    p.add_argument("--vocab", default=None)
    p.add_argument("--unseen", default=None)
    p.add_argument("--checkpoint", default=None,
                   help="explicit checkpoint (default: run dir's selected marker)")
    p.add_argument("--ks", default=None, help="comma-separated shot counts")
    p.add_argument("--format", choices=("text", "csv", "jsonl"), default=None)
    p.add_argument("--max-len", dest="max_len", type=int, default=None)
    p.add_argument("--variant", choices=[v.value for v in LabelVariant], default=None)

    p = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    _add_common(p)
    _add_model_flags(p)
    p.add_argument("--vocab-size", dest="vocab_size", type=int, default=50)
    p.add_argument("--epsilon", type=float, default=1e-3)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--samples", type=int, default=200)

    p = sub.add_parser("pilot", help="binary-factorized vs multi-class comparison")
    _add_common(p)
    _add_model_flags(p)
    _add_optimizer_flags(p)
    p.add_argument("--corpus", default=None)
    p.add_argument("--vocab", default=None)
    p.add_argument("--variant", choices=[v.value for v in LabelVariant], default=None)

    return parser


_HANDLERS = {
    "synth": _cmd_synth,
    "ingest": _cmd_ingest,
    "stats": _cmd_stats,
    "transform": _cmd_transform,
    "split": _cmd_split,
    "train": _cmd_train,
    "finetune": _cmd_finetune,
    "evaluate": _cmd_evaluate,
    "gradcheck": _cmd_gradcheck,
    "pilot": _cmd_pilot,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        config = _load_config(getattr(args, "config", None))
        if getattr(args, "corpus_positional", None) and not getattr(args, "corpus", None):
            args.corpus = args.corpus_positional
        if isinstance(getattr(args, "ratios", None), str):
            args.ratios = [float(x) for x in args.ratios.split(",")]
        if isinstance(getattr(args, "ks", None), str):
            args.ks = [int(x) for x in args.ks.split(",")]
        if isinstance(getattr(args, "validation_classes", None), str):
            args.validation_classes = args.validation_classes.split(",")
        config = _apply_flags(config, args)
        return _HANDLERS[args.command](config, args)
    except UsageError as exc:
        print(f"error (usage): {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ValueError) as exc:
        print(f"error (data): {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericsError as exc:
        print(f"error (numerical): {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"error (io): {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
