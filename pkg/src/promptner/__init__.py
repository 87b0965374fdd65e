"""promptner: prompt-factorized binary token classification for zero- and
few-shot NER, trained end to end at desk scale with a from-scratch encoder."""

from .corpus import (ClassStats, ClassStatsRow, Corpus, Document, EntitySpan, Sentence,
                     Word, compute_stats, merge_classes, parse_corpus, parse_corpus_path,
                     read_conll, render_stats_table, sentence_split, serialize_corpus,
                     split_corpus_sentences, word_tokenize, write_corpus)
from .errors import DataError, EncodingError, NumericsError
from .metrics import (MultiClassPrediction, PredictionRecord, macro_f1,
                      multiclass_class_f1, predict, predict_multiclass,
                      reconstruct_spans, record_counts, span_prf, token_prf)
from .model import (Batch, Model, ModelConfig, backward, forward, gradient_check,
                    init_model, load_batches, load_checkpoint, loss, make_batch,
                    parameter_count, require_num_labels, save_batches, save_checkpoint)
from .protocol import MetricsReport, ReportRow, evaluate_protocol, merge_reports, render_report
from .subword import (EncodedExample, Vocab, align_predictions, encode, encode_multiclass,
                      load_vocab, save_vocab, subword_tokenize, vocab_from_corpus,
                      vocab_from_lines)
from .synthetic import (ClassDef, SurfacePattern, SyntheticSpec, Template,
                        default_synthetic_spec, generate_synthetic, load_spec,
                        pilot_synthetic_spec, spec_from_json, spec_to_json)
from .training import (EpochRecord, OptimizerConfig, OptimizerState, TrainLog, TrainResult,
                       ValidationStrategy, ValidationStrategyKind, adam_step,
                       build_validation_set, fine_tune_few_shot, init_optimizer_state,
                       parse_train_log, select_model, serialize_train_log,
                       train_multiclass_pilot, train_zero_shot)
from .transform import (LabelVariant, MultiClassExample, PromptExample, SplitRatios,
                        examples_from_jsonl, examples_to_jsonl, exclude_class,
                        expand_corpus, factorize, multiclass_from_jsonl,
                        multiclass_to_jsonl, read_examples, sample_few_shot,
                        split_dataset, to_multiclass_dataset, write_examples)

__version__ = "0.1.0"
