"""Fused online/offline stance classification with Shapley explanations.

The pipeline: ingest or synthesize a JSONL corpus, hash-embed the text
fields, one-hot the account categoricals, fuse into a single vector, train
a from-scratch MLP (or a baseline), evaluate on the chronologically last
slice, and attribute predictions to tokens or feature groups.
"""

from .ablate import (MODEL_NAMES, AblationReport, CellStats, FeatureConfig,
                     enumerate_feature_sets, run_matrix, summarize,
                     worker_count)
from .baselines import (BaselineModel, decision_scores, fit_gnb, fit_linear,
                        fit_svm_rbf, gnb_log_posteriors, kkt_residuals)
from .baselines import predict as baseline_predict
from .checkpoint import (load_any, load_checkpoint, save_baseline,
                         save_checkpoint, save_model)
from .corpus import (OFFLINE_FEATURES, ONLINE_FEATURES, CategoricalSchema,
                     Corpus, RawPost, SchemaFeature, StanceLabel, TimeSlices,
                     UnknownPolicy, balance_sample, chronological_split,
                     encode_onehot, infer_schema, ingest_records, labels_array,
                     load_schema, parse_label, posts_in_slice, sanitize_text,
                     save_schema, split_train_test, subcorpus, write_records,
                     write_split_manifest)
from .embed import (EmbeddingMatrix, FusedVector, Segment, assemble_features,
                    assemble_matrix, embed_corpus, hash_embed,
                    read_embeddings, write_embeddings)
from .errors import (ConvergenceError, CovExplainError, DataError,
                     FormatError, TrainingError)
from .explain import (Attribution, AttributionEntry, CoalitionGame,
                      attribution_csv, attribution_html,
                      explain_feature_groups, explain_tokens, shapley_exact,
                      shapley_sampled)
from .model import (AdamWConfig, AdamWState, EpochMetrics, GradCheckReport,
                    LayerGrads, LayerParams, ModelParams, Prediction,
                    TrainConfig, adamw_step, adamw_update, backward, bce_loss,
                    forward, grad_check, init_adamw_state, init_params,
                    predict, predict_labels, softmax, train)
from .synth import (ANTI_DESC_TOKEN, ANTI_TEXT_TOKEN, OfflineSignal,
                    PRO_DESC_TOKEN, PRO_TEXT_TOKEN, SignalSpec, generate,
                    planted_fusion_spec)

__version__ = "0.1.0"

__all__ = [
    "ANTI_DESC_TOKEN", "ANTI_TEXT_TOKEN", "PRO_DESC_TOKEN", "PRO_TEXT_TOKEN",
    "AblationReport", "AdamWConfig", "AdamWState", "Attribution",
    "AttributionEntry", "BaselineModel", "CategoricalSchema", "CellStats",
    "CoalitionGame", "ConvergenceError", "Corpus", "CovExplainError",
    "DataError", "EmbeddingMatrix", "EpochMetrics", "FeatureConfig",
    "FormatError", "FusedVector", "GradCheckReport", "LayerGrads",
    "LayerParams", "MODEL_NAMES", "ModelParams", "OFFLINE_FEATURES",
    "ONLINE_FEATURES",
    "OfflineSignal", "Prediction", "RawPost", "SchemaFeature", "Segment",
    "SignalSpec", "StanceLabel", "TimeSlices", "TrainConfig", "TrainingError",
    "UnknownPolicy", "adamw_step", "adamw_update", "assemble_features",
    "assemble_matrix", "attribution_csv", "attribution_html", "backward",
    "balance_sample", "baseline_predict", "bce_loss", "chronological_split",
    "decision_scores", "embed_corpus", "encode_onehot",
    "enumerate_feature_sets", "explain_feature_groups", "explain_tokens",
    "fit_gnb", "fit_linear", "fit_svm_rbf", "forward", "generate",
    "gnb_log_posteriors", "grad_check", "hash_embed", "infer_schema",
    "ingest_records", "init_adamw_state", "init_params", "kkt_residuals",
    "labels_array", "load_any", "load_checkpoint", "load_schema",
    "parse_label", "planted_fusion_spec", "posts_in_slice",
    "predict", "predict_labels", "read_embeddings", "run_matrix",
    "sanitize_text", "save_baseline", "save_checkpoint", "save_model",
    "save_schema", "shapley_exact", "shapley_sampled", "softmax",
    "split_train_test", "subcorpus", "summarize", "train", "worker_count",
    "write_embeddings", "write_records", "write_split_manifest",
]
