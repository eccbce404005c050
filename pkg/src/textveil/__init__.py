"""textveil: lexical substitution against author-profiling classifiers.

The package covers the full loop: tweet ingestion and chunking, linear
bag-of-ngram classifiers trained from scratch, omission-score word
importance, greedy substitution attacks with pluggable candidate
generators, a wire protocol for language-model candidate providers,
quality metrics, synthetic benchmark corpora, a CLI, and an interactive
rewriting service.
"""

__version__ = "0.1.0"

from .corpus import (
    Corpus,
    Document,
    RawTweet,
    Token,
    build_corpus,
    chunk_author,
    detokenize,
    preprocess,
    sample_attack_set,
    split_corpus,
)
from .classify import (
    FeatureConfig,
    FeatureSpace,
    LinearClassifier,
    LR_FEATURES,
    NGRAM_FEATURES,
    fit_features,
    load_model,
    logit,
    predict,
    save_model,
    train_logistic,
    train_ngram_svm,
    vectorize,
)
from .attack import (
    AttackConfig,
    AttackProviders,
    AttackResult,
    Edit,
    ImportanceRanking,
    apply_edits,
    generate_candidates,
    omission_scores,
    run_attack,
    select_targets,
)
from .embeddings import EmbeddingStore, load_store, save_store
from .evaluation import (
    AttackReport,
    ReportGrid,
    accuracy,
    build_report,
    chance_level,
    encoding_f1,
    meteor,
)
from .lm_bridge import (
    Client,
    ProtocolError,
    ProviderError,
    ToyLanguageModel,
    start_server,
)
from .synth import SynthConfig, SynthData, generate

__all__ = [
    "__version__",
    "Corpus",
    "Document",
    "RawTweet",
    "Token",
    "build_corpus",
    "chunk_author",
    "detokenize",
    "preprocess",
    "sample_attack_set",
    "split_corpus",
    "FeatureConfig",
    "FeatureSpace",
    "LinearClassifier",
    "LR_FEATURES",
    "NGRAM_FEATURES",
    "fit_features",
    "load_model",
    "logit",
    "predict",
    "save_model",
    "train_logistic",
    "train_ngram_svm",
    "vectorize",
    "AttackConfig",
    "AttackProviders",
    "AttackResult",
    "Edit",
    "ImportanceRanking",
    "apply_edits",
    "generate_candidates",
    "omission_scores",
    "run_attack",
    "select_targets",
    "EmbeddingStore",
    "load_store",
    "save_store",
    "AttackReport",
    "ReportGrid",
    "accuracy",
    "build_report",
    "chance_level",
    "encoding_f1",
    "meteor",
    "Client",
    "ProtocolError",
    "ProviderError",
    "ToyLanguageModel",
    "start_server",
    "SynthConfig",
    "SynthData",
    "generate",
]
