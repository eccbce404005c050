"""Linear bag-of-ngram classifiers trained from scratch.

Two feature recipes cover the usual author-profiling baselines: word
uni+bigram tf-idf for logistic regression, and word uni+bigram plus
character hexagram sublinear tf-idf for a linear hinge-loss model.
Optimizers are deliberately hand-rolled: full-batch gradient descent
with backtracking line search for the logistic model, and projected
subgradient descent for the hinge model.  Both are deterministic.
"""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import Document

MODEL_FORMAT = "textveil-model"
MODEL_VERSION = 1

# Word n-grams are joined with NUL so a surface that itself contains a
# space can never collide with a higher-order gram.
_WORD_SEP = "\x00"


@dataclass(frozen=True)
class FeatureConfig:
    word_ngram_orders: tuple[int, ...] = (1, 2)
    char_ngram_orders: tuple[int, ...] = ()
    sublinear_tf: bool = False
    min_df: int = 1

    def __post_init__(self) -> None:
        if not self.word_ngram_orders and not self.char_ngram_orders:
            raise ValueError("at least one n-gram order is required")
        for order in (*self.word_ngram_orders, *self.char_ngram_orders):
            if order < 1:
                raise ValueError("n-gram orders must be >= 1")
        if self.min_df < 1:
            raise ValueError("min_df must be >= 1")


LR_FEATURES = FeatureConfig(word_ngram_orders=(1, 2))
NGRAM_FEATURES = FeatureConfig(
    word_ngram_orders=(1, 2), char_ngram_orders=(6,), sublinear_tf=True
)

FeatureKey = tuple[str, str]


def _iter_ngrams(doc: Document, config: FeatureConfig) -> Iterable[FeatureKey]:
    surfaces = [t.surface for t in doc.tokens]
    for order in config.word_ngram_orders:
        for i in range(len(surfaces) - order + 1):
            yield ("w", _WORD_SEP.join(surfaces[i : i + order]))
    if config.char_ngram_orders:
        # Char n-grams run over the space-joined token sequence, sentinels
        # and punctuation included, so they see token transitions too.
        joined = " ".join(surfaces)
        for order in config.char_ngram_orders:
            for i in range(len(joined) - order + 1):
                yield ("c", joined[i : i + order])


@dataclass
class FeatureSpace:
    """Frozen vocabulary with dense ids and per-feature idf weights."""

    index: dict[FeatureKey, int]
    idf: np.ndarray
    config: FeatureConfig

    @property
    def size(self) -> int:
        return len(self.index)


def fit_features(docs: Sequence[Document], config: FeatureConfig) -> FeatureSpace:
    """Build the feature space from training documents.

    idf(t) = ln((1 + n) / (1 + df(t))) + 1 over n documents; features seen
    in fewer than min_df documents are dropped.  Feature ids follow the
    sorted order of (kind, gram) keys, so the space is deterministic.
    """
    if not docs:
        raise ValueError("cannot fit features on an empty document list")
    df: Counter[FeatureKey] = Counter()
    for doc in docs:
        df.update(set(_iter_ngrams(doc, config)))
    vocab = sorted(k for k, count in df.items() if count >= config.min_df)
    index = {key: i for i, key in enumerate(vocab)}
    n = len(docs)
    idf = np.array(
        [math.log((1 + n) / (1 + df[key])) + 1.0 for key in vocab], dtype=np.float64
    )
    return FeatureSpace(index, idf, config)


@dataclass(frozen=True)
class SparseVector:
    """L2-normalized tf-idf vector; indices strictly increasing."""

    indices: np.ndarray
    values: np.ndarray

    def dot(self, dense: np.ndarray) -> float:
        if len(self.indices) == 0:
            return 0.0
        return float(dense[self.indices] @ self.values)


def vectorize(space: FeatureSpace, doc: Document) -> SparseVector:
    """tf-idf vector of a document, L2-normalized.

    Out-of-vocabulary n-grams contribute nothing.  With sublinear_tf the
    term frequency is 1 + ln(tf).  A document with no known features maps
    to the zero vector.
    """
    counts: Counter[int] = Counter()
    index = space.index
    for key in _iter_ngrams(doc, space.config):
        fid = index.get(key)
        if fid is not None:
            counts[fid] += 1
    if not counts:
        return SparseVector(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64))
    indices = np.array(sorted(counts), dtype=np.int64)
    tf = np.array([counts[i] for i in indices], dtype=np.float64)
    if space.config.sublinear_tf:
        tf = 1.0 + np.log(tf)
    values = tf * space.idf[indices]
    norm = float(np.sqrt(values @ values))
    if norm > 0.0:
        values = values / norm
    return SparseVector(indices, values)


def to_matrix(space: FeatureSpace, docs: Sequence[Document]) -> sp.csr_matrix:
    """Stack vectorized documents into a CSR matrix for training."""
    data: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    indptr = [0]
    for doc in docs:
        vec = vectorize(space, doc)
        cols.append(vec.indices)
        data.append(vec.values)
        indptr.append(indptr[-1] + len(vec.indices))
    if not docs:
        return sp.csr_matrix((0, space.size))
    return sp.csr_matrix(
        (
            np.concatenate(data) if data else np.empty(0),
            np.concatenate(cols) if cols else np.empty(0, dtype=np.int64),
            np.array(indptr),
        ),
        shape=(len(docs), space.size),
    )


@dataclass
class LinearClassifier:
    """Binary linear model over a feature space.

    The decision score for the positive label is w.x + b; the negative
    label scores its negation.  A tie (score exactly 0) predicts the
    positive label.  positive_label is the lexicographically larger of
    the two training labels.
    """

    weights: np.ndarray
    bias: float
    kind: str
    label_set: tuple[str, str]
    positive_label: str
    loss_history: list[float] = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.kind not in ("logistic", "hinge"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if len(self.label_set) != 2:
            raise ValueError("binary classifier needs exactly two labels")
        if self.positive_label not in self.label_set:
            raise ValueError("positive_label must be in label_set")

    def decision_score(self, vec: SparseVector) -> float:
        return vec.dot(self.weights) + self.bias


def logit(
    model: LinearClassifier, space: FeatureSpace, doc: Document, label: str
) -> float:
    """Raw decision score o_label(doc); the two labels score +/- the same value."""
    if label not in model.label_set:
        raise ValueError(f"label {label!r} not in model label set")
    score = model.decision_score(vectorize(space, doc))
    return score if label == model.positive_label else -score


def predict(model: LinearClassifier, space: FeatureSpace, doc: Document) -> str:
    score = model.decision_score(vectorize(space, doc))
    return label_for_score(model, score)


def label_for_score(model: LinearClassifier, positive_score: float) -> str:
    """Map the positive-label decision score to a label; ties go positive."""
    if positive_score >= 0.0:
        return model.positive_label
    neg = model.label_set[0] if model.label_set[1] == model.positive_label else model.label_set[1]
    return neg


def _binary_targets(labels: Sequence[str]) -> tuple[np.ndarray, tuple[str, str], str]:
    classes = sorted(set(labels))
    if len(classes) != 2:
        raise ValueError(f"expected exactly 2 classes, got {classes!r}")
    neg, pos = classes
    t = np.array([1.0 if y == pos else -1.0 for y in labels])
    return t, (neg, pos), pos


def train_logistic(
    X: sp.spmatrix,
    labels: Sequence[str],
    l2_inverse_strength: float = 1.0,
    max_iter: int = 1000,
    tol: float = 1e-6,
) -> LinearClassifier:
    """L2-regularized logistic regression by full-batch gradient descent.

    Minimizes sum_i log(1 + exp(-t_i (x_i.w + b))) + ||w||^2 / (2C) with the
    bias unregularized.  Backtracking line search (Armijo) guarantees a
    monotonically non-increasing loss.  Stops when the gradient norm drops
    to tol or after max_iter iterations.
    """
    if l2_inverse_strength <= 0:
        raise ValueError("l2_inverse_strength must be positive")
    X = sp.csr_matrix(X)
    n, m = X.shape
    if n != len(labels):
        raise ValueError("row count and label count differ")
    t, label_set, pos = _binary_targets(labels)
    C = l2_inverse_strength
    Xt = X.T.tocsr()

    w = np.zeros(m)
    b = 0.0

    def loss_at(w_: np.ndarray, b_: float) -> float:
        margins = t * (X @ w_ + b_)
        return float(np.logaddexp(0.0, -margins).sum() + (w_ @ w_) / (2.0 * C))

    loss = loss_at(w, b)
    history = [loss]
    step = 1.0
    for _ in range(max_iter):
        margins = t * (X @ w + b)
        # d/dz log(1+exp(-t z)) = -t * sigmoid(-t z)
        s = -t / (1.0 + np.exp(margins))
        grad_w = Xt @ s + w / C
        grad_b = float(s.sum())
        gnorm_sq = float(grad_w @ grad_w) + grad_b * grad_b
        if math.sqrt(gnorm_sq) <= tol:
            break
        step = min(step * 2.0, 1e8)
        accepted = False
        for _ in range(60):
            w_new = w - step * grad_w
            b_new = b - step * grad_b
            new_loss = loss_at(w_new, b_new)
            if new_loss <= loss - 1e-4 * step * gnorm_sq:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        w, b, loss = w_new, b_new, new_loss
        history.append(loss)
    return LinearClassifier(w, b, "logistic", label_set, pos, history)


def train_ngram_svm(
    X: sp.spmatrix,
    labels: Sequence[str],
    C: float = 1.0,
    seed: int = 0,
    max_iter: int = 2000,
    batch_size: int = 0,
) -> LinearClassifier:
    """Linear hinge-loss model by projected subgradient descent.

    Minimizes (lambda/2) ||w||^2 + mean_i max(0, 1 - t_i (x_i.w + b)) with
    lambda = 1 / (C n), following the classic primal SVM schedule: step
    1 / (lambda (t+1)) on w with projection onto the ball of radius
    1/sqrt(lambda), and step 1 / (t+1) on the unregularized bias.  With
    batch_size = 0 every step uses the full batch and the run is
    deterministic with no randomness at all; a positive batch_size samples
    mini-batches from a generator seeded by `seed`, which is equally
    deterministic for a fixed seed.
    """
    if C <= 0:
        raise ValueError("C must be positive")
    X = sp.csr_matrix(X)
    n, m = X.shape
    if n != len(labels):
        raise ValueError("row count and label count differ")
    t, label_set, pos = _binary_targets(labels)
    lam = 1.0 / (C * n)
    radius = 1.0 / math.sqrt(lam)
    rng = np.random.default_rng(seed)

    w = np.zeros(m)
    b = 0.0
    history: list[float] = []
    for it in range(max_iter):
        if batch_size and batch_size < n:
            rows = rng.integers(0, n, size=batch_size)
            Xb, tb = X[rows], t[rows]
        else:
            Xb, tb = X, t
        margins = tb * (Xb @ w + b)
        violating = margins < 1.0
        k = Xb.shape[0]
        if violating.any():
            coef = np.where(violating, tb, 0.0) / k
            grad_w = lam * w - Xb.T @ coef
            grad_b = -float(coef.sum())
        else:
            grad_w = lam * w
            grad_b = 0.0
        w = w - grad_w / (lam * (it + 1))
        b = b - grad_b / (it + 1)
        wnorm = float(np.sqrt(w @ w))
        if wnorm > radius:
            w = w * (radius / wnorm)
        if it % 50 == 0 or it == max_iter - 1:
            full_margins = t * (X @ w + b)
            hinge = np.maximum(0.0, 1.0 - full_margins).mean()
            history.append(float(lam / 2.0 * (w @ w) + hinge))
    return LinearClassifier(w, b, "hinge", label_set, pos, history)


def train_from_corpus(
    docs: Sequence[Document],
    config: FeatureConfig,
    kind: str,
    C: float = 1.0,
    seed: int = 0,
) -> tuple[LinearClassifier, FeatureSpace]:
    """Fit features on docs and train a classifier of the given kind."""
    labels = []
    for doc in docs:
        if doc.label is None:
            raise ValueError("training documents must be labeled")
        labels.append(doc.label)
    space = fit_features(docs, config)
    X = to_matrix(space, docs)
    if kind == "logistic":
        model = train_logistic(X, labels, l2_inverse_strength=C)
    elif kind == "hinge":
        model = train_ngram_svm(X, labels, C=C, seed=seed)
    else:
        raise ValueError(f"unknown model kind {kind!r}")
    return model, space


def save_model(path: str | Path, model: LinearClassifier, space: FeatureSpace) -> None:
    """Serialize model + feature space to versioned JSON.

    Floats go through json's repr round-trip, so loading reproduces the
    exact weights bit for bit.
    """
    payload = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "kind": model.kind,
        "label_set": list(model.label_set),
        "positive_label": model.positive_label,
        "bias": model.bias,
        "weights": model.weights.tolist(),
        "idf": space.idf.tolist(),
        "features": [[kind, gram] for kind, gram in _keys_in_order(space)],
        "feature_config": {
            "word_ngram_orders": list(space.config.word_ngram_orders),
            "char_ngram_orders": list(space.config.char_ngram_orders),
            "sublinear_tf": space.config.sublinear_tf,
            "min_df": space.config.min_df,
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, ensure_ascii=False)
        fh.write("\n")


def _keys_in_order(space: FeatureSpace) -> list[FeatureKey]:
    keys: list[FeatureKey | None] = [None] * space.size
    for key, i in space.index.items():
        keys[i] = key
    return keys  # type: ignore[return-value]


def load_model(path: str | Path) -> tuple[LinearClassifier, FeatureSpace]:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: bad model file: {exc}") from exc
    if payload.get("format") != MODEL_FORMAT:
        raise ValueError(f"{path}: not a {MODEL_FORMAT} file")
    if payload.get("version") != MODEL_VERSION:
        raise ValueError(f"{path}: unsupported model version {payload.get('version')!r}")
    cfg = payload["feature_config"]
    config = FeatureConfig(
        tuple(cfg["word_ngram_orders"]),
        tuple(cfg["char_ngram_orders"]),
        cfg["sublinear_tf"],
        cfg["min_df"],
    )
    index = {(kind, gram): i for i, (kind, gram) in enumerate(payload["features"])}
    space = FeatureSpace(index, np.array(payload["idf"], dtype=np.float64), config)
    model = LinearClassifier(
        np.array(payload["weights"], dtype=np.float64),
        float(payload["bias"]),
        payload["kind"],
        tuple(payload["label_set"]),
        payload["positive_label"],
    )
    if len(model.weights) != space.size:
        raise ValueError(f"{path}: weight count does not match feature count")
    return model, space
