"""Feature extraction, training, scoring, and serialization."""
from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from textveil.classify import (
    FeatureConfig,
    LR_FEATURES,
    NGRAM_FEATURES,
    fit_features,
    load_model,
    logit,
    predict,
    save_model,
    to_matrix,
    train_from_corpus,
    train_logistic,
    train_ngram_svm,
    vectorize,
)
from textveil.corpus import Document, Token

from conftest import make_doc

UNIGRAMS = FeatureConfig(word_ngram_orders=(1,))


def docs_of(*word_lists, labels=None):
    labels = labels or [None] * len(word_lists)
    return [make_doc(ws, lb) for ws, lb in zip(word_lists, labels)]


class TestFitFeatures:
    def test_idf_term_in_all_docs(self):
        docs = docs_of(["x"], ["x"], ["x"])
        space = fit_features(docs, UNIGRAMS)
        assert space.idf[space.index[("w", "x")]] == pytest.approx(1.0, abs=1e-12)

    def test_idf_term_in_one_of_three(self):
        docs = docs_of(["x"], ["y"], ["y"])
        space = fit_features(docs, UNIGRAMS)
        got = space.idf[space.index[("w", "x")]]
        assert got == pytest.approx(math.log(2.0) + 1.0, abs=1e-12)

    def test_min_df_excludes_hapaxes(self):
        docs = docs_of(["x", "y"], ["y"])
        space = fit_features(
            docs, FeatureConfig(word_ngram_orders=(1,), min_df=2)
        )
        assert ("w", "x") not in space.index
        assert ("w", "y") in space.index

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            fit_features([], UNIGRAMS)

    def test_bigrams_and_char_grams_distinct(self):
        docs = docs_of(["ab", "cd"])
        space = fit_features(
            docs,
            FeatureConfig(word_ngram_orders=(1, 2), char_ngram_orders=(2,)),
        )
        keys = set(space.index)
        assert ("w", "ab") in keys
        assert ("w", "ab\x00cd") in keys  # bigram joined on a non-space byte
        assert ("c", "ab") in keys  # char bigram of "ab cd"
        assert ("c", "b ") in keys  # char grams cross token gaps

    def test_word_ngrams_cannot_collide_with_split_surfaces(self):
        # A surface containing a space (from the space heuristic) must not
        # alias the bigram of the two words it looks like.
        d1 = docs_of([Token("a b").surface])  # single token "a b"
        d2 = docs_of(["a", "b"])
        space1 = fit_features(d1, FeatureConfig(word_ngram_orders=(1, 2)))
        space2 = fit_features(d2, FeatureConfig(word_ngram_orders=(1, 2)))
        assert ("w", "a b") in space1.index
        assert ("w", "a\x00b") in space2.index
        assert ("w", "a b") not in space2.index


class TestVectorize:
    def test_oov_only_doc_is_zero_vector(self):
        space = fit_features(docs_of(["x"]), UNIGRAMS)
        vec = vectorize(space, make_doc(["zzz"]))
        assert vec.indices.size == 0

    def test_single_known_token_is_unit(self):
        space = fit_features(docs_of(["x"]), UNIGRAMS)
        vec = vectorize(space, make_doc(["x"]))
        assert vec.values.tolist() == [1.0]

    def test_sublinear_two_feature_hand_value(self):
        # tf = (2, 1) with idf = (1, 1): sublinear weights (1+ln2, 1),
        # then L2 normalization.
        docs = docs_of(["x", "y"], ["x", "y"], ["x", "y"])  # idf = 1 for both
        space = fit_features(
            docs, FeatureConfig(word_ngram_orders=(1,), sublinear_tf=True)
        )
        vec = vectorize(space, make_doc(["x", "x", "y"]))
        wx, wy = 1.0 + math.log(2.0), 1.0
        norm = math.hypot(wx, wy)
        by_key = dict(zip(vec.indices.tolist(), vec.values.tolist()))
        assert by_key[space.index[("w", "x")]] == pytest.approx(wx / norm, abs=1e-12)
        assert by_key[space.index[("w", "y")]] == pytest.approx(wy / norm, abs=1e-12)

    @given(
        st.lists(
            st.lists(st.sampled_from("abcde"), min_size=1, max_size=6).map(
                lambda cs: "".join(cs)
            ),
            max_size=12,
        )
    )
    @settings(max_examples=200, deadline=None)
    def test_norm_zero_or_one(self, words):
        space = fit_features(docs_of(["aa", "bb"], ["bb", "cc"]), LR_FEATURES)
        vec = vectorize(space, make_doc(words) if words else make_doc(["q"]))
        norm = float(np.sqrt(np.sum(vec.values**2)))
        assert norm == pytest.approx(0.0, abs=1e-12) or norm == pytest.approx(
            1.0, abs=1e-12
        )


def _xor_free_training_set():
    """Linearly separable two-class doc set."""
    pos = [["good", "fine", "nice"], ["good", "nice"], ["fine", "good"]]
    neg = [["bad", "awful", "poor"], ["bad", "poor"], ["awful", "bad"]]
    docs = docs_of(*pos, *neg, labels=["p"] * 3 + ["n"] * 3)
    space = fit_features(docs, UNIGRAMS)
    X = to_matrix(space, docs)
    y = ["p"] * 3 + ["n"] * 3
    return docs, space, X, y


class TestTrainers:
    @pytest.mark.parametrize("train", [train_logistic, train_ngram_svm])
    def test_symmetric_data_zero_bias(self, train):
        docs = docs_of(["x"], ["y"], labels=["p", "n"])
        space = fit_features(docs, UNIGRAMS)
        X = to_matrix(space, docs)
        model = train(X, ["p", "n"])
        assert abs(model.bias) < 1e-9

    @pytest.mark.parametrize("train", [train_logistic, train_ngram_svm])
    def test_separable_set_fully_learned(self, train):
        docs, space, X, y = _xor_free_training_set()
        model = train(X, y)
        assert all(predict(model, space, d) == d.label for d in docs)

    @pytest.mark.parametrize("train", [train_logistic, train_ngram_svm])
    def test_weight_sign_follows_positive_class(self, train):
        docs = docs_of(["up"], ["down"], labels=["hi", "lo"])
        space = fit_features(docs, UNIGRAMS)
        X = to_matrix(space, docs)
        model = train(X, ["hi", "lo"])
        w_up = model.weights[space.index[("w", "up")]]
        w_down = model.weights[space.index[("w", "down")]]
        if model.positive_label == "hi":
            assert w_up > 0 > w_down
        else:
            assert w_down > 0 > w_up

    @pytest.mark.parametrize("train", [train_logistic, train_ngram_svm])
    def test_single_class_rejected(self, train):
        docs = docs_of(["x"], ["y"], labels=["p", "p"])
        space = fit_features(docs, UNIGRAMS)
        with pytest.raises(ValueError):
            train(to_matrix(space, docs), ["p", "p"])

    def test_logistic_loss_monotone(self):
        _, _, X, y = _xor_free_training_set()
        model = train_logistic(X, y)
        losses = model.loss_history
        assert len(losses) >= 2
        assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))

    def test_logistic_deterministic(self):
        _, _, X, y = _xor_free_training_set()
        m1, m2 = train_logistic(X, y), train_logistic(X, y)
        assert np.array_equal(m1.weights, m2.weights) and m1.bias == m2.bias

    def test_svm_deterministic_full_batch(self):
        _, _, X, y = _xor_free_training_set()
        m1 = train_ngram_svm(X, y, seed=3)
        m2 = train_ngram_svm(X, y, seed=4)
        # Full-batch subgradient descent ignores the seed entirely.
        assert np.array_equal(m1.weights, m2.weights) and m1.bias == m2.bias

    def test_svm_seeded_minibatch_reproducible(self):
        _, _, X, y = _xor_free_training_set()
        m1 = train_ngram_svm(X, y, seed=3, batch_size=2)
        m2 = train_ngram_svm(X, y, seed=3, batch_size=2)
        assert np.array_equal(m1.weights, m2.weights) and m1.bias == m2.bias


class TestScoring:
    def test_opposite_logits(self):
        docs, space, X, y = _xor_free_training_set()
        model = train_logistic(X, y)
        for doc in docs:
            a, b = model.label_set
            assert logit(model, space, doc, a) == -logit(model, space, doc, b)

    def test_tie_goes_to_positive_label(self):
        docs, space, X, y = _xor_free_training_set()
        model = train_logistic(X, y)
        zeroed = type(model)(
            weights=np.zeros_like(model.weights),
            bias=0.0,
            kind=model.kind,
            label_set=model.label_set,
            positive_label=model.positive_label,
            loss_history=(),
        )
        assert predict(zeroed, space, docs[0]) == model.positive_label

    def test_prediction_scale_invariant(self):
        docs, space, X, y = _xor_free_training_set()
        model = train_logistic(X, y)
        scaled = type(model)(
            weights=model.weights * 7.3,
            bias=model.bias * 7.3,
            kind=model.kind,
            label_set=model.label_set,
            positive_label=model.positive_label,
            loss_history=(),
        )
        for doc in docs:
            assert predict(model, space, doc) == predict(scaled, space, doc)

    def test_unknown_label_rejected(self):
        docs, space, X, y = _xor_free_training_set()
        model = train_logistic(X, y)
        with pytest.raises(ValueError):
            logit(model, space, docs[0], "mystery")


class TestSerialization:
    @pytest.mark.parametrize("kind,features", [
        ("logistic", LR_FEATURES),
        ("hinge", NGRAM_FEATURES),
    ])
    def test_round_trip_bitexact(self, tmp_path, kind, features):
        docs = docs_of(
            ["alpha", "beta", "gamma"],
            ["delta", "beta"],
            ["alpha", "epsilon"],
            ["zeta", "delta"],
            labels=["p", "n", "p", "n"],
        )
        model, space = train_from_corpus(docs, features, kind)
        path = tmp_path / "m.json"
        save_model(path, model, space)
        loaded_model, loaded_space = load_model(path)
        assert np.array_equal(loaded_model.weights, model.weights)
        assert loaded_model.bias == model.bias
        assert loaded_space.index == space.index
        assert np.array_equal(loaded_space.idf, space.idf)
        for doc in docs:
            assert logit(loaded_model, loaded_space, doc, "p") == logit(
                model, space, doc, "p"
            )

    def test_rewrite_is_deterministic(self, tmp_path):
        docs = docs_of(["a", "b"], ["c"], labels=["p", "n"])
        model, space = train_from_corpus(docs, LR_FEATURES, "logistic")
        p1, p2 = tmp_path / "1.json", tmp_path / "2.json"
        save_model(p1, model, space)
        save_model(p2, model, space)
        assert p1.read_bytes() == p2.read_bytes()

    def test_version_check(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"format": "something-else", "version": 1}')
        with pytest.raises(ValueError):
            load_model(path)


class TestDocumentEquivalence:
    def test_char_grams_include_sentinels(self):
        # Char n-grams run over the space-joined surfaces, sentinels included.
        docs = [
            Document.from_tokens("a", (Token("<user>", "mention_special"), Token("hi")), "p"),
            make_doc(["bye", "now"], "n"),
        ]
        space = fit_features(
            docs, FeatureConfig(word_ngram_orders=(1,), char_ngram_orders=(6,))
        )
        assert ("c", "<user>") in space.index
