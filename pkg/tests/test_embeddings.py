"""Embedding store: neighbor search, sentence encoding, file format."""
from __future__ import annotations

import math

import numpy as np
import pytest

from textveil.embeddings import EmbeddingStore, cosine, load_store, save_store


def unit(*xs):
    v = np.array(xs, dtype=np.float64)
    return v / np.linalg.norm(v)


def store_of(entries):
    words = list(entries)
    return EmbeddingStore(words, np.array([entries[w] for w in words], dtype=float))


@pytest.fixture
def hand_store():
    # Cosines against "a" are exactly: b=1/sqrt(2), c=0, d=-1, e ~= 0.9487.
    return store_of(
        {
            "a": [1.0, 0.0],
            "b": [1.0, 1.0],
            "c": [0.0, 1.0],
            "d": [-1.0, 0.0],
            "e": [3.0, 1.0],
        }
    )


class TestNeighbors:
    def test_hand_computed_ordering(self, hand_store):
        got = hand_store.neighbors("a", n=10, delta=-2.0)
        words = [w for w, _ in got]
        assert words == ["e", "b", "c", "d"]
        sims = dict(got)
        assert sims["b"] == pytest.approx(1 / math.sqrt(2), abs=1e-12)
        assert sims["e"] == pytest.approx(3 / math.sqrt(10), abs=1e-12)

    def test_delta_strictly_greater(self, hand_store):
        # c has cosine exactly 0 against a; delta=0 must exclude it.
        words = [w for w, _ in hand_store.neighbors("a", n=10, delta=0.0)]
        assert words == ["e", "b"]

    def test_delta_one_no_duplicates_empty(self, hand_store):
        assert hand_store.neighbors("a", n=10, delta=1.0) == []

    def test_oov_empty(self, hand_store):
        assert hand_store.neighbors("zzz") == []

    def test_self_excluded(self, hand_store):
        assert "a" not in [w for w, _ in hand_store.neighbors("a", n=10, delta=-2.0)]

    def test_n_truncates(self, hand_store):
        assert len(hand_store.neighbors("a", n=2, delta=-2.0)) == 2

    def test_tie_broken_by_word(self):
        store = store_of({"q": [1.0, 0.0], "zz": [2.0, 0.0], "aa": [3.0, 0.0]})
        words = [w for w, _ in store.neighbors("q", n=5, delta=0.5)]
        assert words == ["aa", "zz"]


class TestSentenceEncoder:
    def test_mean_of_known_words(self, hand_store):
        enc = hand_store.encode_sentence(["a", "c"])
        expect = unit(1.0, 1.0)  # mean of the two unit vectors, renormalized
        assert np.allclose(enc, expect, atol=1e-12)

    def test_unknown_words_skipped(self, hand_store):
        known = hand_store.encode_sentence(["a"])
        mixed = hand_store.encode_sentence(["a", "unknown"])
        assert np.allclose(known, mixed, atol=1e-12)

    def test_all_unknown_is_zero(self, hand_store):
        assert np.allclose(hand_store.encode_sentence(["zz", "qq"]), 0.0)

    def test_unit_norm(self, hand_store):
        enc = hand_store.encode_sentence(["a", "b", "e"])
        assert np.linalg.norm(enc) == pytest.approx(1.0, abs=1e-12)


class TestCosine:
    def test_zero_vector_guard(self):
        assert cosine(np.zeros(3), np.ones(3)) == 0.0

    def test_self_similarity(self):
        v = np.array([1.0, 2.0, 3.0])
        assert cosine(v, v) == pytest.approx(1.0, abs=1e-12)


class TestStoreValidation:
    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError):
            store_of({"a": [0.0, 0.0, 0.0]})

    def test_duplicate_words_rejected(self):
        with pytest.raises(ValueError):
            EmbeddingStore(["a", "a"], np.ones((2, 3)))

    def test_count_mismatch_rejected(self):
        with pytest.raises(ValueError):
            EmbeddingStore(["a", "b"], np.ones((3, 2)))


class TestStoreFile:
    def test_round_trip_exact(self, tmp_path, hand_store):
        path = tmp_path / "vecs.txt"
        save_store(path, hand_store)
        loaded = load_store(path)
        for word in ["a", "b", "c", "d", "e"]:
            assert np.array_equal(loaded.vector(word), hand_store.vector(word))

    def test_format_is_word_then_decimals(self, tmp_path, hand_store):
        path = tmp_path / "vecs.txt"
        save_store(path, hand_store)
        first = path.read_text().splitlines()[0].split(" ")
        assert first[0].isalpha() and len(first) == 3
        float(first[1]), float(first[2])

    def test_duplicate_word_rejected(self, tmp_path):
        path = tmp_path / "dup.txt"
        path.write_text("a 1.0 0.0\na 0.0 1.0\n")
        with pytest.raises(ValueError):
            load_store(path)

    def test_malformed_line_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("a 1.0 junk\n")
        with pytest.raises(ValueError):
            load_store(path)
