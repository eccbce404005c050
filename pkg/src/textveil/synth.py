"""Synthetic tweet corpora with a controllable domain-shift knob.

Each of two author classes leans on its own small set of marker words;
everything else is shared filler.  A paired "target" corpus is drawn
from the same process except that each would-be marker emission is
diluted: with probability delta_shift it degrades to a filler word.  At
delta_shift = 0 the two corpora are statistically identical; raising it
weakens the class signal in the target domain only, which is exactly the
substitute-vs-target mismatch transferability experiments need.

Every marker gets a planted near-synonym (cosine ~0.85 in the generated
embedding store) that is class-neutral: synonyms are sprinkled into
tweets of both classes as ordinary filler.  Half the markers carry an
"ing" suffix so a part-of-speech check can tell them apart from their
synonyms; the other half cannot be distinguished that way, which keeps
checked and unchecked attacks measurably different.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import Corpus, RawTweet, build_corpus
from .embeddings import EmbeddingStore

_PUNCT_CHOICES = (".", "!", "?")


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    labels: tuple[str, str] = ("a", "b")
    authors_per_class: int = 30
    tweets_per_author: int = 20
    tokens_per_tweet: int = 10
    tweets_per_doc: int = 5
    vocab_size: int = 300
    markers_per_class: int = 10
    marker_rate: float = 0.85
    synonym_filler_rate: float = 0.25
    delta_shift: float = 0.0
    embedding_dim: int = 32
    mention_rate: float = 0.08
    hashtag_rate: float = 0.08
    punct_rate: float = 0.15

    def __post_init__(self) -> None:
        if len(self.labels) != 2 or self.labels[0] == self.labels[1]:
            raise ValueError("labels must be two distinct strings")
        for name in (
            "authors_per_class",
            "tweets_per_author",
            "tokens_per_tweet",
            "tweets_per_doc",
            "vocab_size",
            "markers_per_class",
        ):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        for name in (
            "marker_rate",
            "synonym_filler_rate",
            "mention_rate",
            "hashtag_rate",
            "punct_rate",
        ):
            if not (0.0 <= getattr(self, name) <= 1.0):
                raise ValueError(f"{name} must be in [0, 1]")
        if not (0.0 <= self.delta_shift <= 1.0):
            raise ValueError("delta_shift must be in [0, 1]")
        if self.embedding_dim < 8:
            raise ValueError("embedding_dim must be >= 8")


def marker_words(config: SynthConfig) -> dict[str, list[str]]:
    """Per-class marker surfaces.

    Odd-numbered markers end in "ing" so the default tagger classes them
    as verbs while their synonyms stay OTHER; even-numbered markers and
    their synonyms share a tag.
    """
    out: dict[str, list[str]] = {}
    for label in config.labels:
        words = []
        for i in range(config.markers_per_class):
            suffix = "ing" if i % 2 else ""
            words.append(f"{label}mark{i:02d}{suffix}")
        out[label] = words
    return out


def synonym_for(marker: str) -> str:
    """Planted near-synonym surface for a marker.

    "amark03" -> "asyn03", "amark01ing" -> "asyn01": no shared character
    6-gram with the marker, so substitution also disrupts char-ngram
    features, and never an "ing" ending, so the odd markers' verb tag is
    not preserved.
    """
    base = marker[: -len("ing")] if marker.endswith("ing") else marker
    return base.replace("mark", "syn", 1)


def filler_words(config: SynthConfig) -> list[str]:
    return [f"word{i:03d}" for i in range(config.vocab_size)]


@dataclass(frozen=True)
class SynthData:
    config: SynthConfig
    substitute_tweets: tuple[RawTweet, ...]
    target_tweets: tuple[RawTweet, ...]
    store: EmbeddingStore

    def substitute_corpus(self) -> Corpus:
        return build_corpus(
            self.substitute_tweets, "substitute", self.config.tweets_per_doc
        )

    def target_corpus(self) -> Corpus:
        return build_corpus(self.target_tweets, "target", self.config.tweets_per_doc)

    def vocabulary(self) -> list[str]:
        """Full word list, suitable as a toy language-model vocabulary."""
        markers = [w for words in marker_words(self.config).values() for w in words]
        synonyms = [synonym_for(w) for w in markers]
        return sorted(filler_words(self.config) + markers + synonyms)


def _build_store(config: SynthConfig, rng: np.random.Generator) -> EmbeddingStore:
    """Random unit vectors; each synonym sits at cosine ~0.85 to its marker.

    The synonym vector is marker + eps * u with u orthonormal to the
    marker, giving an exact cosine of 1/sqrt(1 + eps^2).  All other word
    pairs are independent draws, so at 32 dimensions nothing else crosses
    the 0.7 neighbour threshold except by vanishing chance.
    """
    eps = math.sqrt(1.0 / 0.85**2 - 1.0)
    words: list[str] = []
    vectors: list[np.ndarray] = []

    def unit(vec: np.ndarray) -> np.ndarray:
        return vec / np.linalg.norm(vec)

    for word in filler_words(config):
        words.append(word)
        vectors.append(unit(rng.standard_normal(config.embedding_dim)))
    for label in config.labels:
        for marker in marker_words(config)[label]:
            base = unit(rng.standard_normal(config.embedding_dim))
            words.append(marker)
            vectors.append(base)
            noise = rng.standard_normal(config.embedding_dim)
            noise -= (noise @ base) * base
            syn = unit(base + eps * unit(noise))
            words.append(synonym_for(marker))
            vectors.append(syn)
    return EmbeddingStore(words, np.stack(vectors))


def _tweet_text(
    config: SynthConfig,
    rng: np.random.Generator,
    label: str,
    markers: Sequence[str],
    synonyms: Sequence[str],
    fillers: Sequence[str],
    diluted: bool,
) -> str:
    """One tweet's raw text.

    Every random draw happens unconditionally so that corpora generated
    from the same seed differ only where the dilution gate actually
    fires; that keeps paired comparisons across delta_shift values tight.
    """
    k = config.tokens_per_tweet
    words = [fillers[i] for i in rng.integers(0, len(fillers), size=k)]

    syn_gate = rng.random()
    syn_slot = int(rng.integers(0, k))
    syn_idx = int(rng.integers(0, len(synonyms)))
    if syn_gate < config.synonym_filler_rate:
        words[syn_slot] = synonyms[syn_idx]

    marker_gate = rng.random()
    marker_slot = int(rng.integers(0, k))
    marker_idx = int(rng.integers(0, len(markers)))
    dilution_gate = rng.random()
    dilution_filler = fillers[int(rng.integers(0, len(fillers)))]
    if marker_gate < config.marker_rate:
        if diluted and dilution_gate < config.delta_shift:
            words[marker_slot] = dilution_filler
        else:
            words[marker_slot] = markers[marker_idx]

    hashtag_gate = rng.random()
    hashtag_slot = int(rng.integers(0, k))
    if hashtag_gate < config.hashtag_rate:
        words[hashtag_slot] = "#" + words[hashtag_slot]

    mention_gate = rng.random()
    mention_id = int(rng.integers(0, 1000))
    if mention_gate < config.mention_rate:
        words.insert(0, f"@user{mention_id:03d}")

    punct_gate = rng.random()
    punct_idx = int(rng.integers(0, len(_PUNCT_CHOICES)))
    text = " ".join(words)
    if punct_gate < config.punct_rate:
        text += " " + _PUNCT_CHOICES[punct_idx]
    return text


def _corpus_tweets(
    config: SynthConfig, rng: np.random.Generator, diluted: bool
) -> tuple[RawTweet, ...]:
    markers = marker_words(config)
    all_synonyms = [
        synonym_for(w) for label in config.labels for w in markers[label]
    ]
    fillers = filler_words(config)
    tweets: list[RawTweet] = []
    # Authors alternate classes so contiguous train/test splits stay balanced.
    for i in range(config.authors_per_class):
        for label in config.labels:
            author = f"{label}{i:03d}"
            for _ in range(config.tweets_per_author):
                text = _tweet_text(
                    config, rng, label, markers[label], all_synonyms, fillers, diluted
                )
                tweets.append(RawTweet(author, text, label))
    return tuple(tweets)


def generate(config: SynthConfig) -> SynthData:
    """Build the paired corpora and embedding store for one seed.

    Three independent child streams (store, substitute, target) hang off
    the config seed, so the substitute corpus is bit-identical across
    delta_shift values and only the target corpus moves.
    """
    store_ss, subst_ss, target_ss = np.random.SeedSequence(config.seed).spawn(3)
    store = _build_store(config, np.random.default_rng(store_ss))
    substitute = _corpus_tweets(config, np.random.default_rng(subst_ss), diluted=False)
    target = _corpus_tweets(config, np.random.default_rng(target_ss), diluted=True)
    return SynthData(config, substitute, target, store)
