"""Build a miniature masked-LM checkpoint locally, for tests and demos.

The repository cannot assume a model hub is reachable, so everything the
adapter needs can be constructed on the spot: a WordPiece tokenizer over
a small hand-picked vocabulary and a randomly initialized BERT-style
encoder with a language-modeling head, saved in the standard checkpoint
layout that AdapterConfig.model points at.

The weights are random -- the miniature knows nothing about language --
but construction is seeded, so a given (seed, shape) always yields the
same checkpoint and every response derived from it is reproducible.  The
vocabulary carries full single-character coverage (letters and digits as
both word starts and continuations), so no word ever degrades to [UNK],
and common suffix pieces so that ordinary inflected words split into
several pieces, which is exactly the case the word/piece pooling logic
has to handle.
"""
from __future__ import annotations

import string
from pathlib import Path

SPECIALS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]")

PUNCTUATION = tuple(".,!?;:'\"-#@&()")

SUFFIX_PIECES = ("##s", "##es", "##ed", "##ing", "##ly", "##er", "##est", "##ness", "##ion", "##y")

COMMON_WORDS = (
    # function words
    "the", "a", "an", "and", "or", "but", "if", "then", "of", "to", "in",
    "on", "at", "by", "for", "with", "from", "as", "is", "are", "was",
    "were", "be", "been", "am", "it", "we", "they", "you", "he", "she",
    "this", "that", "these", "those", "not", "no", "yes", "so", "too",
    "very", "just", "only", "all", "some", "any", "each", "both", "few",
    "more", "most", "other", "over", "under", "about", "after", "before",
    # verbs
    "have", "has", "had", "do", "does", "did", "can", "will", "would",
    "should", "could", "may", "might", "must", "go", "goes", "went",
    "get", "got", "make", "made", "know", "knew", "think", "thought",
    "take", "took", "see", "saw", "come", "came", "want", "need", "feel",
    "felt", "look", "give", "gave", "find", "found", "tell", "told",
    "ask", "try", "call", "keep", "kept", "let", "put", "say", "said",
    "jog", "run", "walk", "talk", "read", "work", "play", "rest", "cook",
    "bake", "love", "hate", "help", "stop", "start", "end", "jumps",
    # nouns
    "time", "day", "week", "year", "morning", "night", "home", "house",
    "job", "school", "coffee", "tea", "food", "water", "friend", "family",
    "people", "person", "world", "city", "town", "road", "car", "bike",
    "game", "music", "book", "word", "name", "thing", "way", "life",
    "hand", "eye", "head", "heart", "dog", "cat", "bird", "tree", "rain",
    "sun", "snow", "fox",
    # adjectives
    "good", "bad", "new", "old", "great", "small", "big", "long", "short",
    "high", "low", "early", "late", "happy", "sad", "fast", "slow", "hot",
    "cold", "nice", "fine", "real", "sure", "free", "full", "easy",
    "hard", "quick", "brown", "lazy", "daily",
)


def miniature_vocabulary() -> list[str]:
    """Deterministic WordPiece vocabulary, specials first."""
    chars = tuple(string.digits) + tuple(string.ascii_lowercase)
    entries: list[str] = []
    seen: set[str] = set()
    for group in (
        SPECIALS,
        PUNCTUATION,
        chars,
        tuple("##" + c for c in chars),
        SUFFIX_PIECES,
        COMMON_WORDS,
    ):
        for entry in group:
            if entry not in seen:
                entries.append(entry)
                seen.add(entry)
    return entries


def miniature_tokenizer(vocabulary: list[str] | None = None):
    """Lowercasing WordPiece tokenizer over the miniature vocabulary."""
    from tokenizers import Tokenizer, normalizers, pre_tokenizers, processors
    from tokenizers.models import WordPiece
    from transformers import BertTokenizerFast

    words = vocabulary if vocabulary is not None else miniature_vocabulary()
    vocab = {w: i for i, w in enumerate(words)}
    backend = Tokenizer(WordPiece(vocab=vocab, unk_token="[UNK]"))
    backend.normalizer = normalizers.BertNormalizer(lowercase=True)
    backend.pre_tokenizer = pre_tokenizers.BertPreTokenizer()
    backend.post_processor = processors.BertProcessing(
        sep=("[SEP]", vocab["[SEP]"]), cls=("[CLS]", vocab["[CLS]"])
    )
    return BertTokenizerFast(
        tokenizer_object=backend,
        unk_token="[UNK]",
        sep_token="[SEP]",
        pad_token="[PAD]",
        cls_token="[CLS]",
        mask_token="[MASK]",
        do_lower_case=True,
    )


def build_miniature(
    out_dir: str | Path,
    seed: int = 0,
    hidden_size: int = 32,
    layers: int = 4,
    heads: int = 4,
    intermediate_size: int = 64,
    max_positions: int = 128,
) -> Path:
    """Write a ready-to-serve checkpoint directory and return its path."""
    import torch
    from transformers import BertConfig, BertForMaskedLM

    if hidden_size % heads:
        raise ValueError("hidden_size must divide evenly across heads")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tokenizer = miniature_tokenizer()
    config = BertConfig(
        vocab_size=tokenizer.vocab_size,
        hidden_size=hidden_size,
        num_hidden_layers=layers,
        num_attention_heads=heads,
        intermediate_size=intermediate_size,
        max_position_embeddings=max_positions,
        type_vocab_size=2,
    )
    torch.manual_seed(seed)
    model = BertForMaskedLM(config)
    model.eval()
    model.save_pretrained(out)
    tokenizer.save_pretrained(out)
    return out
