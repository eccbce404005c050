"""Tweet ingestion, tokenization, author chunking, and split logic.

Preprocessing mirrors common author-profiling pipelines for microblog
text: lowercase everything, drop URLs, collapse @-mentions to a shared
sentinel, split hashtags into a marker plus the bare tag, and separate
leading/trailing punctuation into their own tokens.  Documents are
fixed-size chunks of an author's timeline so that one classifier input
aggregates up to 100 posts.
"""
from __future__ import annotations

import json
import math
import re
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

WORD = "word"
MENTION = "mention_special"
HASHTAG_MARKER = "hashtag_marker"
PUNCT = "punct"

TOKEN_KINDS = frozenset({WORD, MENTION, HASHTAG_MARKER, PUNCT})

MENTION_SENTINEL = "<user>"

DOC_STORE_FORMAT = "textveil-docs"
DOC_STORE_VERSION = 1

# A URL is any scheme://... span or a www.-prefixed span; both are removed
# outright rather than replaced with a sentinel.
_URL_RE = re.compile(r"(?:[a-z][a-z0-9+.\-]*://|www\.)\S*", re.IGNORECASE)
_MENTION_RE = re.compile(r"@\w+")
# "#tag" becomes "# tag"; a bare "#" is left alone.
_HASHTAG_RE = re.compile(r"#(?=\w)")


@dataclass(frozen=True)
class Token:
    surface: str
    kind: str = WORD

    def __post_init__(self) -> None:
        if not self.surface:
            raise ValueError("token surface must be non-empty")
        if self.kind not in TOKEN_KINDS:
            raise ValueError(f"unknown token kind: {self.kind!r}")
        if self.kind == MENTION and self.surface != MENTION_SENTINEL:
            raise ValueError("mention tokens must use the shared sentinel surface")


@dataclass(frozen=True)
class RawTweet:
    """One post from one author, with the author's attribute label."""

    author_id: str
    text: str
    label: str

    def __post_init__(self) -> None:
        if not self.author_id:
            raise ValueError("author_id must be non-empty")


@dataclass(frozen=True)
class Document:
    """A chunk of an author's timeline, already tokenized.

    tweet_boundaries holds the token offset at which each source tweet
    that contributed at least one token begins.  Offsets are strictly
    increasing, start at 0 when the document has tokens, and are always
    valid indexes into tokens.
    """

    author_id: str
    tokens: tuple[Token, ...]
    label: str | None
    tweet_boundaries: tuple[int, ...]

    def __post_init__(self) -> None:
        for a, b in zip(self.tweet_boundaries, self.tweet_boundaries[1:]):
            if b <= a:
                raise ValueError("tweet boundaries must be strictly increasing")
        if self.tweet_boundaries:
            if self.tweet_boundaries[0] != 0:
                raise ValueError("first tweet boundary must be 0")
            if self.tweet_boundaries[-1] >= len(self.tokens):
                raise ValueError("tweet boundary past end of tokens")
        elif self.tokens:
            raise ValueError("non-empty document needs at least one boundary")

    @classmethod
    def from_tokens(
        cls, author_id: str, tokens: Sequence[Token], label: str | None = None
    ) -> "Document":
        toks = tuple(tokens)
        return cls(author_id, toks, label, (0,) if toks else ())

    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]


@dataclass(frozen=True)
class Corpus:
    documents: tuple[Document, ...]
    label_set: tuple[str, ...]
    name: str

    def __post_init__(self) -> None:
        known = set(self.label_set)
        for doc in self.documents:
            if doc.label is not None and doc.label not in known:
                raise ValueError(f"document label {doc.label!r} not in label set")

    def __len__(self) -> int:
        return len(self.documents)


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def _punct_token(ch: str) -> Token:
    # Token kind must be a pure function of the surface or re-tokenizing
    # detokenized output would reclassify tokens; "#" is always a marker.
    if ch == "#":
        return Token("#", HASHTAG_MARKER)
    return Token(ch, PUNCT)


def _split_piece(piece: str) -> list[Token]:
    """Split one whitespace-delimited piece into tokens.

    Leading and trailing punctuation characters peel off one at a time
    into single-character tokens; interior punctuation (contractions,
    hyphens, "e.g.") stays inside the word.  The mention sentinel and the
    hashtag marker are never split.
    """
    if piece == MENTION_SENTINEL:
        return [Token(MENTION_SENTINEL, MENTION)]
    if piece == "#":
        return [Token("#", HASHTAG_MARKER)]
    leading: list[Token] = []
    while piece and _is_punct(piece[0]):
        leading.append(_punct_token(piece[0]))
        piece = piece[1:]
    trailing: list[Token] = []
    while piece and _is_punct(piece[-1]):
        trailing.append(_punct_token(piece[-1]))
        piece = piece[:-1]
    trailing.reverse()
    if piece == MENTION_SENTINEL:
        core = [Token(MENTION_SENTINEL, MENTION)]
    elif piece:
        core = [Token(piece, WORD)]
    else:
        core = []
    return leading + core + trailing


def preprocess(text: str) -> list[Token]:
    """Tokenize raw post text.

    Steps, in order: lowercase; remove URLs; replace @-mentions with the
    <user> sentinel; split "#tag" into "#" + "tag"; split on whitespace;
    peel edge punctuation into separate tokens.  Emojis and other symbol
    characters are not punctuation and stay inside word tokens.  The
    result is idempotent on its own space-joined surfaces.
    """
    text = text.lower()
    text = _URL_RE.sub(" ", text)
    text = _MENTION_RE.sub(f" {MENTION_SENTINEL} ", text)
    text = _HASHTAG_RE.sub("# ", text)
    tokens: list[Token] = []
    for piece in text.split():
        tokens.extend(_split_piece(piece))
    return tokens


def detokenize(tokens: Sequence[Token]) -> str:
    return " ".join(t.surface for t in tokens)


def chunk_author(tweets: Sequence[RawTweet], max_tweets: int = 100) -> list[Document]:
    """Chunk one author's timeline into documents of up to max_tweets posts.

    Tweets must share author_id and label. Order is preserved; the last
    chunk may be short. Tweets whose text tokenizes to nothing still count
    toward the chunk size but contribute no boundary.
    """
    if max_tweets < 1:
        raise ValueError("max_tweets must be >= 1")
    if not tweets:
        return []
    author = tweets[0].author_id
    label = tweets[0].label
    for tw in tweets:
        if tw.author_id != author:
            raise ValueError("chunk_author got tweets from multiple authors")
        if tw.label != label:
            raise ValueError(f"author {author!r} has conflicting labels")
    docs: list[Document] = []
    for start in range(0, len(tweets), max_tweets):
        group = tweets[start : start + max_tweets]
        tokens: list[Token] = []
        boundaries: list[int] = []
        for tw in group:
            toks = preprocess(tw.text)
            if toks:
                boundaries.append(len(tokens))
                tokens.extend(toks)
        docs.append(Document(author, tuple(tokens), label, tuple(boundaries)))
    return docs


def build_corpus(
    tweets: Iterable[RawTweet], name: str, max_tweets: int = 100
) -> Corpus:
    """Group tweets by author (first-appearance order) and chunk each timeline."""
    by_author: dict[str, list[RawTweet]] = {}
    for tw in tweets:
        by_author.setdefault(tw.author_id, []).append(tw)
    documents: list[Document] = []
    labels: set[str] = set()
    for author_tweets in by_author.values():
        for doc in chunk_author(author_tweets, max_tweets):
            documents.append(doc)
            if doc.label is not None:
                labels.add(doc.label)
    return Corpus(tuple(documents), tuple(sorted(labels)), name)


def split_corpus(corpus: Corpus, train_fraction: float = 0.8) -> tuple[Corpus, Corpus]:
    """Deterministic unshuffled split: first floor(n * fraction) documents train.

    Datasets arrive in timeline order and are intentionally not shuffled,
    so train and test stay contiguous slices.
    """
    if not (0.0 < train_fraction < 1.0):
        raise ValueError("train_fraction must be strictly between 0 and 1")
    n = len(corpus.documents)
    # The epsilon absorbs float noise when n * fraction is mathematically integral.
    n_train = math.floor(n * train_fraction + 1e-12)
    train = Corpus(corpus.documents[:n_train], corpus.label_set, corpus.name + "-train")
    test = Corpus(corpus.documents[n_train:], corpus.label_set, corpus.name + "-test")
    return train, test


def sample_attack_set(test: Corpus, n: int = 200) -> list[Document]:
    """The last n documents of the test split, in order."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n > len(test.documents):
        raise ValueError(
            f"attack sample of {n} exceeds test split size {len(test.documents)}"
        )
    return list(test.documents[len(test.documents) - n :])


def load_tweets(path: str | Path) -> list[RawTweet]:
    """Read tweets from a JSON-lines file of {author_id, text, label} records."""
    tweets: list[RawTweet] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                tweets.append(
                    RawTweet(rec["author_id"], rec["text"], rec["label"])
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad tweet record: {exc}") from exc
    return tweets


def save_tweets(path: str | Path, tweets: Iterable[RawTweet]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for tw in tweets:
            rec = {"author_id": tw.author_id, "text": tw.text, "label": tw.label}
            fh.write(json.dumps(rec, sort_keys=True, ensure_ascii=False) + "\n")


def save_documents(path: str | Path, corpus: Corpus) -> None:
    """Write a corpus to the versioned JSON-lines document store format."""
    header = {
        "format": DOC_STORE_FORMAT,
        "version": DOC_STORE_VERSION,
        "name": corpus.name,
        "label_set": list(corpus.label_set),
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True, ensure_ascii=False) + "\n")
        for doc in corpus.documents:
            rec = {
                "author_id": doc.author_id,
                "label": doc.label,
                "tokens": [[t.surface, t.kind] for t in doc.tokens],
                "tweet_boundaries": list(doc.tweet_boundaries),
            }
            fh.write(json.dumps(rec, sort_keys=True, ensure_ascii=False) + "\n")


def load_documents(path: str | Path) -> Corpus:
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
        if not first.strip():
            raise ValueError(f"{path}: empty document store")
        try:
            header = json.loads(first)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: bad document store header: {exc}") from exc
        if header.get("format") != DOC_STORE_FORMAT:
            raise ValueError(f"{path}: not a {DOC_STORE_FORMAT} file")
        if header.get("version") != DOC_STORE_VERSION:
            raise ValueError(
                f"{path}: unsupported document store version {header.get('version')!r}"
            )
        documents: list[Document] = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
                tokens = tuple(Token(s, k) for s, k in rec["tokens"])
                documents.append(
                    Document(
                        rec["author_id"],
                        tokens,
                        rec["label"],
                        tuple(rec["tweet_boundaries"]),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad document record: {exc}") from exc
    return Corpus(tuple(documents), tuple(header["label_set"]), header["name"])
