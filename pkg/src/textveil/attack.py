"""Omission-score word importance and greedy lexical substitution.

The attack assumes query access to a substitute classifier f' and never
touches the real target model.  Words are ranked by how much deleting
them moves f's decision scores; the top-ranked attackable positions are
then rewritten one at a time.  For each position a generator proposes
candidate replacements, optional checks filter and re-rank them, and a
greedy scan keeps the first candidate that flips f' or, failing that,
the replacement that lowers the score of the true label the most.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .classify import FeatureSpace, LinearClassifier, label_for_score, vectorize
from .corpus import Document, Token, WORD
from .embeddings import EmbeddingStore, cosine
from .lm_bridge import (
    EncodeRequest,
    FillRequest,
    MASK_SENTINEL,
    ProviderError,
)
from .postag import LexiconSuffixTagger, Tagger

GENERATORS = ("leet", "flip", "space", "ws", "mb", "db")
MODES = ("top1", "loop_nocheck", "loop_check")
RERANKS = ("none", "mlm_sim")

_local_ids = itertools.count()


@dataclass(frozen=True)
class AttackConfig:
    """Knobs for one attack run.

    generator picks the candidate source: the three character-level
    heuristics (leet, flip, space), embedding near-synonyms (ws), masked
    fill-in (mb), or dropout fill-in (db).  mode picks the driver: top1
    substitutes every target with the generator's first candidate without
    consulting f'; loop_nocheck runs the greedy scan; loop_check adds the
    part-of-speech filter and picks among flipping candidates by sentence
    similarity.  rerank="mlm_sim" orders candidates by attention-weighted
    contextual similarity before the scan.
    """

    generator: str
    mode: str = "loop_nocheck"
    k_targets: int = 50
    top_k: int = 10
    n_synonyms: int = 50
    delta: float = 0.7
    dropout_p: float = 0.3
    rerank: str = "none"
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "generator", self.generator.lower())
        if self.generator not in GENERATORS:
            raise ValueError(f"unknown generator {self.generator!r}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.rerank not in RERANKS:
            raise ValueError(f"unknown rerank {self.rerank!r}")
        if self.k_targets < 1:
            raise ValueError("k_targets must be >= 1")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if self.n_synonyms < 1:
            raise ValueError("n_synonyms must be >= 1")
        if not (-1.0 <= self.delta <= 1.0):
            raise ValueError("delta must be a cosine threshold in [-1, 1]")
        if not (0.0 <= self.dropout_p < 1.0):
            raise ValueError("dropout_p must be in [0, 1)")


@dataclass
class AttackProviders:
    """External helpers an attack may need, all optional until used.

    lm is anything with fill()/encode() in the provider protocol: an
    in-process ToyLanguageModel or a lm_bridge.Client.  When no explicit
    sentence_encoder is given, the embedding store's mean-vector encoder
    backs the loop_check similarity selection.
    """

    embeddings: EmbeddingStore | None = None
    lm: object | None = None
    tagger: Tagger | None = None
    sentence_encoder: Callable[[Sequence[str]], np.ndarray] | None = None

    def resolve_tagger(self) -> Tagger:
        return self.tagger if self.tagger is not None else LexiconSuffixTagger()

    def resolve_encoder(self) -> Callable[[Sequence[str]], np.ndarray] | None:
        if self.sentence_encoder is not None:
            return self.sentence_encoder
        if self.embeddings is not None:
            return self.embeddings.encode_sentence
        return None


@dataclass(frozen=True)
class Candidate:
    surface: str
    score: float
    source: str


@dataclass(frozen=True)
class Edit:
    position: int
    original: str
    replacement: str


@dataclass(frozen=True)
class ImportanceRanking:
    """Per-position omission scores for one document against label y."""

    scores: tuple[float, ...]
    attackable: tuple[bool, ...]
    predicted: str
    target: str

    @property
    def matches_target(self) -> bool:
        return self.predicted == self.target


@dataclass(frozen=True)
class AttackEvent:
    edit: Edit
    logit_after: float | None  # None in top1 mode, which never queries f'
    flipped: bool


@dataclass(frozen=True)
class AttackResult:
    document: Document
    edits: tuple[Edit, ...]
    flipped: bool
    final_logit: float
    queries: int
    skipped_positions: tuple[int, ...]
    ranking: ImportanceRanking | None


# --------------------------------------------------------------------------
# importance


def omission_scores(
    model: LinearClassifier, space: FeatureSpace, doc: Document, y: str
) -> ImportanceRanking:
    """Score every position by the logit change its deletion causes.

    For position i with D\\i the document minus token i:
      * deletion keeps the prediction at y:
          score = o_y(D) - o_y(D\\i)
      * deletion flips the prediction to the other label:
          score = o_y(D) - o_y(D\\i) + o_ybar(D) - o_ybar(D\\i)
    Each deleted variant is re-vectorized from scratch, so n-gram and
    normalization effects are exact rather than approximated.  The target
    y need not equal the model's prediction; the ranking records both so
    callers can tell.  Only word tokens are attackable.
    """
    if y not in model.label_set:
        raise ValueError(f"label {y!r} not in model label set")
    ybar = _other_label(model, y)
    base_pos = model.decision_score(vectorize(space, doc))
    predicted = label_for_score(model, base_pos)
    base_y = base_pos if y == model.positive_label else -base_pos
    base_ybar = -base_y
    scores: list[float] = []
    for i in range(len(doc.tokens)):
        reduced_tokens = doc.tokens[:i] + doc.tokens[i + 1 :]
        reduced = Document.from_tokens(doc.author_id, reduced_tokens, doc.label)
        red_pos = model.decision_score(vectorize(space, reduced))
        red_y = red_pos if y == model.positive_label else -red_pos
        if label_for_score(model, red_pos) == y:
            scores.append(base_y - red_y)
        else:
            scores.append((base_y - red_y) + (base_ybar - (-red_y)))
    attackable = tuple(t.kind == WORD for t in doc.tokens)
    return ImportanceRanking(tuple(scores), attackable, predicted, y)


def select_targets(ranking: ImportanceRanking, k: int = 50) -> list[int]:
    """Top-k attackable positions by descending score; ties by position."""
    if k < 0:
        raise ValueError("k must be >= 0")
    positions = [i for i, ok in enumerate(ranking.attackable) if ok]
    positions.sort(key=lambda i: (-ranking.scores[i], i))
    return positions[:k]


def _other_label(model: LinearClassifier, y: str) -> str:
    a, b = model.label_set
    return b if y == a else a


# --------------------------------------------------------------------------
# candidate generators


LEET_MAP = str.maketrans(
    {"a": "4", "e": "3", "i": "1", "o": "0", "s": "5", "t": "7", "b": "8", "g": "9"}
)


def leet_candidate(word: str) -> str:
    return word.translate(LEET_MAP)


def flip_candidate(word: str) -> str:
    """Swap the two middle characters; words under 4 chars come back as-is."""
    n = len(word)
    if n < 4:
        return word
    i = (n - 1) // 2
    return word[:i] + word[i + 1] + word[i] + word[i + 2 :]


def space_candidate(word: str, rng: random.Random) -> str:
    """Insert a space at a random interior position."""
    if len(word) < 2:
        return word
    i = rng.randrange(1, len(word))
    return word[:i] + " " + word[i:]


def synonym_candidates(
    word: str, store: EmbeddingStore, n: int = 50, delta: float = 0.7
) -> list[Candidate]:
    return [Candidate(w, s, "ws") for w, s in store.neighbors(word, n, delta)]


def _request_id(provider) -> str:
    make = getattr(provider, "next_request_id", None)
    if make is not None:
        return make()
    return f"a{next(_local_ids)}"


def _usable(surface: str) -> bool:
    return (
        bool(surface)
        and surface != MASK_SENTINEL
        and not any(ch.isspace() for ch in surface)
    )


def masked_candidates(
    provider, surfaces: Sequence[str], index: int, top_k: int = 10, seed: int = 0
) -> list[Candidate]:
    """Candidates from a masked fill of the current context.

    The target slot is physically replaced by the mask sentinel before
    the request goes out, so the provider cannot peek at the original.
    """
    tokens = list(surfaces)
    tokens[index] = MASK_SENTINEL
    resp = provider.fill(
        FillRequest(
            request_id=_request_id(provider),
            kind="mask",
            tokens=tuple(tokens),
            target_index=index,
            top_k=top_k,
            seed=seed,
        )
    )
    out = []
    for word, score in resp.candidates:
        word = word.lower()
        if _usable(word):
            out.append(Candidate(word, score, "mb"))
    return out


def dropout_candidates(
    provider,
    surfaces: Sequence[str],
    index: int,
    top_k: int = 10,
    dropout_p: float = 0.3,
    seed: int = 0,
) -> list[Candidate]:
    """Candidates from re-predicting the target with a damaged embedding."""
    resp = provider.fill(
        FillRequest(
            request_id=_request_id(provider),
            kind="dropout",
            tokens=tuple(surfaces),
            target_index=index,
            top_k=top_k,
            seed=seed,
            dropout_p=dropout_p,
        )
    )
    out = []
    for word, score in resp.candidates:
        word = word.lower()
        if _usable(word):
            out.append(Candidate(word, score, "db"))
    return out


# --------------------------------------------------------------------------
# checks


def pos_filter(
    surfaces: Sequence[str], index: int, candidates: Sequence[Candidate], tagger: Tagger
) -> list[Candidate]:
    """Keep candidates whose substitution preserves the slot's POS tag.

    A candidate identical to the original surface is always kept.
    """
    original_tag = tagger.tag(surfaces, index)
    kept = []
    scratch = list(surfaces)
    for cand in candidates:
        if cand.surface == surfaces[index]:
            kept.append(cand)
            continue
        scratch[index] = cand.surface
        if tagger.tag(scratch, index) == original_tag:
            kept.append(cand)
        scratch[index] = surfaces[index]
    return kept


def encoder_select(
    doc: Document,
    variants: Sequence[tuple[Document, int, bool]],
    encoder: Callable[[Sequence[str]], np.ndarray],
    ranking: ImportanceRanking,
) -> Document:
    """Choose the best single-edit variant of doc.

    Among variants that flip the substitute model, pick the one whose
    sentence encoding stays closest (cosine) to the original document,
    ties going to the earliest.  If none flip, fall back to the variant
    whose edited position has the lowest omission score in the original
    ranking, again preferring the earliest on ties.
    """
    if not variants:
        raise ValueError("encoder_select needs at least one variant")
    flipped = [(cand, pos) for cand, pos, did_flip in variants if did_flip]
    if flipped:
        base = encoder([t.surface for t in doc.tokens])
        best_doc = None
        best_sim = -np.inf
        for cand, _pos in flipped:
            sim = cosine(base, encoder([t.surface for t in cand.tokens]))
            if sim > best_sim:
                best_sim = sim
                best_doc = cand
        return best_doc  # type: ignore[return-value]
    best_doc = None
    best_score = np.inf
    for cand, pos, _did_flip in variants:
        score = ranking.scores[pos]
        if score < best_score:
            best_score = score
            best_doc = cand
    return best_doc  # type: ignore[return-value]


def mlm_sim_scores(
    provider,
    surfaces: Sequence[str],
    variant_surfaces: Sequence[Sequence[str]],
    target_index: int,
) -> list[float]:
    """Attention-weighted contextual similarity of each variant to the original.

    score(D, D') = sum_i w_i * cos(h(D_i | D), h(D'_i | D')) where h are the
    provider's contextual token vectors and w is its attention profile
    around the edited position, renormalized to sum to one.  Variants must
    be token-aligned with the original.
    """
    base = provider.encode(
        EncodeRequest(_request_id(provider), tuple(surfaces), target_index)
    )
    weights = np.asarray(base.attention, dtype=np.float64)
    total = weights.sum()
    if total <= 0:
        raise ValueError("provider attention profile sums to zero")
    weights = weights / total
    base_vectors = [np.asarray(v, dtype=np.float64) for v in base.vectors]
    scores: list[float] = []
    for variant in variant_surfaces:
        if len(variant) != len(surfaces):
            raise ValueError("variant is not token-aligned with the original")
        enc = provider.encode(
            EncodeRequest(_request_id(provider), tuple(variant), target_index)
        )
        vecs = [np.asarray(v, dtype=np.float64) for v in enc.vectors]
        total_sim = 0.0
        for w, a, b in zip(weights, base_vectors, vecs):
            total_sim += float(w) * cosine(a, b)
        scores.append(total_sim)
    return scores


# --------------------------------------------------------------------------
# driver


def _generate_candidates(
    config: AttackConfig,
    providers: AttackProviders,
    surfaces: Sequence[str],
    index: int,
    rng: random.Random,
) -> list[Candidate]:
    word = surfaces[index]
    g = config.generator
    if g == "leet":
        return [Candidate(leet_candidate(word), 0.0, "leet")]
    if g == "flip":
        return [Candidate(flip_candidate(word), 0.0, "flip")]
    if g == "space":
        return [Candidate(space_candidate(word, rng), 0.0, "space")]
    if g == "ws":
        assert providers.embeddings is not None
        return synonym_candidates(
            word, providers.embeddings, config.n_synonyms, config.delta
        )
    if g == "mb":
        assert providers.lm is not None
        return masked_candidates(
            providers.lm, surfaces, index, config.top_k, config.seed
        )
    if g == "db":
        assert providers.lm is not None
        return dropout_candidates(
            providers.lm, surfaces, index, config.top_k, config.dropout_p, config.seed
        )
    raise AssertionError(f"unhandled generator {g!r}")


def generate_candidates(
    config: AttackConfig,
    providers: AttackProviders,
    surfaces: Sequence[str],
    index: int,
    rng: random.Random | None = None,
) -> list[Candidate]:
    """Candidate surfaces for one slot, as the attack drivers would see them.

    Without an explicit rng the draw is seeded by (config.seed, index) so
    repeated standalone calls for the same slot agree.
    """
    _check_providers(config, providers)
    if rng is None:
        rng = random.Random(f"{config.seed}:{index}")
    return _generate_candidates(config, providers, surfaces, index, rng)


def _check_providers(config: AttackConfig, providers: AttackProviders) -> None:
    if config.generator == "ws" and providers.embeddings is None:
        raise ValueError("generator 'ws' needs an embedding store")
    if config.generator in ("mb", "db") and providers.lm is None:
        raise ValueError(f"generator {config.generator!r} needs an LM provider")
    if config.rerank == "mlm_sim" and providers.lm is None:
        raise ValueError("rerank 'mlm_sim' needs an LM provider")
    if config.mode == "loop_check" and providers.resolve_encoder() is None:
        raise ValueError("mode 'loop_check' needs a sentence encoder or embeddings")


def apply_edits(doc: Document, edits: Iterable[Edit]) -> Document:
    """Replay edits over a document; originals must match exactly."""
    tokens = list(doc.tokens)
    for edit in edits:
        if not (0 <= edit.position < len(tokens)):
            raise ValueError(f"edit position {edit.position} out of range")
        if tokens[edit.position].surface != edit.original:
            raise ValueError(
                f"edit at {edit.position} expected {edit.original!r}, "
                f"found {tokens[edit.position].surface!r}"
            )
        tokens[edit.position] = Token(edit.replacement, tokens[edit.position].kind)
    return replace(doc, tokens=tuple(tokens))


def run_attack(
    model: LinearClassifier,
    space: FeatureSpace,
    doc: Document,
    y: str,
    config: AttackConfig,
    providers: AttackProviders | None = None,
    on_edit: Callable[[AttackEvent], None] | None = None,
) -> AttackResult:
    """Greedy substitution attack on one document against label y.

    Documents the substitute model already misclassifies come back
    unchanged with flipped=True and no edits.  Otherwise positions are
    attacked in importance order; each accepted edit strictly lowers
    o_y and each position is edited at most once.  In loop modes the
    first candidate that flips the substitute model ends the attack
    (loop_check first narrows by POS and picks the flip that best
    preserves sentence similarity).  Provider failures skip the affected
    position and are recorded instead of aborting the run.  queries
    counts substitute-classifier evaluations, including those spent on
    the importance ranking.
    """
    if providers is None:
        providers = AttackProviders()
    _check_providers(config, providers)
    if y not in model.label_set:
        raise ValueError(f"label {y!r} not in model label set")

    queries = 1
    base_pos = model.decision_score(vectorize(space, doc))
    o_y = base_pos if y == model.positive_label else -base_pos
    if label_for_score(model, base_pos) != y:
        return AttackResult(doc, (), True, o_y, queries, (), None)

    ranking = omission_scores(model, space, doc, y)
    queries += len(doc.tokens) + 1
    targets = select_targets(ranking, config.k_targets)
    rng = random.Random(config.seed)
    tagger = providers.resolve_tagger()
    encoder = providers.resolve_encoder()

    current = list(doc.tokens)
    bar = o_y
    edits: list[Edit] = []
    skipped: list[int] = []

    def emit(edit: Edit, logit_after: float, flipped: bool) -> None:
        if on_edit is not None:
            on_edit(AttackEvent(edit, logit_after, flipped))

    def finish(flipped: bool, final_logit: float) -> AttackResult:
        adv = replace(doc, tokens=tuple(current))
        return AttackResult(
            adv, tuple(edits), flipped, final_logit, queries, tuple(skipped), ranking
        )

    for t in targets:
        surfaces = [tok.surface for tok in current]
        original = surfaces[t]
        try:
            candidates = _generate_candidates(config, providers, surfaces, t, rng)
        except ProviderError:
            skipped.append(t)
            continue

        if config.mode == "top1":
            if candidates and candidates[0].surface != original:
                top = candidates[0]
                current[t] = Token(top.surface, current[t].kind)
                edit = Edit(t, original, top.surface)
                edits.append(edit)
                emit(edit, None, False)
            continue

        variants = list(candidates)
        if config.mode == "loop_check":
            variants = pos_filter(surfaces, t, variants, tagger)
        if config.rerank == "mlm_sim" and variants:
            try:
                sims = mlm_sim_scores(
                    providers.lm,
                    surfaces,
                    [_swap(surfaces, t, c.surface) for c in variants],
                    t,
                )
            except ProviderError:
                skipped.append(t)
                continue
            order = sorted(range(len(variants)), key=lambda i: -sims[i])
            variants = [variants[i] for i in order]

        flips: list[tuple[str, float]] = []
        best_surface: str | None = None
        best_o = bar
        for cand in variants:
            trial = replace(
                doc, tokens=tuple(_swap_tokens(current, t, cand.surface))
            )
            queries += 1
            trial_pos = model.decision_score(vectorize(space, trial))
            trial_o = trial_pos if y == model.positive_label else -trial_pos
            if label_for_score(model, trial_pos) != y:
                if config.mode == "loop_nocheck":
                    current[t] = Token(cand.surface, current[t].kind)
                    edit = Edit(t, original, cand.surface)
                    edits.append(edit)
                    emit(edit, trial_o, True)
                    return finish(True, trial_o)
                flips.append((cand.surface, trial_o))
            elif trial_o < best_o:
                best_o = trial_o
                best_surface = cand.surface

        if flips:
            assert encoder is not None
            flip_docs = [
                (replace(doc, tokens=tuple(_swap_tokens(current, t, s))), t, True)
                for s, _o in flips
            ]
            chosen = encoder_select(doc, flip_docs, encoder, ranking)
            chosen_surface = chosen.tokens[t].surface
            chosen_o = next(o for s, o in flips if s == chosen_surface)
            current[t] = Token(chosen_surface, current[t].kind)
            edit = Edit(t, original, chosen_surface)
            edits.append(edit)
            emit(edit, chosen_o, True)
            return finish(True, chosen_o)

        if best_surface is not None:
            current[t] = Token(best_surface, current[t].kind)
            edit = Edit(t, original, best_surface)
            edits.append(edit)
            bar = best_o
            emit(edit, bar, False)

    if config.mode == "top1":
        final = replace(doc, tokens=tuple(current))
        queries += 1
        final_pos = model.decision_score(vectorize(space, final))
        final_o = final_pos if y == model.positive_label else -final_pos
        return finish(label_for_score(model, final_pos) != y, final_o)
    return finish(False, bar)


def _swap(surfaces: Sequence[str], index: int, surface: str) -> list[str]:
    out = list(surfaces)
    out[index] = surface
    return out


def _swap_tokens(tokens: Sequence[Token], index: int, surface: str) -> list[Token]:
    out = list(tokens)
    out[index] = Token(surface, tokens[index].kind)
    return out
