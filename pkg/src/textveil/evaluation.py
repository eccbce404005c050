"""Attack evaluation: accuracies, semantic-quality metrics, report grids.

The headline question is transferability: does rewriting against a
substitute classifier also break a separately trained target classifier?
An attack condition counts as successful when the target's post-attack
accuracy drops to chance level, i.e. the majority-class prior.  Text
quality is tracked with a simplified exact-match METEOR and a
BERTScore-style greedy-alignment F1 over contextual encodings.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .classify import FeatureSpace, LinearClassifier, predict
from .corpus import Document

REPORT_FORMAT = "textveil-report"
REPORT_VERSION = 1


def accuracy(
    model: LinearClassifier, space: FeatureSpace, docs: Sequence[Document]
) -> float:
    if not docs:
        raise ValueError("cannot compute accuracy on zero documents")
    hits = 0
    for doc in docs:
        if doc.label is None:
            raise ValueError("accuracy needs labeled documents")
        if predict(model, space, doc) == doc.label:
            hits += 1
    return hits / len(docs)


def chance_level(docs: Sequence[Document]) -> float:
    """Majority-class prior of the evaluation set."""
    if not docs:
        raise ValueError("cannot compute chance level on zero documents")
    counts = Counter(doc.label for doc in docs)
    if None in counts:
        raise ValueError("chance level needs labeled documents")
    return max(counts.values()) / len(docs)


def change_rate(original: Document, edits: Sequence) -> float:
    """Fraction of tokens the attack replaced."""
    if not original.tokens:
        raise ValueError("change rate undefined for an empty document")
    return len(edits) / len(original.tokens)


# --------------------------------------------------------------------------
# METEOR (simplified: exact unigram matches only)


def _align(reference: Sequence[str], hypothesis: Sequence[str]) -> list[tuple[int, int]]:
    """Greedy maximum exact-match alignment as (hyp_index, ref_index) pairs.

    Every hypothesis token grabs an unused reference copy of itself when
    one exists, preferring, in order: the position right after the
    previous match (extending the current chunk), the nearest unused
    position to the right, then the nearest unused anywhere.  The match
    COUNT always equals sum_w min(count_hyp(w), count_ref(w)); the greedy
    preference only minimizes chunk breaks.
    """
    available: dict[str, list[int]] = {}
    for j, word in enumerate(reference):
        available.setdefault(word, []).append(j)
    pairs: list[tuple[int, int]] = []
    prev_ref = -1
    for i, word in enumerate(hypothesis):
        slots = available.get(word)
        if not slots:
            continue
        choice = None
        for j in slots:
            if j == prev_ref + 1:
                choice = j
                break
        if choice is None:
            for j in slots:
                if j > prev_ref:
                    choice = j
                    break
        if choice is None:
            choice = slots[0]
        slots.remove(choice)
        pairs.append((i, choice))
        prev_ref = choice
    return pairs


def _count_chunks(pairs: list[tuple[int, int]]) -> int:
    """Chunks are maximal runs contiguous in both hypothesis and reference."""
    if not pairs:
        return 0
    chunks = 1
    for (h0, r0), (h1, r1) in zip(pairs, pairs[1:]):
        if h1 != h0 + 1 or r1 != r0 + 1:
            chunks += 1
    return chunks


def meteor(
    reference: Sequence[str],
    hypothesis: Sequence[str],
    alpha: float = 0.9,
    beta: float = 3.0,
    gamma: float = 0.5,
) -> float:
    """Exact-match METEOR score of a hypothesis against one reference.

    P = m/|hyp|, R = m/|ref|, F = P*R / (alpha*P + (1-alpha)*R), and the
    fragmentation penalty gamma * (chunks/m)^beta scales the final score
    to F * (1 - penalty).  No stemming or synonym stage: matches are
    surface-exact, which fits single-word substitution evaluation where
    every edit should register as damage.
    """
    if not reference or not hypothesis:
        return 0.0
    pairs = _align(reference, hypothesis)
    m = len(pairs)
    if m == 0:
        return 0.0
    precision = m / len(hypothesis)
    recall = m / len(reference)
    f_mean = (precision * recall) / (alpha * precision + (1 - alpha) * recall)
    penalty = gamma * (_count_chunks(pairs) / m) ** beta
    return f_mean * (1.0 - penalty)


# --------------------------------------------------------------------------
# encoding F1 (BERTScore-style greedy max-cosine)


def encoding_f1(
    reference: Sequence[str],
    hypothesis: Sequence[str],
    encode: Callable[[Sequence[str]], np.ndarray],
) -> tuple[float, float, float]:
    """Greedy max-cosine precision/recall/F1 over per-token encodings.

    encode maps a token sequence to an (n, d) array of contextual vectors.
    Precision averages, over hypothesis tokens, the best cosine against
    any reference token; recall mirrors it over reference tokens.  Either
    side empty gives (0, 0, 0).
    """
    if not reference or not hypothesis:
        return (0.0, 0.0, 0.0)
    ref_vecs = np.asarray(encode(reference), dtype=np.float64)
    hyp_vecs = np.asarray(encode(hypothesis), dtype=np.float64)
    ref_norms = np.linalg.norm(ref_vecs, axis=1)
    hyp_norms = np.linalg.norm(hyp_vecs, axis=1)
    ref_norms[ref_norms == 0.0] = 1.0
    hyp_norms[hyp_norms == 0.0] = 1.0
    sims = (hyp_vecs / hyp_norms[:, None]) @ (ref_vecs / ref_norms[:, None]).T
    precision = float(sims.max(axis=1).mean())
    recall = float(sims.max(axis=0).mean())
    if precision + recall == 0.0:
        return (precision, recall, 0.0)
    return (precision, recall, 2 * precision * recall / (precision + recall))


# --------------------------------------------------------------------------
# report grid


@dataclass(frozen=True)
class AttackReport:
    """Aggregates for one attack condition against one target model."""

    condition: str
    substitute: str
    target: str
    n_docs: int
    pre_accuracy: float
    post_accuracy: float
    chance: float
    mean_change_rate: float
    mean_meteor: float
    mean_encoding_f1: float | None
    mean_queries: float

    @property
    def success(self) -> bool:
        """Success means the target model is reduced to chance or below."""
        return self.post_accuracy <= self.chance


@dataclass(frozen=True)
class ReportGrid:
    reports: tuple[AttackReport, ...]
    meteor_alpha: float = 0.9
    meteor_beta: float = 3.0
    meteor_gamma: float = 0.5

    def to_tsv(self) -> str:
        """Versioned TSV: a comment header, a column row, one row per report."""
        lines = [
            f"# {REPORT_FORMAT} v{REPORT_VERSION} "
            f"meteor_alpha={self.meteor_alpha} meteor_beta={self.meteor_beta} "
            f"meteor_gamma={self.meteor_gamma} "
            "averages=per-document-mean",
            "\t".join(
                [
                    "condition",
                    "substitute",
                    "target",
                    "n_docs",
                    "pre_accuracy",
                    "post_accuracy",
                    "chance",
                    "success",
                    "mean_change_rate",
                    "mean_meteor",
                    "mean_encoding_f1",
                    "mean_queries",
                ]
            ),
        ]
        for r in self.reports:
            lines.append(
                "\t".join(
                    [
                        r.condition,
                        r.substitute,
                        r.target,
                        str(r.n_docs),
                        f"{r.pre_accuracy:.4f}",
                        f"{r.post_accuracy:.4f}",
                        f"{r.chance:.4f}",
                        "yes" if r.success else "no",
                        f"{r.mean_change_rate:.4f}",
                        f"{r.mean_meteor:.4f}",
                        "-" if r.mean_encoding_f1 is None else f"{r.mean_encoding_f1:.4f}",
                        f"{r.mean_queries:.1f}",
                    ]
                )
            )
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        """Aligned human-readable table; a * marks successful conditions."""
        headers = [
            "condition",
            "subst->target",
            "pre",
            "post",
            "chance",
            "chg",
            "meteor",
            "encF1",
            "queries",
        ]
        rows = []
        for r in self.reports:
            rows.append(
                [
                    ("*" if r.success else " ") + r.condition,
                    f"{r.substitute}->{r.target}",
                    f"{r.pre_accuracy:.3f}",
                    f"{r.post_accuracy:.3f}",
                    f"{r.chance:.3f}",
                    f"{r.mean_change_rate:.3f}",
                    f"{r.mean_meteor:.3f}",
                    "-" if r.mean_encoding_f1 is None else f"{r.mean_encoding_f1:.3f}",
                    f"{r.mean_queries:.1f}",
                ]
            )
        widths = [
            max(len(h), *(len(row[i]) for row in rows)) if rows else len(h)
            for i, h in enumerate(headers)
        ]
        out = ["  ".join(h.ljust(widths[i]) for i, h in enumerate(headers))]
        out.append("  ".join("-" * w for w in widths))
        for row in rows:
            out.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)))
        out.append("")
        out.append("* = post-attack target accuracy at or below chance")
        return "\n".join(out) + "\n"


def build_report(
    condition: str,
    substitute_name: str,
    target_name: str,
    target_model: LinearClassifier,
    target_space: FeatureSpace,
    originals: Sequence[Document],
    attacked: Sequence[Document],
    edit_counts: Sequence[int],
    query_counts: Sequence[int],
    encode: Callable[[Sequence[str]], np.ndarray] | None = None,
) -> AttackReport:
    """Score one condition: accuracy before/after plus quality means."""
    if not (len(originals) == len(attacked) == len(edit_counts) == len(query_counts)):
        raise ValueError("originals, attacked, and counts must be aligned")
    if not originals:
        raise ValueError("cannot report on zero documents")
    pre = accuracy(target_model, target_space, originals)
    post_hits = 0
    meteors = []
    rates = []
    f1s = []
    for orig, adv in zip(originals, attacked):
        if predict(target_model, target_space, adv) == orig.label:
            post_hits += 1
        ref = orig.surfaces()
        hyp = adv.surfaces()
        meteors.append(meteor(ref, hyp))
        changed = sum(1 for a, b in zip(orig.tokens, adv.tokens) if a != b)
        rates.append(changed / len(orig.tokens) if orig.tokens else 0.0)
        if encode is not None:
            f1s.append(encoding_f1(ref, hyp, encode)[2])
    return AttackReport(
        condition=condition,
        substitute=substitute_name,
        target=target_name,
        n_docs=len(originals),
        pre_accuracy=pre,
        post_accuracy=post_hits / len(originals),
        chance=chance_level(list(originals)),
        mean_change_rate=float(np.mean(rates)),
        mean_meteor=float(np.mean(meteors)),
        mean_encoding_f1=float(np.mean(f1s)) if f1s else None,
        mean_queries=float(np.mean(query_counts)),
    )
