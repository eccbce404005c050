"""Pretrained masked-LM provider for the fill/encode wire protocol.

Any checkpoint loadable through transformers' AutoModelForMaskedLM can be
served.  The protocol speaks in whole words, so the provider handles the
subword mismatch internally: every word maps to its tokenizer pieces, and
per-piece model outputs are pooled back to word positions by arithmetic
mean.

fill kind "mask" replaces the target word's pieces with a single mask
token and returns the LM head's top-k at that slot.  fill kind "dropout"
keeps the target word visible but damages it: a seeded dropout mask
zeroes part of the word's input-embedding rows (inverted dropout, so
surviving coordinates are scaled by 1/(1-p)) before the encoder stack
runs, and candidates come from the LM head at the damaged slot, which
keeps suggestions anchored to the original word instead of the bare
context.  The perturbation touches the word embedding only; position and
segment embeddings are added afterwards, untouched.

encode returns one vector per word -- the concatenation of the last four
hidden layers, pooled over the word's pieces -- plus an attention profile
toward the target word: self-attention averaged over every layer and
every head, pooled from pieces to words, with the special positions
dropped and the rest renormalized to sum to one.

Candidate surfaces are restricted to vocabulary entries that round-trip
through the tokenizer as a standalone word, which excludes special
tokens, continuation pieces, and anything else that could not replace a
word in running text.
"""
from __future__ import annotations

import hashlib
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from textveil.lm_bridge import (
    MASK_SENTINEL,
    ContextualEncoding,
    EncodeRequest,
    FillRequest,
    FillResponse,
    ProtocolServer,
    RequestError,
    start_server,
    validate_request,
)

# How many trailing hidden layers are concatenated into a word vector.
# Models with fewer layers contribute everything they have.
LAYERS_POOLED = 4


@dataclass(frozen=True)
class AdapterConfig:
    """Where the model lives and how much of it to use.

    model is a checkpoint directory (or any identifier the transformers
    loaders accept).  device is a torch device string.  max_length caps
    the piece count of a single request, including the two special
    positions; None means the model's own position capacity.  Deployments
    must keep it at least as large as the longest document they intend to
    rewrite, measured after subword expansion.
    """

    model: str
    device: str = "cpu"
    max_length: int | None = None

    def __post_init__(self) -> None:
        if not self.model:
            raise ValueError("model must name a checkpoint")
        if self.max_length is not None and self.max_length < 4:
            raise ValueError("max_length must leave room for a word between the special positions")


def _dropout_seed(word: str, seed: int) -> int:
    """Stable 64-bit generator seed from the damaged word and request seed."""
    digest = hashlib.blake2b(f"{word}\x00{seed}".encode("utf-8"), digest_size=8)
    return int.from_bytes(digest.digest(), "big")


class MaskedLMProvider:
    """fill()/encode() backend over a pretrained masked language model.

    The model runs in eval mode with gradients off, so identical requests
    produce identical responses.  A lock serializes model calls: each
    connection's requests run one at a time and concurrent connections
    queue.
    """

    def __init__(self, config: AdapterConfig):
        from transformers import AutoModelForMaskedLM, AutoTokenizer

        self.config = config
        self.tokenizer = AutoTokenizer.from_pretrained(config.model)
        # eager attention: the fused kernels cannot report per-head weights
        self.model = AutoModelForMaskedLM.from_pretrained(
            config.model, attn_implementation="eager"
        )
        self.device = torch.device(config.device)
        self.model.to(self.device).eval()
        for name in ("mask_token_id", "unk_token_id", "cls_token_id", "sep_token_id"):
            if getattr(self.tokenizer, name) is None:
                raise ValueError(f"checkpoint {config.model!r} has no {name}")
        capacity = int(self.model.config.max_position_embeddings)
        self.max_length = (
            min(config.max_length, capacity) if config.max_length else capacity
        )
        self._lock = threading.Lock()
        self._piece_cache: dict[str, tuple[int, ...]] = {}
        self._surfaces: list[str] = []
        self._allowed = self._candidate_mask()

    # -- vocabulary ---------------------------------------------------

    def _pieces(self, word: str) -> tuple[int, ...]:
        """Tokenizer pieces for one word; unencodable words become [UNK]."""
        got = self._piece_cache.get(word)
        if got is None:
            ids = self.tokenizer.encode(word, add_special_tokens=False)
            got = tuple(ids) if ids else (self.tokenizer.unk_token_id,)
            self._piece_cache[word] = got
        return got

    def _candidate_mask(self) -> np.ndarray:
        """Vocabulary ids usable as replacement words.

        An id qualifies when its surface, tokenized as a word on its own,
        comes back as exactly that id -- the same round trip a substitution
        will take when the rewritten document is re-tokenized.
        """
        n_model = int(self.model.config.vocab_size)
        n_tok = min(len(self.tokenizer), n_model)
        special = set(self.tokenizer.all_special_ids)
        self._surfaces = self.tokenizer.convert_ids_to_tokens(list(range(n_tok)))
        allowed = np.zeros(n_model, dtype=bool)
        for i, surface in enumerate(self._surfaces):
            if not surface or i in special or surface == MASK_SENTINEL:
                continue
            if any(ch.isspace() for ch in surface):
                continue
            allowed[i] = self._pieces(surface) == (i,)
        return allowed

    # -- request plumbing ---------------------------------------------

    def _assemble(
        self, tokens: tuple[str, ...], mask_index: int | None = None
    ) -> tuple[list[int], list[tuple[int, int]]]:
        """Piece ids with special positions, plus each word's piece span."""
        piece_ids = [self.tokenizer.cls_token_id]
        spans: list[tuple[int, int]] = []
        for i, word in enumerate(tokens):
            if i == mask_index:
                pieces: tuple[int, ...] = (self.tokenizer.mask_token_id,)
            else:
                pieces = self._pieces(word)
            start = len(piece_ids)
            piece_ids.extend(pieces)
            spans.append((start, len(piece_ids)))
        piece_ids.append(self.tokenizer.sep_token_id)
        if len(piece_ids) > self.max_length:
            raise RequestError(
                f"request expands to {len(piece_ids)} pieces, "
                f"over the {self.max_length}-piece limit"
            )
        return piece_ids, spans

    def _forward(self, **inputs):
        try:
            return self.model(**inputs)
        except RuntimeError as exc:
            if "out of memory" in str(exc).lower():
                raise RequestError(f"model ran out of memory: {exc}") from exc
            raise

    def _top_candidates(
        self, slot_logits: torch.Tensor, top_k: int
    ) -> tuple[tuple[str, float], ...]:
        scores = slot_logits.to(torch.float64).cpu().numpy()
        order = np.argsort(-scores, kind="stable")
        out: list[tuple[str, float]] = []
        for idx in order:
            if len(out) == top_k:
                break
            if self._allowed[idx]:
                out.append((self._surfaces[idx], float(scores[idx])))
        return tuple(out)

    # -- protocol operations -------------------------------------------

    def fill(self, req: FillRequest) -> FillResponse:
        validate_request(req)
        with self._lock, torch.no_grad():
            if req.kind == "mask":
                piece_ids, spans = self._assemble(req.tokens, mask_index=req.target_index)
                ids = torch.tensor([piece_ids], device=self.device)
                logits = self._forward(input_ids=ids).logits[0]
                slot = logits[spans[req.target_index][0]]
            else:
                piece_ids, spans = self._assemble(req.tokens)
                ids = torch.tensor([piece_ids], device=self.device)
                embeds = self.model.get_input_embeddings()(ids)
                start, end = spans[req.target_index]
                if req.dropout_p > 0.0:
                    gen = torch.Generator().manual_seed(
                        _dropout_seed(req.tokens[req.target_index], req.seed)
                    )
                    keep = torch.rand((end - start, embeds.shape[-1]), generator=gen)
                    keep = (keep >= req.dropout_p).to(embeds.dtype).to(self.device)
                    embeds[0, start:end] *= keep / (1.0 - req.dropout_p)
                logits = self._forward(inputs_embeds=embeds).logits[0]
                slot = logits[start:end].mean(dim=0)
            return FillResponse(req.request_id, self._top_candidates(slot, req.top_k))

    def encode(self, req: EncodeRequest) -> ContextualEncoding:
        validate_request(req)
        with self._lock, torch.no_grad():
            piece_ids, spans = self._assemble(req.tokens)
            ids = torch.tensor([piece_ids], device=self.device)
            out = self._forward(
                input_ids=ids, output_hidden_states=True, output_attentions=True
            )
            stacked = (
                torch.cat(out.hidden_states[-LAYERS_POOLED:], dim=-1)[0]
                .to(torch.float64)
                .cpu()
                .numpy()
            )
            vectors = tuple(
                tuple(float(x) for x in stacked[s:e].mean(axis=0)) for s, e in spans
            )
            # [layers, batch, heads, from, to] -> mean over layers and heads
            att = (
                torch.stack(out.attentions)
                .to(torch.float64)
                .mean(dim=(0, 2))[0]
                .cpu()
                .numpy()
            )
            t0, t1 = spans[req.target_index]
            toward = att[:, t0:t1].mean(axis=1)
            profile = np.array([toward[s:e].mean() for s, e in spans])
            profile /= profile.sum()
            return ContextualEncoding(
                req.request_id, vectors, tuple(float(x) for x in profile)
            )


def serve(
    config: AdapterConfig, host: str = "127.0.0.1", port: int = 0
) -> ProtocolServer:
    """Load the model and serve it on a background thread."""
    return start_server(MaskedLMProvider(config), host=host, port=port)


def checkpoint_exists(path: str | Path) -> bool:
    """True when path looks like a saved checkpoint directory."""
    p = Path(path)
    return p.is_dir() and (p / "config.json").exists()
