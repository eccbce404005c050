"""Conformance checks for language-model providers.

Any process that serves the fill/encode wire protocol can be checked
against the behavioral contract the attack code depends on: handshake,
response shapes, ranked candidates, normalized attention, determinism,
pipelining, and error handling that distinguishes malformed frames
(error then close) from semantically invalid requests (error, but the
connection stays usable).

run_conformance() returns one CheckResult per check; assert_conformant()
raises AssertionError naming every failed check.  Both the bundled toy
model server and any external provider are expected to pass the same
suite, which is what makes providers interchangeable behind the client.
"""
from __future__ import annotations

import math
import random
import socket
from dataclasses import dataclass
from typing import Callable, Sequence

from .lm_bridge import (
    MASK_SENTINEL,
    PROTOCOL_VERSION,
    Client,
    ContextualEncoding,
    EncodeRequest,
    ErrorMessage,
    FillRequest,
    FillResponse,
    Hello,
    ProviderError,
    recv_message,
    send_message,
)

DEFAULT_TOKENS = ("the", "quick", "brown", "fox", "jumps")

ATTENTION_TOL = 1e-9


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""

    def __str__(self) -> str:
        status = "ok" if self.passed else "FAIL"
        return f"{self.name}: {status}" + (f" ({self.detail})" if self.detail else "")


def _mask_request(client: Client, tokens: Sequence[str], index: int, top_k: int = 5):
    sent = list(tokens)
    sent[index] = MASK_SENTINEL
    return FillRequest(
        request_id=client.next_request_id(),
        kind="mask",
        tokens=tuple(sent),
        target_index=index,
        top_k=top_k,
        seed=0,
    )


def _dropout_request(client: Client, tokens: Sequence[str], index: int, top_k: int = 5):
    return FillRequest(
        request_id=client.next_request_id(),
        kind="dropout",
        tokens=tuple(tokens),
        target_index=index,
        top_k=top_k,
        seed=0,
        dropout_p=0.3,
    )


def _check_fill_shape(resp: FillResponse, top_k: int) -> str:
    if len(resp.candidates) > top_k:
        return f"{len(resp.candidates)} candidates exceed top_k={top_k}"
    if not resp.candidates:
        return "no candidates at all"
    prev = math.inf
    for word, score in resp.candidates:
        if not word:
            return "empty candidate surface"
        if word == MASK_SENTINEL:
            return "mask sentinel returned as a candidate"
        if any(ch.isspace() for ch in word):
            return f"candidate {word!r} contains whitespace"
        if not math.isfinite(score):
            return f"non-finite score for {word!r}"
        if score > prev:
            return "candidates are not ranked by non-increasing score"
        prev = score
    return ""


def _check_encoding(enc: ContextualEncoding, n_tokens: int) -> str:
    if len(enc.vectors) != n_tokens:
        return f"{len(enc.vectors)} vectors for {n_tokens} tokens"
    dims = {len(v) for v in enc.vectors}
    if len(dims) != 1 or 0 in dims:
        return f"inconsistent or zero vector dims: {sorted(dims)}"
    for vec in enc.vectors:
        if not all(math.isfinite(x) for x in vec):
            return "non-finite encoding component"
    if len(enc.attention) != n_tokens:
        return f"{len(enc.attention)} attention weights for {n_tokens} tokens"
    if any(a < 0 for a in enc.attention):
        return "negative attention weight"
    total = sum(enc.attention)
    if abs(total - 1.0) > ATTENTION_TOL:
        return f"attention sums to {total!r}, not 1"
    return ""


def run_conformance(
    connect: Callable[[], Client],
    tokens: Sequence[str] | None = None,
    deterministic: bool = True,
) -> list[CheckResult]:
    """Run every provider check; connect must yield a fresh ready client.

    tokens should be in-vocabulary words for the provider under test so
    fills have something to rank.  Set deterministic=False only for
    providers that are allowed to sample.
    """
    toks = tuple(tokens) if tokens is not None else DEFAULT_TOKENS
    if len(toks) < 3:
        raise ValueError("conformance needs at least 3 sample tokens")
    index = len(toks) // 2
    results: list[CheckResult] = []

    def record(name: str, detail: str) -> None:
        results.append(CheckResult(name, not detail, detail))

    # handshake: connect() performs the version exchange and fails loudly
    # on mismatch, so reaching a usable client is the check.
    try:
        client = connect()
    except Exception as exc:  # noqa: BLE001 - reported, not raised
        results.append(CheckResult("handshake", False, f"connect failed: {exc}"))
        return results
    results.append(CheckResult("handshake", True))

    with client:
        # fill shapes, both kinds
        mask_resp = client.fill(_mask_request(client, toks, index))
        record("mask_fill_shape", _check_fill_shape(mask_resp, 5))
        drop_resp = client.fill(_dropout_request(client, toks, index))
        record("dropout_fill_shape", _check_fill_shape(drop_resp, 5))

        # encode shape and normalization
        enc = client.encode(
            EncodeRequest(client.next_request_id(), toks, target_index=index)
        )
        record("encode_shape", _check_encoding(enc, len(toks)))

        if deterministic:
            mask2 = client.fill(_mask_request(client, toks, index))
            detail = (
                ""
                if mask2.candidates == mask_resp.candidates
                else "repeated mask fill differs"
            )
            drop2 = client.fill(_dropout_request(client, toks, index))
            if not detail and drop2.candidates != drop_resp.candidates:
                detail = "repeated dropout fill differs"
            enc2 = client.encode(
                EncodeRequest(client.next_request_id(), toks, target_index=index)
            )
            if not detail and (
                enc2.vectors != enc.vectors or enc2.attention != enc.attention
            ):
                detail = "repeated encode differs"
            record("determinism", detail)

        # pipelining: many requests in flight, answers matched by id in
        # an order the server did not choose.
        requests = []
        for i in range(10):
            if i % 2 == 0:
                req = _mask_request(client, toks, (index + i) % len(toks))
            else:
                req = EncodeRequest(client.next_request_id(), toks, i % len(toks))
            client.send_request(req)
            requests.append(req)
        rng = random.Random(7)
        rng.shuffle(requests)
        detail = ""
        for req in requests:
            msg = client.wait_for(req.request_id)
            if getattr(msg, "request_id", None) != req.request_id:
                detail = "response id does not match request id"
                break
            want = FillResponse if isinstance(req, FillRequest) else ContextualEncoding
            if not isinstance(msg, want):
                detail = f"request {req.request_id} got a {type(msg).__name__}"
                break
        record("pipelining", detail)

        # semantic error: out-of-range target index must produce an error
        # response and leave the connection usable.
        detail = ""
        try:
            client.fill(
                FillRequest(
                    request_id=client.next_request_id(),
                    kind="mask",
                    tokens=toks,
                    target_index=len(toks) + 3,
                    top_k=5,
                    seed=0,
                )
            )
            detail = "out-of-range target_index was accepted"
        except ProviderError as exc:
            if exc.code != "bad_request":
                detail = f"expected code bad_request, got {exc.code!r}"
        if not detail:
            try:
                again = client.fill(_mask_request(client, toks, index))
                if again.candidates != mask_resp.candidates and deterministic:
                    detail = "connection misbehaves after a rejected request"
            except Exception as exc:  # noqa: BLE001
                detail = f"connection unusable after a rejected request: {exc}"
        record("bad_request_keeps_connection", detail)

    # malformed frame: the provider must answer with an error and close.
    fresh = connect()
    detail = ""
    try:
        sock = fresh._sock
        sock.sendall(len(b"this is not json").to_bytes(4, "big") + b"this is not json")
        reply = recv_message(sock)
        if not isinstance(reply, ErrorMessage):
            detail = f"expected an error message, got {type(reply).__name__}"
        else:
            follow_up = recv_message(sock)
            if follow_up is not None:
                detail = "connection stayed open after a malformed frame"
    except Exception as exc:  # noqa: BLE001
        detail = f"malformed-frame handling failed: {exc}"
    finally:
        fresh.close()
    record("malformed_frame_closes", detail)

    return results


def assert_conformant(
    connect: Callable[[], Client],
    tokens: Sequence[str] | None = None,
    deterministic: bool = True,
) -> list[CheckResult]:
    """run_conformance, raising AssertionError listing any failures."""
    results = run_conformance(connect, tokens, deterministic)
    failures = [r for r in results if not r.passed]
    if failures:
        raise AssertionError(
            "provider conformance failures: "
            + "; ".join(str(r) for r in failures)
        )
    return results


def handshake_only(endpoint: str, timeout: float = 10.0) -> int:
    """Open a raw connection, exchange hellos, return the server version."""
    host, _, port = endpoint.rpartition(":")
    with socket.create_connection((host or "127.0.0.1", int(port)), timeout) as sock:
        sock.settimeout(timeout)
        send_message(sock, Hello(PROTOCOL_VERSION))
        reply = recv_message(sock)
        if isinstance(reply, Hello):
            return reply.version
        raise ProviderError("no hello from provider", code="handshake")
