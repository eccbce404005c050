"""The adapter must be indistinguishable from any other conformant provider.

Runs the shared provider conformance suite over a live socket, then
fuzzes the same surface the way the protocol tests exercise the bundled
toy server: malformed frames end the connection with an error, invalid
requests are rejected without ending it, and heavy pipelining keeps
request and response ids paired.
"""
from __future__ import annotations

import json
import random
import socket

import pytest

from textveil.conformance import assert_conformant, handshake_only, run_conformance
from textveil.lm_bridge import (
    PROTOCOL_VERSION,
    Client,
    ContextualEncoding,
    EncodeRequest,
    ErrorMessage,
    FillRequest,
    FillResponse,
    ProviderError,
    recv_message,
)

SINGLE_PIECE_WORDS = ("the", "quick", "brown", "fox", "jumps")
MULTI_PIECE_WORDS = ("jogging", "mornings", "walked", "happily", "coffees")


class TestConformanceSuite:
    def test_default_tokens_pass_every_check(self, connect):
        results = assert_conformant(connect, tokens=SINGLE_PIECE_WORDS)
        assert {r.name for r in results} >= {
            "handshake",
            "mask_fill_shape",
            "dropout_fill_shape",
            "encode_shape",
            "determinism",
            "pipelining",
            "bad_request_keeps_connection",
            "malformed_frame_closes",
        }

    def test_multipiece_tokens_pass_every_check(self, connect):
        failures = [
            r for r in run_conformance(connect, tokens=MULTI_PIECE_WORDS) if not r.passed
        ]
        assert failures == []

    def test_handshake_reports_protocol_version(self, server):
        assert handshake_only(server.endpoint) == PROTOCOL_VERSION


def _frame(payload: bytes) -> bytes:
    return len(payload).to_bytes(4, "big") + payload


class TestMalformedFrameFuzz:
    GARBAGE = [
        b"this is not json at all",
        b"\xff\xfe\x00\x01",
        json.dumps(["a", "list"]).encode(),
        json.dumps({"no": "type"}).encode(),
        json.dumps({"type": "warp-drive"}).encode(),
        json.dumps({"type": "fill", "request_id": "x"}).encode(),  # fields missing
        json.dumps({"type": "fill", "request_id": 5}).encode(),  # wrong types
        json.dumps({"type": "hello", "version": True}).encode(),
        b"",
    ]

    @pytest.mark.parametrize("payload", GARBAGE, ids=range(len(GARBAGE)))
    def test_error_then_close(self, connect, payload):
        client = connect()
        try:
            sock = client._sock
            sock.sendall(_frame(payload))
            reply = recv_message(sock)
            assert isinstance(reply, ErrorMessage)
            assert reply.code == "malformed"
            assert recv_message(sock) is None  # server hung up
        finally:
            client.close()

    def test_oversized_length_prefix_closes(self, connect):
        client = connect()
        try:
            sock = client._sock
            sock.sendall((17 * 1024 * 1024).to_bytes(4, "big"))
            reply = recv_message(sock)
            assert isinstance(reply, ErrorMessage)
            assert reply.code == "malformed"
            assert recv_message(sock) is None
        finally:
            client.close()

    def test_wrong_version_refused(self, server):
        host, _, port = server.endpoint.rpartition(":")
        with socket.create_connection((host, int(port)), timeout=10) as sock:
            sock.settimeout(10)
            sock.sendall(_frame(json.dumps({"type": "hello", "version": 999}).encode()))
            reply = recv_message(sock)
            assert isinstance(reply, ErrorMessage)
            assert reply.code == "unsupported_version"
            assert recv_message(sock) is None


class TestSemanticErrorFuzz:
    def bad_requests(self, client, words):
        n = len(words)
        rid = client.next_request_id
        return [
            FillRequest(rid(), "banana", words, 0, 5, 0),
            FillRequest(rid(), "mask", words, -1, 5, 0),
            FillRequest(rid(), "mask", words, n, 5, 0),
            FillRequest(rid(), "mask", (), 0, 5, 0),
            FillRequest(rid(), "mask", words, 0, -2, 0),
            FillRequest(rid(), "mask", words, 0, 5, 0, dropout_p=0.2),
            FillRequest(rid(), "dropout", words, 0, 5, 0),
            FillRequest(rid(), "dropout", words, 0, 5, 0, dropout_p=1.0),
            FillRequest(rid(), "dropout", words, 0, 5, 0, dropout_p=-0.1),
            EncodeRequest(rid(), (), 0),
            EncodeRequest(rid(), words, n + 3),
        ]

    def test_every_rejection_keeps_the_connection(self, connect):
        words = SINGLE_PIECE_WORDS
        with connect() as client:
            for req in self.bad_requests(client, words):
                send = client.fill if isinstance(req, FillRequest) else client.encode
                with pytest.raises(ProviderError) as excinfo:
                    send(req)
                assert excinfo.value.code == "bad_request", req
            # the connection is still perfectly usable
            resp = client.fill(
                FillRequest(client.next_request_id(), "mask", words, 2, 3, 0)
            )
            assert len(resp.candidates) == 3

    def test_sequence_overflow_is_bad_request_not_disconnect(self, connect, provider):
        too_many = ("the",) * provider.max_length
        with connect() as client:
            with pytest.raises(ProviderError) as excinfo:
                client.encode(EncodeRequest(client.next_request_id(), too_many, 0))
            assert excinfo.value.code == "bad_request"
            enc = client.encode(
                EncodeRequest(client.next_request_id(), ("still", "alive"), 1)
            )
            assert len(enc.vectors) == 2


class TestPipeliningFuzz:
    def test_many_interleaved_requests_stay_paired(self, connect):
        rng = random.Random(20)
        vocabulary = SINGLE_PIECE_WORDS + MULTI_PIECE_WORDS
        with connect() as client:
            requests = []
            for _ in range(60):
                words = tuple(
                    rng.choice(vocabulary) for _ in range(rng.randint(1, 6))
                )
                index = rng.randrange(len(words))
                kind = rng.choice(("mask", "dropout", "encode"))
                if kind == "encode":
                    req = EncodeRequest(client.next_request_id(), words, index)
                elif kind == "mask":
                    req = FillRequest(
                        client.next_request_id(), "mask", words, index, 4, rng.randrange(5)
                    )
                else:
                    req = FillRequest(
                        client.next_request_id(),
                        "dropout",
                        words,
                        index,
                        4,
                        rng.randrange(5),
                        dropout_p=0.3,
                    )
                client.send_request(req)
                requests.append(req)
            rng.shuffle(requests)
            for req in requests:
                msg = client.wait_for(req.request_id)
                assert msg.request_id == req.request_id
                if isinstance(req, EncodeRequest):
                    assert isinstance(msg, ContextualEncoding)
                    assert len(msg.vectors) == len(req.tokens)
                    assert sum(msg.attention) == pytest.approx(1.0, abs=1e-9)
                else:
                    assert isinstance(msg, FillResponse)
                    assert 0 < len(msg.candidates) <= 4

    def test_two_connections_see_the_same_model(self, connect):
        req_tokens = ("the", "quick", "fox")
        with connect() as a, connect() as b:
            ra = a.fill(FillRequest(a.next_request_id(), "mask", req_tokens, 1, 5, 0))
            rb = b.fill(FillRequest(b.next_request_id(), "mask", req_tokens, 1, 5, 0))
            assert ra.candidates == rb.candidates
