"""Wire protocol and client for language-model candidate providers.

Masked-fill and dropout-fill candidate generation, plus contextual token
encodings for similarity re-ranking, are served by a separate process
speaking a small framed protocol: each message is a 4-byte big-endian
length prefix followed by UTF-8 JSON.  A connection opens with a version
handshake; after that the client may pipeline requests and responses are
matched by request_id, so they can arrive out of order.

The module also ships a deterministic toy provider that fakes both
operations with seeded random unit vectors.  It is fast, dependency-free
and bit-exact across runs, which makes transferability experiments and
the protocol test suite reproducible without any real language model.
"""
from __future__ import annotations

import hashlib
import itertools
import json
import socket
import socketserver
import struct
import threading
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

PROTOCOL_VERSION = 1
MASK_SENTINEL = "<mask>"
MAX_FRAME_BYTES = 16 * 1024 * 1024

_LEN = struct.Struct(">I")


class ProtocolError(Exception):
    """The byte stream or a message violated the protocol."""


class ProviderError(Exception):
    """A provider request failed.

    retriable is True for transient conditions (timeouts, connection
    loss) where re-sending the same request may succeed.
    """

    def __init__(self, message: str, code: str = "internal", retriable: bool = False):
        super().__init__(message)
        self.code = code
        self.retriable = retriable


class RequestError(ValueError):
    """Semantically invalid request; the connection survives."""


# --------------------------------------------------------------------------
# messages


@dataclass(frozen=True)
class Hello:
    version: int


@dataclass(frozen=True)
class FillRequest:
    request_id: str
    kind: str  # "mask" | "dropout"
    tokens: tuple[str, ...]
    target_index: int
    top_k: int
    seed: int
    dropout_p: float | None = None


@dataclass(frozen=True)
class FillResponse:
    request_id: str
    candidates: tuple[tuple[str, float], ...]


@dataclass(frozen=True)
class EncodeRequest:
    request_id: str
    tokens: tuple[str, ...]
    target_index: int


@dataclass(frozen=True)
class ContextualEncoding:
    request_id: str
    vectors: tuple[tuple[float, ...], ...]
    attention: tuple[float, ...]


@dataclass(frozen=True)
class ErrorMessage:
    request_id: str | None
    code: str
    message: str


Message = Hello | FillRequest | FillResponse | EncodeRequest | ContextualEncoding | ErrorMessage


def _need(obj: dict, key: str, types) -> object:
    if key not in obj:
        raise ProtocolError(f"missing field {key!r}")
    value = obj[key]
    if not isinstance(value, types):
        raise ProtocolError(f"field {key!r} has wrong type")
    return value


def _str_list(obj: dict, key: str) -> tuple[str, ...]:
    value = _need(obj, key, list)
    if not all(isinstance(x, str) for x in value):
        raise ProtocolError(f"field {key!r} must be a list of strings")
    return tuple(value)


def message_to_dict(msg: Message) -> dict:
    if isinstance(msg, Hello):
        return {"type": "hello", "version": msg.version}
    if isinstance(msg, FillRequest):
        out = {
            "type": "fill",
            "request_id": msg.request_id,
            "kind": msg.kind,
            "tokens": list(msg.tokens),
            "target_index": msg.target_index,
            "top_k": msg.top_k,
            "seed": msg.seed,
        }
        if msg.dropout_p is not None:
            out["dropout_p"] = msg.dropout_p
        return out
    if isinstance(msg, FillResponse):
        return {
            "type": "fill_result",
            "request_id": msg.request_id,
            "candidates": [[w, s] for w, s in msg.candidates],
        }
    if isinstance(msg, EncodeRequest):
        return {
            "type": "encode",
            "request_id": msg.request_id,
            "tokens": list(msg.tokens),
            "target_index": msg.target_index,
        }
    if isinstance(msg, ContextualEncoding):
        return {
            "type": "encode_result",
            "request_id": msg.request_id,
            "vectors": [list(v) for v in msg.vectors],
            "attention": list(msg.attention),
        }
    if isinstance(msg, ErrorMessage):
        return {
            "type": "error",
            "request_id": msg.request_id,
            "code": msg.code,
            "message": msg.message,
        }
    raise TypeError(f"not a protocol message: {type(msg)!r}")


def message_from_dict(obj: object) -> Message:
    """Structural decoding; raises ProtocolError on malformed input."""
    if not isinstance(obj, dict):
        raise ProtocolError("message must be a JSON object")
    mtype = _need(obj, "type", str)
    if mtype == "hello":
        version = _need(obj, "version", int)
        if isinstance(version, bool):
            raise ProtocolError("field 'version' has wrong type")
        return Hello(version)
    if mtype == "fill":
        dropout_p = obj.get("dropout_p")
        if dropout_p is not None and not isinstance(dropout_p, (int, float)):
            raise ProtocolError("field 'dropout_p' has wrong type")
        return FillRequest(
            request_id=str(_need(obj, "request_id", str)),
            kind=str(_need(obj, "kind", str)),
            tokens=_str_list(obj, "tokens"),
            target_index=int(_need(obj, "target_index", int)),
            top_k=int(_need(obj, "top_k", int)),
            seed=int(_need(obj, "seed", int)),
            dropout_p=float(dropout_p) if dropout_p is not None else None,
        )
    if mtype == "fill_result":
        raw = _need(obj, "candidates", list)
        candidates = []
        for item in raw:
            if (
                not isinstance(item, list)
                or len(item) != 2
                or not isinstance(item[0], str)
                or not isinstance(item[1], (int, float))
                or isinstance(item[1], bool)
            ):
                raise ProtocolError("bad candidate entry")
            candidates.append((item[0], float(item[1])))
        return FillResponse(str(_need(obj, "request_id", str)), tuple(candidates))
    if mtype == "encode":
        return EncodeRequest(
            request_id=str(_need(obj, "request_id", str)),
            tokens=_str_list(obj, "tokens"),
            target_index=int(_need(obj, "target_index", int)),
        )
    if mtype == "encode_result":
        raw_vectors = _need(obj, "vectors", list)
        vectors = []
        for vec in raw_vectors:
            if not isinstance(vec, list) or not all(
                isinstance(x, (int, float)) and not isinstance(x, bool) for x in vec
            ):
                raise ProtocolError("bad encoding vector")
            vectors.append(tuple(float(x) for x in vec))
        raw_attention = _need(obj, "attention", list)
        if not all(
            isinstance(x, (int, float)) and not isinstance(x, bool)
            for x in raw_attention
        ):
            raise ProtocolError("bad attention profile")
        return ContextualEncoding(
            str(_need(obj, "request_id", str)),
            tuple(vectors),
            tuple(float(x) for x in raw_attention),
        )
    if mtype == "error":
        rid = obj.get("request_id")
        if rid is not None and not isinstance(rid, str):
            raise ProtocolError("field 'request_id' has wrong type")
        return ErrorMessage(rid, str(_need(obj, "code", str)), str(_need(obj, "message", str)))
    raise ProtocolError(f"unknown message type {mtype!r}")


def validate_request(msg: Message) -> None:
    """Semantic validation of fill/encode requests (server side)."""
    if isinstance(msg, FillRequest):
        if msg.kind not in ("mask", "dropout"):
            raise RequestError(f"unknown fill kind {msg.kind!r}")
        if not msg.tokens:
            raise RequestError("fill needs at least one token")
        if not (0 <= msg.target_index < len(msg.tokens)):
            raise RequestError("target_index out of range")
        if msg.top_k < 0:
            raise RequestError("top_k must be >= 0")
        if msg.kind == "dropout":
            if msg.dropout_p is None:
                raise RequestError("dropout fill needs dropout_p")
            if not (0.0 <= msg.dropout_p < 1.0):
                raise RequestError("dropout_p must be in [0, 1)")
        elif msg.dropout_p is not None:
            raise RequestError("dropout_p only applies to dropout fills")
    elif isinstance(msg, EncodeRequest):
        if not msg.tokens:
            raise RequestError("encode needs at least one token")
        if not (0 <= msg.target_index < len(msg.tokens)):
            raise RequestError("target_index out of range")


# --------------------------------------------------------------------------
# framing


def encode_frame(msg: Message) -> bytes:
    payload = json.dumps(message_to_dict(msg), ensure_ascii=False).encode("utf-8")
    if len(payload) > MAX_FRAME_BYTES:
        raise ProtocolError("frame too large")
    return _LEN.pack(len(payload)) + payload


def decode_frame(payload: bytes) -> Message:
    try:
        obj = json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"bad frame payload: {exc}") from exc
    return message_from_dict(obj)


def _recv_exact(sock: socket.socket, n: int) -> bytes | None:
    """Read exactly n bytes; None on clean EOF at a frame boundary."""
    chunks: list[bytes] = []
    remaining = n
    while remaining:
        chunk = sock.recv(remaining)
        if not chunk:
            if chunks:
                raise ProtocolError("connection closed mid-frame")
            return None
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def send_message(sock: socket.socket, msg: Message) -> None:
    sock.sendall(encode_frame(msg))


def recv_message(sock: socket.socket) -> Message | None:
    header = _recv_exact(sock, 4)
    if header is None:
        return None
    (length,) = _LEN.unpack(header)
    if length > MAX_FRAME_BYTES:
        raise ProtocolError("frame length exceeds limit")
    payload = _recv_exact(sock, length)
    if payload is None:
        raise ProtocolError("connection closed mid-frame")
    return decode_frame(payload)


# --------------------------------------------------------------------------
# client


class Client:
    """Blocking protocol client with request pipelining support.

    fill()/encode() send one request and wait for the response with the
    matching request_id, buffering any other responses that arrive first.
    send_request()/wait_for() expose the same machinery for callers that
    want many requests in flight.  Not thread-safe; use one Client per
    thread.
    """

    def __init__(self, sock: socket.socket):
        self._sock = sock
        self._pending: dict[str, Message] = {}
        self._ids = itertools.count()
        self._closed = False

    @classmethod
    def connect(cls, endpoint: str, timeout: float = 10.0) -> "Client":
        host, sep, port = endpoint.rpartition(":")
        if not sep or not port.isdigit():
            raise ValueError(f"endpoint must be host:port, got {endpoint!r}")
        try:
            sock = socket.create_connection((host or "127.0.0.1", int(port)), timeout)
        except OSError as exc:
            raise ProviderError(
                f"cannot connect to {endpoint}: {exc}", code="connect", retriable=True
            ) from exc
        sock.settimeout(timeout)
        client = cls(sock)
        try:
            send_message(sock, Hello(PROTOCOL_VERSION))
            reply = client._recv()
            if isinstance(reply, ErrorMessage):
                raise ProviderError(reply.message, code=reply.code)
            if not isinstance(reply, Hello) or reply.version != PROTOCOL_VERSION:
                raise ProviderError("provider version handshake failed", code="handshake")
        except BaseException:
            client.close()
            raise
        return client

    def _recv(self) -> Message:
        try:
            msg = recv_message(self._sock)
        except socket.timeout as exc:
            raise ProviderError("provider timed out", code="timeout", retriable=True) from exc
        except OSError as exc:
            raise ProviderError(f"connection error: {exc}", code="io", retriable=True) from exc
        if msg is None:
            raise ProviderError("provider closed the connection", code="closed", retriable=True)
        return msg

    def next_request_id(self) -> str:
        return f"c{next(self._ids)}"

    def send_request(self, msg: FillRequest | EncodeRequest) -> None:
        try:
            send_message(self._sock, msg)
        except socket.timeout as exc:
            raise ProviderError("provider timed out", code="timeout", retriable=True) from exc
        except OSError as exc:
            raise ProviderError(f"connection error: {exc}", code="io", retriable=True) from exc

    def wait_for(self, request_id: str) -> Message:
        if request_id in self._pending:
            return self._pending.pop(request_id)
        while True:
            msg = self._recv()
            rid = getattr(msg, "request_id", None)
            if isinstance(msg, ErrorMessage):
                if msg.request_id is None or msg.request_id == request_id:
                    raise ProviderError(msg.message, code=msg.code)
                self._pending[msg.request_id] = msg
                continue
            if rid == request_id:
                return msg
            if rid is None:
                raise ProtocolError("unexpected unaddressed message")
            self._pending[rid] = msg

    def fill(self, req: FillRequest) -> FillResponse:
        self.send_request(req)
        msg = self.wait_for(req.request_id)
        if not isinstance(msg, FillResponse):
            raise ProtocolError("fill got a non-fill response")
        return msg

    def encode(self, req: EncodeRequest) -> ContextualEncoding:
        self.send_request(req)
        msg = self.wait_for(req.request_id)
        if not isinstance(msg, ContextualEncoding):
            raise ProtocolError("encode got a non-encode response")
        return msg

    def close(self) -> None:
        if not self._closed:
            self._closed = True
            try:
                self._sock.close()
            except OSError:
                pass

    def __enter__(self) -> "Client":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


# --------------------------------------------------------------------------
# toy provider


def _word_seed(*parts: str) -> int:
    """Stable 64-bit seed from strings (process-salt free, unlike hash())."""
    digest = hashlib.blake2b("\x00".join(parts).encode("utf-8"), digest_size=8)
    return int.from_bytes(digest.digest(), "big")


class ToyLanguageModel:
    """Deterministic stand-in provider over a fixed vocabulary.

    Every word gets a unit vector drawn from a generator seeded by a
    stable hash of the word, so vectors agree across processes and runs.
    Contextual encodings blend each token with half of each neighbour;
    attention around the target decays exponentially with distance.
    Mask fills rank the vocabulary against the mean of the two neighbour
    vectors; dropout fills rank it against the target's vector with a
    seeded fraction of coordinates zeroed.
    """

    def __init__(self, vocabulary: Sequence[str], dim: int = 32):
        if dim < 2:
            raise ValueError("dim must be >= 2")
        words = sorted(set(vocabulary))
        if MASK_SENTINEL in words:
            words.remove(MASK_SENTINEL)
        if not words:
            raise ValueError("toy model needs a non-empty vocabulary")
        self.dim = dim
        self.vocabulary = words
        self._vocab_matrix = np.stack([self._base_vector(w) for w in words])
        self._cache: dict[str, np.ndarray] = dict(zip(words, self._vocab_matrix))

    def _base_vector(self, word: str) -> np.ndarray:
        cached = getattr(self, "_cache", None)
        if cached is not None and word in cached:
            return cached[word]
        rng = np.random.default_rng(_word_seed(word))
        vec = rng.standard_normal(self.dim)
        vec /= np.linalg.norm(vec)
        if cached is not None:
            cached[word] = vec
        return vec

    def encode(self, req: EncodeRequest) -> ContextualEncoding:
        validate_request(req)
        base = [self._base_vector(tok) for tok in req.tokens]
        n = len(base)
        vectors: list[tuple[float, ...]] = []
        for i in range(n):
            mixed = base[i].copy()
            if i > 0:
                mixed += 0.5 * base[i - 1]
            if i < n - 1:
                mixed += 0.5 * base[i + 1]
            mixed /= np.linalg.norm(mixed)
            vectors.append(tuple(float(x) for x in mixed))
        raw = np.exp(-np.abs(np.arange(n) - req.target_index).astype(np.float64))
        att = raw / raw.sum()
        return ContextualEncoding(req.request_id, tuple(vectors), tuple(float(x) for x in att))

    def fill(self, req: FillRequest) -> FillResponse:
        validate_request(req)
        if req.kind == "mask":
            reference = np.zeros(self.dim)
            count = 0
            for j in (req.target_index - 1, req.target_index + 1):
                if 0 <= j < len(req.tokens):
                    reference += self._base_vector(req.tokens[j])
                    count += 1
            if count:
                reference /= count
        else:
            word = req.tokens[req.target_index]
            reference = self._base_vector(word).copy()
            n_drop = int(round(req.dropout_p * self.dim))
            if n_drop:
                rng = np.random.default_rng(_word_seed(word, str(req.seed)))
                drop = rng.choice(self.dim, size=n_drop, replace=False)
                reference[drop] = 0.0
        norm = np.linalg.norm(reference)
        if norm > 0.0:
            scores = self._vocab_matrix @ (reference / norm)
        else:
            scores = np.zeros(len(self.vocabulary))
        order = sorted(
            range(len(self.vocabulary)),
            key=lambda i: (-scores[i], self.vocabulary[i]),
        )
        top = order[: req.top_k]
        return FillResponse(
            req.request_id,
            tuple((self.vocabulary[i], float(scores[i])) for i in top),
        )


# --------------------------------------------------------------------------
# server


class ProtocolServer(socketserver.ThreadingTCPServer):
    """Serves any provider with fill()/encode() over the framed protocol.

    Malformed frames and handshake failures produce an error message and
    close the connection; semantically invalid requests produce an error
    response addressed to the offending request_id and the connection
    stays open.
    """

    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, provider, host: str = "127.0.0.1", port: int = 0):
        self.provider = provider
        super().__init__((host, port), _ProviderHandler)

    @property
    def endpoint(self) -> str:
        host, port = self.server_address[:2]
        return f"{host}:{port}"


class _ProviderHandler(socketserver.BaseRequestHandler):
    def handle(self) -> None:
        sock: socket.socket = self.request
        sock.settimeout(60.0)
        try:
            opening = recv_message(sock)
        except (ProtocolError, OSError):
            self._bail(sock, None, "malformed", "bad handshake frame")
            return
        if not isinstance(opening, Hello):
            self._bail(sock, None, "malformed", "expected hello")
            return
        if opening.version != PROTOCOL_VERSION:
            self._bail(
                sock,
                None,
                "unsupported_version",
                f"server speaks version {PROTOCOL_VERSION}",
            )
            return
        try:
            send_message(sock, Hello(PROTOCOL_VERSION))
        except OSError:
            return
        while True:
            try:
                msg = recv_message(sock)
            except ProtocolError as exc:
                self._bail(sock, None, "malformed", str(exc))
                return
            except OSError:
                return
            if msg is None:
                return
            if not isinstance(msg, (FillRequest, EncodeRequest)):
                self._bail(sock, None, "malformed", "expected fill or encode")
                return
            try:
                if isinstance(msg, FillRequest):
                    reply: Message = self.server.provider.fill(msg)
                else:
                    reply = self.server.provider.encode(msg)
            except RequestError as exc:
                reply = ErrorMessage(msg.request_id, "bad_request", str(exc))
            except Exception as exc:  # provider bug: report, keep serving
                reply = ErrorMessage(msg.request_id, "internal", str(exc))
            try:
                send_message(sock, reply)
            except OSError:
                return

    @staticmethod
    def _bail(sock: socket.socket, rid: str | None, code: str, message: str) -> None:
        try:
            send_message(sock, ErrorMessage(rid, code, message))
        except OSError:
            pass
        try:
            sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        sock.close()


def start_server(provider, host: str = "127.0.0.1", port: int = 0) -> ProtocolServer:
    """Start a provider server on a background thread; returns the server."""
    server = ProtocolServer(provider, host, port)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server


def load_vocabulary(path) -> list[str]:
    """One word per line; blank lines ignored."""
    words: list[str] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            word = line.strip()
            if word:
                words.append(word)
    if not words:
        raise ValueError(f"{path}: empty vocabulary file")
    return words
