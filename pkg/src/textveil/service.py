"""Interactive rewriting sessions over HTTP.

create_app() builds a FastAPI application that holds rewriting sessions
in memory.  A session wraps one document and one classifier: the client
creates it from raw text, inspects per-word importance, browses
substitution candidates with their exact effect on the classifier
score, applies or reverts edits, asks for a fully automatic rewrite,
and finally exports the edited text with quality metrics.

All responses carry "v": 1 so clients can detect schema drift.  The
reported probability is the logistic link sigma(o_y) applied to the
model's raw score for the session label; for hinge-trained models this
is a monotone squash of the margin rather than a calibrated estimate.

Sessions are transient: anything idle longer than the TTL is dropped.
State mutations take a per-session lock, so concurrent edits serialize
instead of corrupting the edit stack.
"""
from __future__ import annotations

import itertools
import json
import math
import threading
import time
import uuid
from dataclasses import dataclass, field, replace

from fastapi import FastAPI, HTTPException
from fastapi.responses import StreamingResponse
from pydantic import BaseModel, Field

from .attack import (
    AttackConfig,
    AttackProviders,
    Edit,
    generate_candidates,
    omission_scores,
    run_attack,
    select_targets,
)
from .classify import FeatureSpace, LinearClassifier, logit, predict
from .corpus import WORD, Document, detokenize, preprocess
from .evaluation import meteor

SCHEMA_VERSION = 1


def _sigmoid(x: float) -> float:
    # Guard against overflow for extreme scores.
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@dataclass
class Session:
    id: str
    model_name: str
    label: str
    original: Document
    current: Document
    edit_stack: list[Edit] = field(default_factory=list)
    last_access: float = 0.0
    lock: threading.Lock = field(default_factory=threading.Lock)


class CreateBody(BaseModel):
    text: str
    label: str
    model: str | None = None


class EditBody(BaseModel):
    position: int
    surface: str


class AutoBody(BaseModel):
    generator: str
    mode: str = "loop_nocheck"
    k_targets: int = Field(default=50, ge=1)
    top_k: int = Field(default=10, ge=1)
    n_synonyms: int = Field(default=50, ge=1)
    delta: float = 0.7
    dropout_p: float = 0.3
    rerank: str = "none"
    seed: int = 0


def create_app(
    models: dict[str, tuple[LinearClassifier, FeatureSpace]],
    default_model: str | None = None,
    providers: AttackProviders | None = None,
    session_ttl: float = 3600.0,
    clock=time.monotonic,
) -> FastAPI:
    if not models:
        raise ValueError("the service needs at least one model")
    if default_model is None:
        default_model = next(iter(models))
    if default_model not in models:
        raise ValueError(f"default model {default_model!r} not in models")
    if session_ttl <= 0:
        raise ValueError("session_ttl must be positive")
    if providers is None:
        providers = AttackProviders()

    app = FastAPI(title="textveil", version="1")
    sessions: dict[str, Session] = {}
    registry_lock = threading.Lock()
    ids = itertools.count(1)

    def purge() -> None:
        now = clock()
        with registry_lock:
            dead = [
                sid
                for sid, sess in sessions.items()
                if now - sess.last_access > session_ttl
            ]
            for sid in dead:
                del sessions[sid]

    def get_session(sid: str) -> Session:
        purge()
        with registry_lock:
            sess = sessions.get(sid)
            if sess is None:
                raise HTTPException(404, f"no session {sid!r}")
            sess.last_access = clock()
            return sess

    def model_for(sess: Session) -> tuple[LinearClassifier, FeatureSpace]:
        return models[sess.model_name]

    def scored_state(sess: Session) -> dict:
        model, space = model_for(sess)
        o_y = logit(model, space, sess.current, sess.label)
        prediction = predict(model, space, sess.current)
        return {
            "v": SCHEMA_VERSION,
            "session": sess.id,
            "model": sess.model_name,
            "label": sess.label,
            "tokens": [
                {"surface": t.surface, "kind": t.kind} for t in sess.current.tokens
            ],
            "prediction": prediction,
            "logit": o_y,
            "probability": _sigmoid(o_y),
            "flipped": prediction != sess.label,
            "edit_count": len(sess.edit_stack),
        }

    @app.get("/health")
    def health() -> dict:
        purge()
        return {
            "v": SCHEMA_VERSION,
            "models": sorted(models),
            "default_model": default_model,
            "sessions": len(sessions),
            "generators_available": {
                "leet": True,
                "flip": True,
                "space": True,
                "ws": providers.embeddings is not None,
                "mb": providers.lm is not None,
                "db": providers.lm is not None,
            },
        }

    @app.post("/session", status_code=201)
    def create_session(body: CreateBody) -> dict:
        purge()
        name = body.model if body.model is not None else default_model
        if name not in models:
            raise HTTPException(400, f"unknown model {name!r}")
        model, _ = models[name]
        if body.label not in model.label_set:
            raise HTTPException(
                400, f"label {body.label!r} not in {list(model.label_set)}"
            )
        tokens = preprocess(body.text)
        if not tokens:
            raise HTTPException(400, "text produced no tokens")
        doc = Document.from_tokens("session", tuple(tokens), body.label)
        sess = Session(
            id=uuid.uuid4().hex[:12] + format(next(ids), "x"),
            model_name=name,
            label=body.label,
            original=doc,
            current=doc,
            last_access=clock(),
        )
        with registry_lock:
            sessions[sess.id] = sess
        return scored_state(sess)

    @app.get("/session/{sid}")
    def get_state(sid: str) -> dict:
        sess = get_session(sid)
        with sess.lock:
            return scored_state(sess)

    @app.get("/session/{sid}/importance")
    def importance(sid: str) -> dict:
        sess = get_session(sid)
        model, space = model_for(sess)
        with sess.lock:
            ranking = omission_scores(model, space, sess.current, sess.label)
            order = select_targets(ranking, k=len(sess.current.tokens) or 1)
            return {
                "v": SCHEMA_VERSION,
                "session": sess.id,
                # Scores reflect the working document as of this many edits;
                # clients can detect staleness by comparing edit_count.
                "edit_count": len(sess.edit_stack),
                "scores": [
                    {
                        "position": i,
                        "surface": sess.current.tokens[i].surface,
                        "score": ranking.scores[i],
                        "attackable": ranking.attackable[i],
                    }
                    for i in range(len(sess.current.tokens))
                ],
                "order": order,
                "prediction": ranking.predicted,
            }

    @app.get("/session/{sid}/candidates")
    def candidates(sid: str, position: int, generator: str, limit: int = 10) -> dict:
        sess = get_session(sid)
        model, space = model_for(sess)
        if limit < 1:
            raise HTTPException(400, "limit must be >= 1")
        with sess.lock:
            tokens = sess.current.tokens
            if not (0 <= position < len(tokens)):
                raise HTTPException(400, f"position {position} out of range")
            if tokens[position].kind != WORD:
                raise HTTPException(400, f"token at {position} is not a word")
            try:
                config = AttackConfig(
                    generator=generator, top_k=limit, n_synonyms=limit
                )
            except ValueError as exc:
                raise HTTPException(400, str(exc)) from exc
            surfaces = sess.current.surfaces()
            try:
                cands = generate_candidates(config, providers, surfaces, position)
            except ValueError as exc:
                # Generator needs a provider this service was not started with.
                raise HTTPException(503, str(exc)) from exc
            base = logit(model, space, sess.current, sess.label)
            out = []
            for cand in cands[:limit]:
                variant = replace(
                    sess.current,
                    tokens=tuple(
                        replace(t, surface=cand.surface) if i == position else t
                        for i, t in enumerate(tokens)
                    ),
                )
                o_y = logit(model, space, variant, sess.label)
                out.append(
                    {
                        "surface": cand.surface,
                        "source": cand.source,
                        "generator_score": cand.score,
                        "logit": o_y,
                        "probability": _sigmoid(o_y),
                        "delta_logit": o_y - base,
                        "delta_probability": _sigmoid(o_y) - _sigmoid(base),
                        "flips": predict(model, space, variant) != sess.label,
                    }
                )
            out.sort(key=lambda c: (c["logit"], c["surface"]))
            return {
                "v": SCHEMA_VERSION,
                "session": sess.id,
                "position": position,
                "original": tokens[position].surface,
                "base_logit": base,
                "candidates": out,
            }

    @app.post("/session/{sid}/edit")
    def edit(sid: str, body: EditBody) -> dict:
        sess = get_session(sid)
        with sess.lock:
            tokens = sess.current.tokens
            if not (0 <= body.position < len(tokens)):
                raise HTTPException(400, f"position {body.position} out of range")
            if tokens[body.position].kind != WORD:
                raise HTTPException(400, f"token at {body.position} is not a word")
            surface = body.surface.strip().lower()
            if not surface or "\n" in surface:
                raise HTTPException(400, "replacement surface must be a word")
            # One edit per position: re-editing a slot replaces its prior
            # entry, so each stack record maps the pristine surface to the
            # current one and a revert returns the slot to the original.
            pristine = sess.original.tokens[body.position].surface
            record = Edit(body.position, pristine, surface)
            sess.current = replace(
                sess.current,
                tokens=tuple(
                    replace(t, surface=surface) if i == body.position else t
                    for i, t in enumerate(tokens)
                ),
            )
            sess.edit_stack = [
                e for e in sess.edit_stack if e.position != body.position
            ]
            sess.edit_stack.append(record)
            state = scored_state(sess)
            state["edit"] = {
                "position": record.position,
                "before": record.original,
                "after": record.replacement,
            }
            return state

    @app.post("/session/{sid}/revert")
    def revert(sid: str) -> dict:
        sess = get_session(sid)
        with sess.lock:
            if not sess.edit_stack:
                raise HTTPException(400, "nothing to revert")
            record = sess.edit_stack.pop()
            tokens = sess.current.tokens
            sess.current = replace(
                sess.current,
                tokens=tuple(
                    replace(t, surface=record.original)
                    if i == record.position
                    else t
                    for i, t in enumerate(tokens)
                ),
            )
            state = scored_state(sess)
            state["reverted"] = {
                "position": record.position,
                "before": record.replacement,
                "after": record.original,
            }
            return state

    @app.post("/session/{sid}/auto")
    def auto(sid: str, body: AutoBody) -> StreamingResponse:
        sess = get_session(sid)
        model, space = model_for(sess)
        try:
            config = AttackConfig(
                generator=body.generator,
                mode=body.mode,
                k_targets=body.k_targets,
                top_k=body.top_k,
                n_synonyms=body.n_synonyms,
                delta=body.delta,
                dropout_p=body.dropout_p,
                rerank=body.rerank,
                seed=body.seed,
            )
        except ValueError as exc:
            raise HTTPException(400, str(exc)) from exc
        events: list[dict] = []

        def on_edit(event) -> None:
            events.append(
                {
                    "v": SCHEMA_VERSION,
                    "type": "edit",
                    "position": event.edit.position,
                    "original": event.edit.original,
                    "replacement": event.edit.replacement,
                    "logit": event.logit_after,
                    "probability": None
                    if event.logit_after is None
                    else _sigmoid(event.logit_after),
                    "flipped": event.flipped,
                }
            )

        # The run works on a snapshot of the current state and never
        # mutates the session; the client applies any edits it wants
        # to keep through /edit.
        with sess.lock:
            snapshot = sess.current
        try:
            result = run_attack(
                model, space, snapshot, sess.label, config, providers, on_edit
            )
        except ValueError as exc:
            raise HTTPException(503, str(exc)) from exc

        def stream():
            yield json.dumps(
                {
                    "v": SCHEMA_VERSION,
                    "type": "start",
                    "session": sess.id,
                    "generator": config.generator,
                    "mode": config.mode,
                },
                sort_keys=True,
            ) + "\n"
            for event in events:
                yield json.dumps(event, sort_keys=True) + "\n"
            yield json.dumps(
                {
                    "v": SCHEMA_VERSION,
                    "type": "done",
                    "flipped": result.flipped,
                    "final_logit": result.final_logit,
                    "final_probability": _sigmoid(result.final_logit),
                    "queries": result.queries,
                    "edit_count": len(result.edits),
                    "skipped_positions": list(result.skipped_positions),
                    "text": detokenize(result.document.tokens),
                },
                sort_keys=True,
            ) + "\n"

        return StreamingResponse(stream(), media_type="application/x-ndjson")

    @app.get("/session/{sid}/export")
    def export(sid: str) -> dict:
        sess = get_session(sid)
        model, space = model_for(sess)
        with sess.lock:
            effective = []
            for i, (before, after) in enumerate(
                zip(sess.original.tokens, sess.current.tokens)
            ):
                if before.surface != after.surface:
                    effective.append(
                        {
                            "position": i,
                            "before": before.surface,
                            "after": after.surface,
                        }
                    )
            state = scored_state(sess)
            ref = sess.original.surfaces()
            hyp = sess.current.surfaces()
            state.update(
                {
                    "original_text": detokenize(sess.original.tokens),
                    "text": detokenize(sess.current.tokens),
                    "edits": effective,
                    "meteor": meteor(ref, hyp),
                    "change_rate": len(effective) / len(ref),
                }
            )
            return state

    @app.delete("/session/{sid}")
    def drop(sid: str) -> dict:
        purge()
        with registry_lock:
            if sid not in sessions:
                raise HTTPException(404, f"no session {sid!r}")
            del sessions[sid]
        return {"v": SCHEMA_VERSION, "dropped": sid}

    return app
