"""Command-line entry points.

Subcommands cover the full experiment loop: synth generates paired
corpora, train fits a classifier, attack rewrites documents against it,
eval scores attack outputs against held-out target models, toy-lm runs
the deterministic provider, and serve starts the interactive session
service.  Every run that produces files also writes a manifest capturing
the resolved configuration, so a rerun from the same manifest reproduces
the output byte for byte.

Exit codes: 0 success, 1 usage or configuration error, 2 data error
(unreadable or malformed inputs), 3 provider error (LM endpoint
unreachable or misbehaving).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .attack import AttackConfig, AttackProviders, run_attack
from .classify import (
    LR_FEATURES,
    NGRAM_FEATURES,
    load_model,
    save_model,
    train_from_corpus,
)
from .corpus import (
    Corpus,
    build_corpus,
    load_documents,
    load_tweets,
    sample_attack_set,
    save_documents,
    save_tweets,
    split_corpus,
)
from .embeddings import load_store, save_store
from .evaluation import ReportGrid, accuracy, build_report
from .lm_bridge import (
    Client,
    EncodeRequest,
    ProtocolError,
    ProviderError,
    ToyLanguageModel,
    load_vocabulary,
    start_server,
)
from .synth import SynthConfig, generate

ATTACK_RESULTS_FORMAT = "textveil-attack"
ATTACK_RESULTS_VERSION = 1

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_PROVIDER = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def _dump_json(obj: object) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False)


def write_manifest(path: Path, command: str, arguments: dict, outputs: dict) -> None:
    manifest = {
        "format": "textveil-manifest",
        "version": 1,
        "tool": "textveil",
        "tool_version": __version__,
        "command": command,
        "arguments": arguments,
        "outputs": outputs,
    }
    path.write_text(_dump_json(manifest) + "\n", encoding="utf-8")


# --------------------------------------------------------------------------
# synth


def cmd_synth(args: argparse.Namespace) -> int:
    config = SynthConfig(
        seed=args.seed,
        delta_shift=args.delta_shift,
        authors_per_class=args.authors_per_class,
        tweets_per_author=args.tweets_per_author,
        tokens_per_tweet=args.tokens_per_tweet,
        tweets_per_doc=args.tweets_per_doc,
        vocab_size=args.vocab_size,
        markers_per_class=args.markers_per_class,
        marker_rate=args.marker_rate,
    )
    data = generate(config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_tweets(out_dir / "substitute.tweets.jsonl", data.substitute_tweets)
    save_tweets(out_dir / "target.tweets.jsonl", data.target_tweets)
    save_store(out_dir / "embeddings.txt", data.store)
    (out_dir / "vocabulary.txt").write_text(
        "\n".join(data.vocabulary()) + "\n", encoding="utf-8"
    )
    write_manifest(
        out_dir / "synth.manifest.json",
        "synth",
        asdict(config),
        {
            "substitute_tweets": str(out_dir / "substitute.tweets.jsonl"),
            "target_tweets": str(out_dir / "target.tweets.jsonl"),
            "embeddings": str(out_dir / "embeddings.txt"),
            "vocabulary": str(out_dir / "vocabulary.txt"),
        },
    )
    print(
        f"wrote {len(data.substitute_tweets)} substitute and "
        f"{len(data.target_tweets)} target tweets to {out_dir}"
    )
    return EXIT_OK


# --------------------------------------------------------------------------
# train


_FEATURE_PRESETS = {"lr": LR_FEATURES, "ngram": NGRAM_FEATURES}


def cmd_train(args: argparse.Namespace) -> int:
    tweets = load_tweets(args.tweets)
    corpus = build_corpus(tweets, Path(args.tweets).stem, args.max_tweets)
    train, test = split_corpus(corpus, args.train_fraction)
    if not train.documents or not test.documents:
        raise ValueError("split produced an empty train or test set")
    features = _FEATURE_PRESETS[args.features]
    model, space = train_from_corpus(
        train.documents, features, args.model_kind, C=args.c, seed=args.seed
    )
    save_model(args.out, model, space)
    held_out = accuracy(model, space, test.documents)
    outputs = {"model": str(args.out)}
    if args.save_split:
        split_dir = Path(args.save_split)
        split_dir.mkdir(parents=True, exist_ok=True)
        save_documents(split_dir / "train.docs.jsonl", train)
        save_documents(split_dir / "test.docs.jsonl", test)
        outputs["train_docs"] = str(split_dir / "train.docs.jsonl")
        outputs["test_docs"] = str(split_dir / "test.docs.jsonl")
    write_manifest(
        Path(str(args.out) + ".manifest.json"),
        "train",
        {
            "tweets": str(args.tweets),
            "model_kind": args.model_kind,
            "features": args.features,
            "max_tweets": args.max_tweets,
            "train_fraction": args.train_fraction,
            "c": args.c,
            "seed": args.seed,
        },
        outputs,
    )
    print(
        f"trained {args.model_kind} on {len(train.documents)} docs "
        f"({space.size} features); held-out accuracy "
        f"{held_out:.4f} on {len(test.documents)} docs"
    )
    return EXIT_OK


# --------------------------------------------------------------------------
# attack


_CONFIG_KEYS = {
    "generator": str,
    "mode": str,
    "k_targets": int,
    "top_k": int,
    "n_synonyms": int,
    "delta": float,
    "dropout_p": float,
    "rerank": str,
    "seed": int,
}


def _parse_config_file(path: str) -> dict:
    """key = value lines; #-comments; bare or quoted strings, ints, floats."""
    out: dict = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip().strip("\"'")
        if key not in _CONFIG_KEYS:
            raise ValueError(f"{path}:{lineno}: unknown attack option {key!r}")
        try:
            out[key] = _CONFIG_KEYS[key](value)
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: bad value for {key!r}: {exc}") from exc
    return out


def _attack_config(args: argparse.Namespace) -> AttackConfig:
    options: dict = {}
    if args.config:
        options.update(_parse_config_file(args.config))
    for key in _CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            options[key] = flag
    if "generator" not in options:
        raise UsageError("an attack needs --generator (or generator= in --config)")
    try:
        return AttackConfig(**options)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


class _ClientPool:
    """One protocol client per worker thread, all closed at the end."""

    def __init__(self, endpoint: str | None):
        self.endpoint = endpoint
        self._local = threading.local()
        self._all: list[Client] = []
        self._lock = threading.Lock()

    def get(self) -> Client | None:
        if self.endpoint is None:
            return None
        client = getattr(self._local, "client", None)
        if client is None:
            client = Client.connect(self.endpoint)
            self._local.client = client
            with self._lock:
                self._all.append(client)
        return client

    def close(self) -> None:
        with self._lock:
            for client in self._all:
                client.close()
            self._all.clear()


def cmd_attack(args: argparse.Namespace) -> int:
    config = _attack_config(args)
    model, space = load_model(args.model)
    corpus = load_documents(args.docs)
    docs = list(corpus.documents)
    if args.sample is not None:
        docs = sample_attack_set(corpus, args.sample)
    if not docs:
        raise ValueError("no documents to attack")
    for doc in docs:
        if doc.label is None:
            raise ValueError("attack documents must be labeled")

    store = load_store(args.embeddings) if args.embeddings else None
    needs_lm = config.generator in ("mb", "db") or config.rerank == "mlm_sim"
    if needs_lm and not args.endpoint:
        raise UsageError(
            f"generator {config.generator!r} / rerank {config.rerank!r} "
            "needs --endpoint"
        )
    if config.generator == "ws" and store is None:
        raise UsageError("generator 'ws' needs --embeddings")
    if config.mode == "loop_check" and store is None:
        raise UsageError("mode 'loop_check' needs --embeddings for the encoder")
    pool = _ClientPool(args.endpoint if needs_lm else None)

    def attack_one(item: tuple[int, object]) -> tuple[int, dict]:
        index, doc = item
        providers = AttackProviders(embeddings=store, lm=pool.get())
        result = run_attack(model, space, doc, doc.label, config, providers)
        record = {
            "index": index,
            "author_id": doc.author_id,
            "label": doc.label,
            "flipped": result.flipped,
            "final_logit": result.final_logit,
            "queries": result.queries,
            "skipped_positions": list(result.skipped_positions),
            "edits": [
                {"position": e.position, "original": e.original, "replacement": e.replacement}
                for e in result.edits
            ],
            "original": doc.surfaces(),
            "adversarial": result.document.surfaces(),
        }
        return index, record

    workers = args.workers if args.workers is not None else (os.cpu_count() or 1)
    if workers < 1:
        raise UsageError("--workers must be >= 1")
    try:
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool_exec:
                records = dict(pool_exec.map(attack_one, enumerate(docs)))
        else:
            records = dict(map(attack_one, enumerate(docs)))
    finally:
        pool.close()

    header = {
        "format": ATTACK_RESULTS_FORMAT,
        "version": ATTACK_RESULTS_VERSION,
        "model": str(args.model),
        "docs": str(args.docs),
        "n_docs": len(docs),
        "config": asdict(config),
    }
    out = Path(args.out)
    with open(out, "w", encoding="utf-8") as fh:
        fh.write(_dump_json(header) + "\n")
        for index in range(len(docs)):
            fh.write(_dump_json(records[index]) + "\n")
    write_manifest(
        Path(str(out) + ".manifest.json"),
        "attack",
        {
            "model": str(args.model),
            "docs": str(args.docs),
            "sample": args.sample,
            "endpoint": args.endpoint,
            "embeddings": args.embeddings,
            "workers": args.workers,
            "config": asdict(config),
        },
        {"results": str(out)},
    )
    flips = sum(1 for r in records.values() if r["flipped"])
    edits = sum(len(r["edits"]) for r in records.values())
    print(
        f"attacked {len(docs)} docs: {flips} flipped the substitute, "
        f"{edits} edits total; results in {out}"
    )
    return EXIT_OK


def load_attack_results(path: str | Path) -> tuple[dict, list[dict]]:
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
        try:
            header = json.loads(first)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: bad results header: {exc}") from exc
        if header.get("format") != ATTACK_RESULTS_FORMAT:
            raise ValueError(f"{path}: not a {ATTACK_RESULTS_FORMAT} file")
        if header.get("version") != ATTACK_RESULTS_VERSION:
            raise ValueError(f"{path}: unsupported results version")
        records = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: bad record: {exc}") from exc
    return header, records


# --------------------------------------------------------------------------
# eval


def _parse_named(values: Sequence[str], what: str) -> list[tuple[str, str]]:
    out = []
    for value in values:
        name, sep, path = value.partition("=")
        if not sep or not name or not path:
            raise UsageError(f"--{what} takes NAME=PATH, got {value!r}")
        out.append((name, path))
    return out


def _attacked_documents(originals: Sequence, records: list[dict]) -> list:
    from .attack import Edit, apply_edits

    if len(records) != len(originals):
        raise ValueError(
            f"attack results cover {len(records)} docs, expected {len(originals)}"
        )
    attacked = []
    for doc, rec in zip(originals, records):
        edits = [
            Edit(e["position"], e["original"], e["replacement"]) for e in rec["edits"]
        ]
        adv = apply_edits(doc, edits)
        if adv.surfaces() != rec["adversarial"]:
            raise ValueError(
                f"doc {rec['index']}: stored adversarial surfaces do not replay"
            )
        attacked.append(adv)
    return attacked


def cmd_eval(args: argparse.Namespace) -> int:
    corpus = load_documents(args.docs)
    docs = list(corpus.documents)
    if args.sample is not None:
        docs = sample_attack_set(corpus, args.sample)
    targets = [(name, load_model(path)) for name, path in _parse_named(args.target, "target")]
    attacked_sets = []
    for name, path in _parse_named(args.attacked or [], "attacked"):
        header, records = load_attack_results(path)
        attacked_sets.append((name, header, records))

    encode = None
    client = None
    if args.endpoint:
        client = Client.connect(args.endpoint)

        def encode(surfaces):  # noqa: F811 - deliberate conditional definition
            enc = client.encode(
                EncodeRequest(client.next_request_id(), tuple(surfaces), 0)
            )
            return np.array(enc.vectors, dtype=np.float64)

    try:
        reports = []
        for target_name, (tmodel, tspace) in targets:
            reports.append(
                build_report(
                    "none",
                    corpus.name,
                    target_name,
                    tmodel,
                    tspace,
                    docs,
                    docs,
                    [0] * len(docs),
                    [0] * len(docs),
                    encode,
                )
            )
            for name, header, records in attacked_sets:
                attacked = _attacked_documents(docs, records)
                reports.append(
                    build_report(
                        name,
                        corpus.name,
                        target_name,
                        tmodel,
                        tspace,
                        docs,
                        attacked,
                        [len(r["edits"]) for r in records],
                        [r["queries"] for r in records],
                        encode,
                    )
                )
    finally:
        if client is not None:
            client.close()

    grid = ReportGrid(tuple(reports))
    Path(args.out).write_text(grid.to_tsv(), encoding="utf-8")
    write_manifest(
        Path(str(args.out) + ".manifest.json"),
        "eval",
        {
            "docs": str(args.docs),
            "sample": args.sample,
            "targets": dict(_parse_named(args.target, "target")),
            "attacked": dict(_parse_named(args.attacked or [], "attacked")),
            "endpoint": args.endpoint,
        },
        {"report": str(args.out)},
    )
    print(grid.to_text())
    return EXIT_OK


# --------------------------------------------------------------------------
# servers


def cmd_toy_lm(args: argparse.Namespace) -> int:
    vocab = load_vocabulary(args.vocabulary)
    model = ToyLanguageModel(vocab, dim=args.dim)
    server = start_server(model, host=args.host, port=args.port)
    if args.manifest:
        write_manifest(
            Path(args.manifest),
            "toy-lm",
            {"vocabulary": str(args.vocabulary), "dim": args.dim, "host": args.host},
            {"endpoint": server.endpoint},
        )
    print(f"toy language model ({len(vocab)} words, dim {args.dim}) on {server.endpoint}")
    sys.stdout.flush()
    try:
        threading.Event().wait()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    models = {}
    for name, path in _parse_named(args.model, "model"):
        models[name] = load_model(path)
    store = load_store(args.embeddings) if args.embeddings else None
    lm = Client.connect(args.endpoint) if args.endpoint else None
    providers = AttackProviders(embeddings=store, lm=lm)
    app = create_app(models, providers=providers, session_ttl=args.ttl)
    if args.manifest:
        write_manifest(
            Path(args.manifest),
            "serve",
            {
                "models": dict(_parse_named(args.model, "model")),
                "embeddings": args.embeddings,
                "endpoint": args.endpoint,
                "host": args.host,
                "port": args.port,
                "ttl": args.ttl,
            },
            {},
        )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def build_parser() -> _Parser:
    parser = _Parser(prog="textveil", description=__doc__)
    parser.add_argument("--version", action="version", version=f"textveil {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate paired synthetic corpora")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--delta-shift", type=float, default=0.0)
    p.add_argument("--authors-per-class", type=int, default=30)
    p.add_argument("--tweets-per-author", type=int, default=20)
    p.add_argument("--tokens-per-tweet", type=int, default=10)
    p.add_argument("--tweets-per-doc", type=int, default=5)
    p.add_argument("--vocab-size", type=int, default=300)
    p.add_argument("--markers-per-class", type=int, default=10)
    p.add_argument("--marker-rate", type=float, default=0.85)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a classifier from a tweets file")
    p.add_argument("--tweets", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model-kind", choices=("logistic", "hinge"), default="logistic")
    p.add_argument("--features", choices=("lr", "ngram"), default="lr")
    p.add_argument("--max-tweets", type=int, default=100)
    p.add_argument("--train-fraction", type=float, default=0.8)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--save-split", help="directory for train/test document stores")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("attack", help="rewrite documents against a substitute model")
    p.add_argument("--model", required=True)
    p.add_argument("--docs", required=True, help="document store to attack")
    p.add_argument("--out", required=True)
    p.add_argument("--sample", type=int, help="attack only the last N documents")
    p.add_argument("--config", help="key = value file with attack options")
    p.add_argument("--generator", choices=("leet", "flip", "space", "ws", "mb", "db"))
    p.add_argument("--mode", choices=("top1", "loop_nocheck", "loop_check"))
    p.add_argument("--k-targets", type=int, dest="k_targets")
    p.add_argument("--top-k", type=int, dest="top_k")
    p.add_argument("--n-synonyms", type=int, dest="n_synonyms")
    p.add_argument("--delta", type=float)
    p.add_argument("--dropout-p", type=float, dest="dropout_p")
    p.add_argument("--rerank", choices=("none", "mlm_sim"))
    p.add_argument("--seed", type=int)
    p.add_argument("--embeddings", help="embedding store for ws / loop_check")
    p.add_argument("--endpoint", help="LM provider host:port for mb / db / rerank")
    p.add_argument(
        "--workers",
        type=int,
        help="parallel attack threads (default: available cores); "
        "output is identical for any worker count",
    )
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("eval", help="score attack results against target models")
    p.add_argument("--docs", required=True, help="original document store")
    p.add_argument("--sample", type=int, help="evaluate only the last N documents")
    p.add_argument("--target", action="append", required=True, metavar="NAME=MODEL")
    p.add_argument("--attacked", action="append", metavar="NAME=RESULTS")
    p.add_argument("--out", required=True, help="TSV report path")
    p.add_argument("--endpoint", help="LM provider for encoding-F1")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("toy-lm", help="run the deterministic toy LM provider")
    p.add_argument("--vocabulary", required=True)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=0)
    p.add_argument("--manifest", help="write a manifest with the bound endpoint")
    p.set_defaults(func=cmd_toy_lm)

    p = sub.add_parser("serve", help="run the interactive rewriting service")
    p.add_argument("--model", action="append", required=True, metavar="NAME=MODEL")
    p.add_argument("--embeddings")
    p.add_argument("--endpoint", help="LM provider host:port")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8008)
    p.add_argument("--ttl", type=float, default=3600.0)
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ProviderError, ProtocolError) as exc:
        print(f"provider error: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except (ValueError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
