"""Command line for the masked-LM protocol server.

build-model writes a miniature seeded checkpoint; serve loads any
checkpoint directory and exposes it over the fill/encode wire protocol
until interrupted.  serve can write a small JSON manifest once the
socket is bound, so scripted callers can poll for the endpoint instead
of parsing stdout.
"""
from __future__ import annotations

import argparse
import json
import sys
import threading
from pathlib import Path

EXIT_OK = 0
EXIT_ERROR = 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="textveil-adapter",
        description="serve a pretrained masked language model over the fill/encode protocol",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    build = sub.add_parser("build-model", help="write a miniature seeded checkpoint")
    build.add_argument("--out", required=True, help="checkpoint directory to create")
    build.add_argument("--seed", type=int, default=0)
    build.add_argument("--hidden-size", type=int, default=32)
    build.add_argument("--layers", type=int, default=4)
    build.add_argument("--heads", type=int, default=4)
    build.add_argument(
        "--max-positions",
        type=int,
        default=128,
        help="position capacity; must cover the longest document after subword expansion",
    )
    build.set_defaults(func=cmd_build_model)

    serve = sub.add_parser("serve", help="serve a checkpoint over the wire protocol")
    serve.add_argument("--model", required=True, help="checkpoint directory")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=0, help="0 picks a free port")
    serve.add_argument("--device", default="cpu")
    serve.add_argument(
        "--max-length",
        type=int,
        default=None,
        help="cap on pieces per request (default: the model's position capacity)",
    )
    serve.add_argument("--manifest", default=None, help="write endpoint JSON here once bound")
    serve.set_defaults(func=cmd_serve)
    return parser


def cmd_build_model(args: argparse.Namespace) -> int:
    from .miniature import build_miniature

    out = build_miniature(
        args.out,
        seed=args.seed,
        hidden_size=args.hidden_size,
        layers=args.layers,
        heads=args.heads,
        max_positions=args.max_positions,
    )
    print(f"miniature checkpoint written to {out}")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    from .provider import AdapterConfig, serve

    config = AdapterConfig(
        model=args.model, device=args.device, max_length=args.max_length
    )
    server = serve(config, host=args.host, port=args.port)
    if args.manifest:
        manifest = {
            "format": "textveil-adapter-manifest",
            "command": "serve",
            "arguments": {
                "model": args.model,
                "device": args.device,
                "max_length": args.max_length,
                "host": args.host,
            },
            "outputs": {"endpoint": server.endpoint},
        }
        Path(args.manifest).write_text(
            json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    print(f"masked-LM provider ({args.model}) on {server.endpoint}")
    sys.stdout.flush()
    try:
        threading.Event().wait()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    try:
        from transformers.utils import logging as hf_logging

        hf_logging.disable_progress_bar()
    except Exception:  # cosmetic only; serving works without it
        pass
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
