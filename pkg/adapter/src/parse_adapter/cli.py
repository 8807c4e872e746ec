"""Command line driver: questions on stdin (or --file), CoNLL-U on stdout."""

from __future__ import annotations

import argparse
import sys

from .adapter import AdapterConfig, AdapterError, parse_to_conllu


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parse-adapter",
        description="Parse questions with one or more dependency parsers, emit CoNLL-U.",
    )
    parser.add_argument(
        "--backend",
        action="append",
        metavar="FRAMEWORK/MODEL",
        help="repeatable; e.g. heuristic/nounattach, spacy/en_core_web_lg, stanza/en",
    )
    parser.add_argument("--file", help="read questions from this file instead of stdin")
    parser.add_argument("--out", help="write CoNLL-U here instead of stdout")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    specs = args.backend or ["heuristic/nounattach", "heuristic/verbattach"]
    backends = []
    for spec in specs:
        framework, _, model = spec.partition("/")
        backends.append((framework, model or "nounattach"))
    if args.file:
        with open(args.file, encoding="utf-8") as handle:
            questions = handle.read().splitlines()
    else:
        questions = sys.stdin.read().splitlines()
    cfg = AdapterConfig(backends=backends, out=args.out)
    try:
        document = parse_to_conllu(cfg, questions)
    except AdapterError as exc:
        print(f"parse-adapter: {exc}", file=sys.stderr)
        return 1
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as handle:
            handle.write(document)
    else:
        sys.stdout.write(document)
    return 0


if __name__ == "__main__":
    sys.exit(main())
