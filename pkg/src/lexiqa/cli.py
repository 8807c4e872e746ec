"""Command-line entry points.

Subcommands: lexicon-validate, index-build, answer, evaluate, explain.
Exit codes: 0 success, 1 runtime failure, 2 usage error.  ``--json``
switches stdout to machine-parseable JSON.
"""

from __future__ import annotations

import argparse
import json
import subprocess
import sys
import tempfile
from collections import Counter

from .bench import load_dataset, report_table, run_benchmark
from .deptree import read_conllu
from .errors import LexiqaError
from .lexicon import load_lexicon
from .match import build_label_index, read_label_source
from .pipeline import Pipeline, PipelineConfig
from .selector import (
    Accum,
    BaselineComparator,
    BestScore,
    MostWins,
    filter_candidates,
    select,
)
from .terms import answer_key


def _cmd_lexicon_validate(args) -> int:
    lex = load_lexicon(args.lexicon)
    frames = Counter(entry.frame.value for entry in lex.entries)
    if args.json:
        print(json.dumps({"entries": len(lex), "frames": dict(sorted(frames.items()))}))
    else:
        print(f"entries: {len(lex)}")
        for frame, count in sorted(frames.items()):
            print(f"{frame}: {count}")
    return 0


def _cmd_index_build(args) -> int:
    pairs = read_label_source(args.labels)
    index = build_label_index(pairs)
    payload = {
        "labels": {label: index.lookup(label) for label in sorted(index._payload)},
        "size": index.size,
        "skipped": index.skipped,
    }
    with open(args.out, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=1, sort_keys=True)
    if args.json:
        print(json.dumps({"size": index.size, "skipped": index.skipped, "out": args.out}))
    else:
        print(f"labels indexed: {index.size} (skipped {index.skipped}) -> {args.out}")
    return 0


def _parses_for(pipeline: Pipeline, args, question: str):
    if args.conllu:
        trees = read_conllu(args.conllu)
        matching = [t for t in trees if (t.text or "") == question]
        return matching or trees
    command = pipeline.cfg.parser_command
    if not command:
        raise LexiqaError(
            "no --conllu given and no parser_command configured; cannot parse"
        )
    proc = subprocess.run(
        command, input=question + "\n", capture_output=True, text=True, timeout=300
    )
    if proc.returncode != 0:
        raise LexiqaError(f"parser command failed: {proc.stderr.strip()}")
    with tempfile.NamedTemporaryFile("w", suffix=".conllu", delete=False) as handle:
        handle.write(proc.stdout)
        path = handle.name
    return read_conllu(path)


def _cmd_answer(args) -> int:
    cfg = PipelineConfig.from_file(args.config)
    pipeline = Pipeline(cfg)
    run = pipeline.answer_question(_parses_for(pipeline, args, args.question), args.question)
    max_results = cfg.max_train_results or 1000
    filtered = filter_candidates(run.candidates, max_results)
    strategy = MostWins(margin=0.0, comparators=(BaselineComparator(),))
    chosen = select(strategy, filtered, args.question)
    if chosen is None:
        if args.json:
            print(json.dumps({"question": args.question, "query": None, "answers": []}))
        else:
            print("no answer found")
        return 0
    answers = (
        sorted(answer_key(t) for t in chosen.answers.values)
        if chosen.answers.kind == "bindings"
        else [str(chosen.answers.truth).lower()]
    )
    if args.json:
        print(
            json.dumps(
                {"question": args.question, "query": chosen.query_text, "answers": answers}
            )
        )
    else:
        print(chosen.query_text)
        for answer in answers:
            print(f"  {answer}")
    return 0


def _parse_strategy(spec: str):
    parts = spec.split(":")
    kind = parts[0].lower()
    if kind == "bestscore":
        return BestScore()
    ensemble_n = int(parts[2]) if len(parts) > 2 else 1
    comparators = tuple(BaselineComparator(prior=3.0 + i) for i in range(ensemble_n))
    if kind == "mostwins":
        margin = float(parts[1]) if len(parts) > 1 else 0.0
        return MostWins(margin=margin, comparators=comparators)
    if kind == "accum":
        mode = parts[1] if len(parts) > 1 else "sigmoid"
        return Accum(mode=mode, comparators=comparators)
    raise LexiqaError(f"unknown strategy {spec!r}")


def _cmd_evaluate(args) -> int:
    cfg = PipelineConfig.from_file(args.config)
    if args.conllu:
        cfg.conllu_path = args.conllu
    pipeline = Pipeline(cfg)
    warnings: list[str] = []
    dataset = load_dataset(args.dataset, warnings)
    strategies = [_parse_strategy(s) for s in args.strategy]
    reports = run_benchmark(
        dataset,
        pipeline,
        strategies,
        total_budget_s=args.budget,
        warnings=warnings,
    )
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            json.dump([r.to_dict() for r in reports], handle, indent=1)
    if args.json:
        print(json.dumps([r.to_dict() for r in reports]))
    else:
        for warning in warnings:
            print(f"warning: {warning}", file=sys.stderr)
        print(report_table(reports))
    # exit 0 only when the whole run fit inside the time budget
    if any("budget exhausted" in w for w in warnings):
        return 1
    return 0


def _cmd_explain(args) -> int:
    cfg = PipelineConfig.from_file(args.config)
    pipeline = Pipeline(cfg)
    run = pipeline.answer_question(_parses_for(pipeline, args, args.question), args.question)
    payload = {
        "question": args.question,
        "treesConsidered": run.trees_considered,
        "scores": run.diagnostics.get("scores", []),
        "mergeTraces": run.diagnostics.get("merge_traces", []),
        "pruned": run.diagnostics.get("pruned", 0),
        "candidates": [
            {
                "query": c.query_text,
                "dudes": c.dudes_text,
                "treeScore": c.tree_score,
                "results": c.result_count,
            }
            for c in run.candidates
        ],
    }
    if args.json:
        print(json.dumps(payload, indent=1))
    else:
        print(f"question: {args.question}")
        print(f"trees considered: {run.trees_considered}")
        for score in payload["scores"]:
            print(
                f"  tree[{score['parser']}/{score['variant']}] total={score['total']:.3f} "
                f"exact={score['exact']:.3f} relaxed={score['relaxed']:.3f} "
                f"ratio={score['node_ratio']:.3f}"
            )
        for trace in payload["mergeTraces"]:
            print(f"  merges: {trace}")
        print(f"pruned branches: {payload['pruned']}")
        for cand in payload["candidates"]:
            print(f"  [{cand['results']:>3}] {cand['query']}")
            print(f"        {cand['dudes']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lexiqa", description=__doc__)
    parser.add_argument("--json", action="store_true", help="JSON output on stdout")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lexicon-validate", help="validate a lexicon file")
    p.add_argument("--lexicon", required=True)
    p.set_defaults(func=_cmd_lexicon_validate)

    p = sub.add_parser("index-build", help="build and persist a label index")
    p.add_argument("--labels", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_index_build)

    p = sub.add_parser("answer", help="answer a single question")
    p.add_argument("--config", required=True)
    p.add_argument("--question", required=True)
    p.add_argument("--conllu", help="pre-parsed CoNLL-U for the question")
    p.set_defaults(func=_cmd_answer)

    p = sub.add_parser("evaluate", help="run a benchmark dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--strategy", action="append", required=True,
                   help="bestscore | mostwins:MARGIN[:N] | accum:MODE[:N]")
    p.add_argument("--budget", type=float, default=None, help="total seconds")
    p.add_argument("--conllu", help="override the configured parse source")
    p.add_argument("--out", help="write reports as JSON to this path")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("explain", help="show merges, scores and candidates")
    p.add_argument("--config", required=True)
    p.add_argument("--question", required=True)
    p.add_argument("--conllu")
    p.set_defaults(func=_cmd_explain)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except LexiqaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: missing file: {exc.filename}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
