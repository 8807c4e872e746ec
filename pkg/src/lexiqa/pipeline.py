"""End-to-end orchestration for a single question.

Stage order: generic merging, entity span detection, entity merging
(branching on overlaps), marker merging, node matching, scoring; trees are
then composed in descending score order, each final structure becoming an
executed candidate query, until the candidate cap or time budget is hit.
"""

from __future__ import annotations

import json
import subprocess
import time
from dataclasses import dataclass, field

from .deptree import DepTree, numerize_variants
from .dudes import canonical_text, compose_tree
from .errors import LexiqaError, ProjectionError, TransportError, UnsupportedQueryError
from .kb import RemoteEndpoint, execute, load_ntriples
from .lexicon import Lexicon, load_lexicon
from .match import (
    DEFAULT_THRESHOLD,
    LabelIndex,
    NerCandidate,
    build_label_index,
    find_entity_spans,
    match_entities,
    match_properties,
    read_label_source,
)
from .merge import (
    MergeTrace,
    apply_entity_merging,
    apply_generic_rules,
    apply_marker_rules,
    mark_special_nodes,
)
from .score import DEFAULT_MULTIPLIERS, DEFAULT_WEIGHTS, score_tree
from .selector import CandidateQuery
from .sparql import serialize, to_query

__all__ = ["PipelineConfig", "PipelineRun", "Pipeline", "answer_question"]


@dataclass(slots=True)
class PipelineConfig:
    lexicon_path: str
    kb_target: str  # file path or http(s) endpoint URL
    label_path: str | None = None  # defaults to kb_target when that is a file
    ner_fixture: str | None = None
    ner_command: list[str] | None = None
    max_candidates: int = 512
    question_budget_s: float | None = None
    similarity_threshold: float = DEFAULT_THRESHOLD
    score_weights: tuple[float, float, float] = DEFAULT_WEIGHTS
    score_multipliers: tuple[float, float, float] = DEFAULT_MULTIPLIERS
    max_entry_candidates: int = 3
    max_entity_candidates: int = 3
    exec_timeout_s: float = 30.0
    conllu_path: str | None = None  # benchmark parse source
    max_train_results: int | None = None
    parser_command: list[str] | None = None
    class_iris: list[str] = field(default_factory=list)

    @classmethod
    def from_file(cls, path: str) -> "PipelineConfig":
        with open(path, encoding="utf-8") as handle:
            raw = json.load(handle)
        known = {f for f in cls.__dataclass_fields__}  # type: ignore[attr-defined]
        unknown = set(raw) - known
        if unknown:
            raise LexiqaError(f"{path}: unknown config keys {sorted(unknown)}")
        cfg = cls(**{k: v for k, v in raw.items()})
        if isinstance(cfg.score_weights, list):
            cfg.score_weights = tuple(cfg.score_weights)  # type: ignore[assignment]
        if isinstance(cfg.score_multipliers, list):
            cfg.score_multipliers = tuple(cfg.score_multipliers)  # type: ignore[assignment]
        return cfg


@dataclass(slots=True)
class PipelineRun:
    question: str
    trees_considered: int
    candidates: list[CandidateQuery]
    diagnostics: dict

    @property
    def budget_exhausted(self) -> bool:
        return bool(self.diagnostics.get("budget_exhausted"))


def _fixture_ner(path: str):
    with open(path, encoding="utf-8") as handle:
        table = json.load(handle)

    def provider(question: str, tree: DepTree) -> list[NerCandidate]:
        rows = table.get(question, [])
        return [
            NerCandidate(
                iri=row["iri"],
                start=int(row["start"]),
                end=int(row["end"]),
                score=float(row.get("score", 1.0)),
                label=row.get("label", ""),
            )
            for row in rows
        ]

    return provider


def _command_ner(command: list[str]):
    def provider(question: str, tree: DepTree) -> list[NerCandidate]:
        proc = subprocess.run(
            command,
            input=json.dumps({"question": question}) + "\n",
            capture_output=True,
            text=True,
            timeout=30,
        )
        if proc.returncode != 0:
            raise LexiqaError(f"ner command failed: {proc.stderr.strip()}")
        rows = json.loads(proc.stdout.strip().splitlines()[-1])
        return [
            NerCandidate(
                iri=row["iri"],
                start=int(row["start"]),
                end=int(row["end"]),
                score=float(row.get("score", 1.0)),
                label=row.get("label", ""),
            )
            for row in rows
        ]

    return provider


class Pipeline:
    """Loaded artifacts plus the per-question answer procedure."""

    def __init__(self, cfg: PipelineConfig) -> None:
        self.cfg = cfg
        self.lexicon: Lexicon = load_lexicon(cfg.lexicon_path)
        label_path = cfg.label_path
        if cfg.kb_target.startswith("http://") or cfg.kb_target.startswith("https://"):
            self.target = RemoteEndpoint(cfg.kb_target, timeout_s=cfg.exec_timeout_s)
            self.class_iris = frozenset(cfg.class_iris)
        else:
            self.target = load_ntriples(cfg.kb_target)
            self.class_iris = self.target.class_iris() | frozenset(cfg.class_iris)
            label_path = label_path or cfg.kb_target
        if label_path is None:
            raise LexiqaError("a label source is required for remote KB targets")
        self.label_index: LabelIndex = build_label_index(read_label_source(label_path))
        self.label_index.prepare()
        self.ner = None
        if cfg.ner_fixture:
            self.ner = _fixture_ner(cfg.ner_fixture)
        elif cfg.ner_command:
            self.ner = _command_ner(cfg.ner_command)

    # -- per-question ------------------------------------------------------

    def _prepare_trees(self, parses: list[DepTree], diagnostics: dict) -> list[tuple]:
        seen_hashes: set[str] = set()
        unique: list[DepTree] = []
        for parse in parses:
            digest = parse.structural_hash()
            if digest not in seen_hashes:
                seen_hashes.add(digest)
                unique.append(parse)
        variants: list[DepTree] = []
        seen_hashes.clear()
        for parse in unique:
            for variant in numerize_variants(parse):
                digest = variant.structural_hash()
                if digest not in seen_hashes:
                    seen_hashes.add(digest)
                    variants.append(variant)
        prepared = []
        for tree in variants:
            merged, gtrace = apply_generic_rules(tree, self.lexicon)
            spans = find_entity_spans(
                self.label_index, merged, self.cfg.similarity_threshold
            )
            for entity_tree, etrace in apply_entity_merging(merged, spans):
                marked, mtrace = apply_marker_rules(entity_tree, self.lexicon)
                marked, strace = mark_special_nodes(marked)
                match_entities(
                    self.label_index,
                    marked,
                    self.ner,
                    self.cfg.similarity_threshold,
                    diagnostics.setdefault("warnings", []),
                )
                match_properties(self.lexicon, marked)
                score = score_tree(
                    marked, self.cfg.score_weights, self.cfg.score_multipliers
                )
                trace = MergeTrace(steps=[])
                for part in (gtrace, etrace, mtrace, strace):
                    trace.extend(part)
                prepared.append((marked, score, trace))
        prepared.sort(
            key=lambda item: (
                -item[1].total,
                item[0].parser_tag,
                item[0].variant.value,
                item[0].structural_hash(),
            )
        )
        return prepared

    def answer_question(
        self,
        parses: list[DepTree],
        question: str,
        deadline: float | None = None,
    ) -> PipelineRun:
        cfg = self.cfg
        if deadline is None and cfg.question_budget_s is not None:
            deadline = time.monotonic() + cfg.question_budget_s
        diagnostics: dict = {"warnings": [], "merge_traces": [], "scores": [], "pruned": 0}
        prepared = self._prepare_trees(parses, diagnostics)
        candidates: list[CandidateQuery] = []
        seen_queries: set[str] = set()
        enum_index = 0
        for tree, score, trace in prepared:
            diagnostics["merge_traces"].append(
                [(s.rule, s.absorbed, s.surviving) for s in trace.steps]
            )
            diagnostics["scores"].append(
                {
                    "exact": score.exact_fraction,
                    "relaxed": score.relaxed_fraction,
                    "node_ratio": score.node_ratio,
                    "total": score.total,
                    "parser": tree.parser_tag,
                    "variant": tree.variant.value,
                }
            )
        for tree, score, trace in prepared:
            if len(candidates) >= cfg.max_candidates:
                break
            stats: dict = {}
            for dudes in compose_tree(tree, self.lexicon, self.class_iris, stats=stats):
                if len(candidates) >= cfg.max_candidates:
                    break
                if deadline is not None and time.monotonic() > deadline:
                    diagnostics["budget_exhausted"] = True
                    break
                try:
                    ir = to_query(dudes)
                except ProjectionError:
                    diagnostics["pruned"] += 1
                    continue
                text = serialize(ir)
                if text in seen_queries:
                    continue
                seen_queries.add(text)
                try:
                    answers = execute(self.target, text, timeout_s=cfg.exec_timeout_s)
                except (UnsupportedQueryError, TransportError) as exc:
                    diagnostics["warnings"].append(f"execution failed: {exc}")
                    continue
                candidates.append(
                    CandidateQuery(
                        query_text=text,
                        ir=ir,
                        dudes_text=canonical_text(dudes),
                        tree_score=score.total,
                        enum_index=enum_index,
                        result_count=answers.count,
                        answers=answers,
                    )
                )
                enum_index += 1
            diagnostics["pruned"] += stats.get("pruned", 0)
            if diagnostics.get("budget_exhausted"):
                break
        return PipelineRun(
            question=question,
            trees_considered=len(prepared),
            candidates=candidates,
            diagnostics=diagnostics,
        )


def answer_question(
    cfg: PipelineConfig | Pipeline,
    parses: list[DepTree],
    question: str,
    deadline: float | None = None,
) -> PipelineRun:
    """One-shot entry point; accepts a config or a pre-loaded pipeline."""
    pipeline = cfg if isinstance(cfg, Pipeline) else Pipeline(cfg)
    return pipeline.answer_question(parses, question, deadline=deadline)
