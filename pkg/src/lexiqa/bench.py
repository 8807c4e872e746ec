"""Benchmark harness: dataset loading, budgeted runs, micro/macro metrics.

Datasets use the QALD JSON layout (language-tagged question strings, a
gold SPARQL query, answers in SPARQL JSON results form).  Every strategy
is applied to the same candidate sets, so strategies compete on selection
quality alone.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

from .deptree import DepTree, read_conllu
from .kb import AnswerSet, parse_json_results
from .pipeline import Pipeline, PipelineConfig
from .selector import BestScore, Strategy, confusion, filter_candidates, select

__all__ = [
    "BenchQuestion",
    "QuestionResult",
    "EvalReport",
    "load_dataset",
    "run_benchmark",
    "report_table",
]


@dataclass(frozen=True, slots=True)
class BenchQuestion:
    id: str
    text: str
    gold_query: str
    gold_answers: AnswerSet


@dataclass(frozen=True, slots=True)
class QuestionResult:
    id: str
    tp: int
    fp: int
    fn: int
    p: float
    r: float
    f1: float
    selected_query: str | None
    elapsed_ms: float


@dataclass(frozen=True, slots=True)
class EvalReport:
    strategy_name: str
    per_question: tuple[QuestionResult, ...]
    micro: tuple[float, float, float]  # p, r, f1
    macro: tuple[float, float, float]
    candidates_generated: int

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy_name,
            "micro": {"p": self.micro[0], "r": self.micro[1], "f1": self.micro[2]},
            "macro": {"p": self.macro[0], "r": self.macro[1], "f1": self.macro[2]},
            "candidatesGenerated": self.candidates_generated,
            "perQuestion": [asdict(q) for q in self.per_question],
        }


def load_dataset(path: str, warnings: list[str] | None = None) -> list[BenchQuestion]:
    """Load QALD-format JSON, keeping English questions with usable answers."""
    with open(path, encoding="utf-8") as handle:
        doc = json.load(handle)
    questions = []
    for raw in doc.get("questions", []):
        qid = str(raw.get("id", len(questions)))
        text = None
        for lang in raw.get("question", []):
            if lang.get("language") == "en" and lang.get("string"):
                text = lang["string"]
                break
        if text is None:
            if warnings is not None:
                warnings.append(f"question {qid}: no English string, skipped")
            continue
        answers_raw = raw.get("answers") or []
        if not answers_raw:
            if warnings is not None:
                warnings.append(f"question {qid}: no answers, skipped")
            continue
        gold = parse_json_results(answers_raw[0])
        questions.append(
            BenchQuestion(
                id=qid,
                text=text,
                gold_query=(raw.get("query") or {}).get("sparql", ""),
                gold_answers=gold,
            )
        )
    return questions


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    if tp == 0 and fp == 0 and fn == 0:
        return (1.0, 1.0, 1.0)  # empty gold answered with empty system output
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return (p, r, f1)


def _aggregate(rows: list[QuestionResult], strategy_name: str, generated: int) -> EvalReport:
    total_tp = sum(r.tp for r in rows)
    total_fp = sum(r.fp for r in rows)
    total_fn = sum(r.fn for r in rows)
    micro_p = total_tp / (total_tp + total_fp) if total_tp + total_fp else 0.0
    micro_r = total_tp / (total_tp + total_fn) if total_tp + total_fn else 0.0
    micro_f1 = (
        2 * micro_p * micro_r / (micro_p + micro_r) if micro_p + micro_r else 0.0
    )
    n = len(rows)
    macro = (
        (sum(r.p for r in rows) / n, sum(r.r for r in rows) / n, sum(r.f1 for r in rows) / n)
        if n
        else (0.0, 0.0, 0.0)
    )
    return EvalReport(
        strategy_name=strategy_name,
        per_question=tuple(rows),
        micro=(micro_p, micro_r, micro_f1),
        macro=macro,
        candidates_generated=generated,
    )


def trees_for_question(trees: list[DepTree], text: str) -> list[DepTree]:
    return [t for t in trees if (t.text or "") == text]


def run_benchmark(
    dataset: list[BenchQuestion],
    pipeline: Pipeline | PipelineConfig,
    strategies: list[Strategy],
    total_budget_s: float | None = None,
    max_train_results: int | None = None,
    warnings: list[str] | None = None,
    workers: int = 12,
) -> list[EvalReport]:
    """Run every strategy over the same candidate sets, one report each.

    Without a budget, questions are evaluated concurrently up to the worker
    limit and reduced in dataset order.  With a budget, evaluation is
    sequential so each question gets the remaining budget divided by the
    remaining questions; a question that blows its slice counts as
    unanswered and the run continues.
    """
    if isinstance(pipeline, PipelineConfig):
        pipeline = Pipeline(pipeline)
    if pipeline.cfg.conllu_path is None:
        raise ValueError("benchmark runs need conllu_path in the pipeline config")
    if not dataset and warnings is not None:
        warnings.append("dataset is empty")
    all_trees = read_conllu(pipeline.cfg.conllu_path)
    if max_train_results is None:
        max_train_results = pipeline.cfg.max_train_results
    if max_train_results is None:
        sizes = [
            1 if q.gold_answers.kind == "boolean" else len(q.gold_answers.values)
            for q in dataset
        ]
        max_train_results = max(sizes, default=1)
    start = time.monotonic()
    rows: dict[str, list[QuestionResult]] = {s.name: [] for s in strategies}
    generated = 0

    def evaluate(question: BenchQuestion, deadline: float | None):
        q_start = time.monotonic()
        parses = trees_for_question(all_trees, question.text)
        run = pipeline.answer_question(parses, question.text, deadline=deadline)
        elapsed_ms = (time.monotonic() - q_start) * 1000.0
        return question, parses, run, elapsed_ms

    if total_budget_s is None:
        with ThreadPoolExecutor(max_workers=max(workers, 1)) as pool:
            outcomes = list(pool.map(lambda q: evaluate(q, None), dataset))
    else:
        outcomes = []
        for position, question in enumerate(dataset):
            remaining = total_budget_s - (time.monotonic() - start)
            slice_s = max(remaining, 0.0) / max(len(dataset) - position, 1)
            outcomes.append(evaluate(question, time.monotonic() + slice_s))

    for question, parses, run, elapsed_ms in outcomes:
        if not parses and warnings is not None:
            warnings.append(f"question {question.id}: no parses in conllu source")
        if run.budget_exhausted and warnings is not None:
            warnings.append(f"question {question.id}: budget exhausted")
        generated += len(run.candidates)
        filtered = filter_candidates(run.candidates, max_train_results)
        for strategy in strategies:
            selected = select(
                strategy,
                filtered,
                question.text,
                gold=question.gold_answers if isinstance(strategy, BestScore) else None,
            )
            tp, fp, fn = confusion(
                selected.answers if selected is not None else None,
                question.gold_answers,
            )
            p, r, f1 = _prf(tp, fp, fn)
            rows[strategy.name].append(
                QuestionResult(
                    id=question.id,
                    tp=tp,
                    fp=fp,
                    fn=fn,
                    p=p,
                    r=r,
                    f1=f1,
                    selected_query=selected.query_text if selected else None,
                    elapsed_ms=elapsed_ms,
                )
            )
    return [_aggregate(rows[s.name], s.name, generated) for s in strategies]


def report_table(reports: list[EvalReport]) -> str:
    """Aligned text table: micro and macro P/R/F1 per strategy."""
    header = (
        f"{'Strategy':<24} {'Micro P':>8} {'Micro R':>8} {'Micro F1':>9} "
        f"{'Macro P':>8} {'Macro R':>8} {'Macro F1':>9}"
    )
    lines = [header, "-" * len(header)]
    for report in reports:
        mp, mr, mf = report.micro
        ap, ar, af = report.macro
        lines.append(
            f"{report.strategy_name:<24} {mp:>8.3f} {mr:>8.3f} {mf:>9.3f} "
            f"{ap:>8.3f} {ar:>8.3f} {af:>9.3f}"
        )
    return "\n".join(lines)
