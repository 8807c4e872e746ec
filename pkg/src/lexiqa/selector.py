"""Candidate query selection: filtering, scoring, pairwise strategies.

Every strategy works off the same filtered candidate list.  BestScore is
the oracle upper bound (needs gold answers); MostWins and Accum aggregate
pairwise comparator outputs.  Comparators are callables and can be backed
by the deterministic baseline below or by an external process speaking
newline-delimited JSON.
"""

from __future__ import annotations

import json
import math
import queue
import subprocess
import threading
from dataclasses import dataclass
from typing import Callable, Sequence

from .kb import AnswerSet
from .sparql import QueryIR
from .terms import answer_key

__all__ = [
    "CandidateQuery",
    "ComparatorOutput",
    "BestScore",
    "MostWins",
    "Accum",
    "Strategy",
    "filter_candidates",
    "confusion",
    "clamped_f1",
    "select",
    "BaselineComparator",
    "ExternalComparator",
]


@dataclass(frozen=True, slots=True)
class CandidateQuery:
    query_text: str
    ir: QueryIR
    dudes_text: str
    tree_score: float
    enum_index: int
    result_count: int
    answers: AnswerSet


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@dataclass(frozen=True, slots=True)
class ComparatorOutput:
    raw_a: float
    raw_b: float
    sig_a: float
    sig_b: float

    @classmethod
    def from_raw(cls, raw_a: float, raw_b: float) -> "ComparatorOutput":
        return cls(raw_a=raw_a, raw_b=raw_b, sig_a=_sigmoid(raw_a), sig_b=_sigmoid(raw_b))


Comparator = Callable[[str, CandidateQuery, CandidateQuery], ComparatorOutput]


@dataclass(frozen=True, slots=True)
class BestScore:
    name: str = "BestScore"


@dataclass(frozen=True, slots=True)
class MostWins:
    margin: float
    comparators: tuple[Comparator, ...]

    def __post_init__(self) -> None:
        if not self.comparators:
            raise ValueError("MostWins needs a non-empty comparator ensemble")

    @property
    def name(self) -> str:
        suffix = f"^top{len(self.comparators)}" if len(self.comparators) > 1 else ""
        return f"MostWins_{self.margin:g}{suffix}"


@dataclass(frozen=True, slots=True)
class Accum:
    mode: str  # "logits" or "sigmoid"
    comparators: tuple[Comparator, ...]

    def __post_init__(self) -> None:
        if not self.comparators:
            raise ValueError("Accum needs a non-empty comparator ensemble")
        if self.mode not in ("logits", "sigmoid"):
            raise ValueError(f"unknown Accum mode {self.mode!r}")

    @property
    def name(self) -> str:
        suffix = f"^top{len(self.comparators)}" if len(self.comparators) > 1 else ""
        return f"Accum_{self.mode}{suffix}"


Strategy = BestScore | MostWins | Accum


def filter_candidates(
    cands: list[CandidateQuery], max_train_results: int
) -> list[CandidateQuery]:
    """Drop empty-result candidates and implausibly large result sets.

    The upper threshold is the largest training result count plus 10%.
    ASK candidates are exempt from the zero-result rule: a boolean false
    is a result.
    """
    threshold = math.floor(max_train_results * 1.1)
    kept = []
    for cand in cands:
        if cand.ir.form != "ask" and cand.result_count == 0:
            continue
        if cand.result_count > threshold:
            continue
        kept.append(cand)
    return kept


def confusion(answers: AnswerSet | None, gold: AnswerSet) -> tuple[int, int, int]:
    """(tp, fp, fn) of a system answer set against gold."""
    gold_size = 1 if gold.kind == "boolean" else len(gold.values)
    if answers is None:
        return (0, 0, gold_size)
    if gold.kind == "boolean" or answers.kind == "boolean":
        if gold.kind == answers.kind == "boolean":
            return (1, 0, 0) if answers.truth == gold.truth else (0, 1, 1)
        system_size = 1 if answers.kind == "boolean" else len(answers.values)
        return (0, system_size, gold_size)
    system = {answer_key(t) for t in answers.values}
    wanted = {answer_key(t) for t in gold.values}
    tp = len(system & wanted)
    return (tp, len(system - wanted), len(wanted - system))


def clamped_f1(answers: AnswerSet | None, gold: AnswerSet) -> float:
    """F1 over answer sets, clamped to 0 at a 10:1 false-to-true ratio."""
    tp, fp, fn = confusion(answers, gold)
    if tp == 0 and fp == 0 and fn == 0:
        return 1.0
    if fp > 0 and fp >= 10 * tp:
        return 0.0
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


def _pair_sigs(
    strategy_comparators: Sequence[Comparator],
    question: str,
    a: CandidateQuery,
    b: CandidateQuery,
) -> tuple[float, float, float, float]:
    """Summed raw and sigmoid outputs per side, both orderings, all models."""
    raw_a = raw_b = sig_a = sig_b = 0.0
    for comparator in strategy_comparators:
        fwd = comparator(question, a, b)
        rev = comparator(question, b, a)
        raw_a += fwd.raw_a + rev.raw_b
        raw_b += fwd.raw_b + rev.raw_a
        sig_a += fwd.sig_a + rev.sig_b
        sig_b += fwd.sig_b + rev.sig_a
    return raw_a, raw_b, sig_a, sig_b


def select(
    strategy: Strategy,
    cands: list[CandidateQuery],
    question: str,
    gold: AnswerSet | None = None,
) -> CandidateQuery | None:
    """Pick one candidate (or None for an empty list).

    Selection is permutation invariant: ties break on tree score, then on
    the enumeration index, never on list position.
    """
    if not cands:
        return None
    ordered = sorted(cands, key=lambda c: c.enum_index)
    if isinstance(strategy, BestScore):
        if gold is None:
            raise ValueError("BestScore requires gold answers")
        return max(ordered, key=lambda c: (clamped_f1(c.answers, gold), -c.enum_index))
    if len(ordered) == 1:
        return ordered[0]
    evaluations = 2 * len(strategy.comparators)
    if isinstance(strategy, MostWins):
        wins = {c.enum_index: 0 for c in ordered}
        for i, a in enumerate(ordered):
            for b in ordered[i + 1 :]:
                _, _, sig_a, sig_b = _pair_sigs(strategy.comparators, question, a, b)
                mean_a = sig_a / evaluations
                mean_b = sig_b / evaluations
                if mean_a - mean_b > strategy.margin:
                    wins[a.enum_index] += 1
                elif mean_b - mean_a > strategy.margin:
                    wins[b.enum_index] += 1
        return max(
            ordered,
            key=lambda c: (wins[c.enum_index], c.tree_score, -c.enum_index),
        )
    totals = {c.enum_index: 0.0 for c in ordered}
    for i, a in enumerate(ordered):
        for b in ordered[i + 1 :]:
            raw_a, raw_b, sig_a, sig_b = _pair_sigs(strategy.comparators, question, a, b)
            if strategy.mode == "logits":
                totals[a.enum_index] += raw_a
                totals[b.enum_index] += raw_b
            else:
                totals[a.enum_index] += sig_a
                totals[b.enum_index] += sig_b
    return max(
        ordered,
        key=lambda c: (totals[c.enum_index], c.tree_score, -c.enum_index),
    )


class BaselineComparator:
    """Deterministic heuristic comparator with a documented closed form.

    For a candidate c:

        raw(c) = 2.0 * tree_score(c)
               - 0.25 * max(0, patterns(c) - 1)
               - 0.4 * |log10(max(result_count(c), 1)) - log10(prior)|

    Higher tree score wins, fewer patterns win (parsimony), and result
    counts near the configured prior win.  Outputs depend only on each
    candidate alone, so compare(A, B) is the exact swap of compare(B, A).
    """

    def __init__(self, prior: float = 3.0) -> None:
        if prior <= 0:
            raise ValueError("prior must be positive")
        self.prior = prior

    def _raw(self, cand: CandidateQuery) -> float:
        parsimony = 0.25 * max(0, len(cand.ir.patterns) - 1)
        plausibility = 0.4 * abs(
            math.log10(max(cand.result_count, 1)) - math.log10(self.prior)
        )
        return 2.0 * cand.tree_score - parsimony - plausibility

    def __call__(
        self, question: str, a: CandidateQuery, b: CandidateQuery
    ) -> ComparatorOutput:
        return ComparatorOutput.from_raw(self._raw(a), self._raw(b))


class ExternalComparator:
    """Comparator served by a subprocess over newline-delimited JSON.

    Request:  {"question", "queryA", "queryB", "countA", "countB",
               "dudesA", "dudesB"}
    Response: {"rawA": float, "rawB": float}
    """

    def __init__(self, command: list[str], timeout_s: float = 10.0) -> None:
        self.command = list(command)
        self.timeout_s = timeout_s
        self._proc: subprocess.Popen | None = None
        self._replies: queue.Queue[str] = queue.Queue()
        self._lock = threading.Lock()

    def _ensure_process(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
            self._replies = queue.Queue()
            thread = threading.Thread(
                target=self._pump, args=(self._proc, self._replies), daemon=True
            )
            thread.start()
        return self._proc

    @staticmethod
    def _pump(proc: subprocess.Popen, replies: "queue.Queue[str]") -> None:
        assert proc.stdout is not None
        for line in proc.stdout:
            replies.put(line)

    def close(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            self._proc.terminate()
        self._proc = None

    def __call__(
        self, question: str, a: CandidateQuery, b: CandidateQuery
    ) -> ComparatorOutput:
        request = {
            "question": question,
            "queryA": a.query_text,
            "queryB": b.query_text,
            "countA": a.result_count,
            "countB": b.result_count,
            "dudesA": a.dudes_text,
            "dudesB": b.dudes_text,
        }
        with self._lock:
            proc = self._ensure_process()
            assert proc.stdin is not None
            proc.stdin.write(json.dumps(request) + "\n")
            proc.stdin.flush()
            try:
                line = self._replies.get(timeout=self.timeout_s)
            except queue.Empty:
                self.close()
                raise TimeoutError("external comparator did not answer in time")
        reply = json.loads(line)
        return ComparatorOutput.from_raw(float(reply["rawA"]), float(reply["rawB"]))
