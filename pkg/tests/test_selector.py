import itertools
import math
import pathlib
import random
import sys

import pytest

from lexiqa.dudes import Var
from lexiqa.kb import AnswerSet
from lexiqa.selector import (
    Accum,
    BaselineComparator,
    BestScore,
    CandidateQuery,
    ComparatorOutput,
    ExternalComparator,
    MostWins,
    clamped_f1,
    confusion,
    filter_candidates,
    select,
)
from lexiqa.sparql import QueryIR
from lexiqa.terms import IRI


def bindings(*iris) -> AnswerSet:
    return AnswerSet(kind="bindings", values=frozenset(IRI(i) for i in iris))


def candidate(enum_index, result_count=1, tree_score=0.5, form="select", n_patterns=1,
              answers=None) -> CandidateQuery:
    var = Var(1)
    ir = QueryIR(
        form=form,
        projection=(var,) if form != "ask" else (),
        patterns=tuple((Var(1), f"http://x/p{i}", Var(2)) for i in range(n_patterns)),
    )
    return CandidateQuery(
        query_text=f"q{enum_index}",
        ir=ir,
        dudes_text=f"d{enum_index}",
        tree_score=tree_score,
        enum_index=enum_index,
        result_count=result_count,
        answers=answers if answers is not None else bindings(f"http://x/a{enum_index}"),
    )


class TestFilterCandidates:
    def test_rule_application(self):
        cands = [candidate(0, 0), candidate(1, 5), candidate(2, 200)]
        kept = filter_candidates(cands, max_train_results=100)
        assert [c.enum_index for c in kept] == [1]

    def test_all_zero_result_selects_filtered(self):
        cands = [candidate(i, 0) for i in range(4)]
        assert filter_candidates(cands, 100) == []

    def test_ask_false_retained(self):
        ask = candidate(0, 0, form="ask", answers=AnswerSet(kind="boolean", truth=False))
        assert filter_candidates([ask], 100) == [ask]

    def test_boundary_exactly_at_threshold(self):
        threshold = math.floor(100 * 1.1)
        at = candidate(0, threshold)
        over = candidate(1, threshold + 1)
        kept = filter_candidates([at, over], 100)
        assert kept == [at]


class TestClampedF1:
    def test_perfect(self):
        gold = bindings("http://x/a")
        assert clamped_f1(bindings("http://x/a"), gold) == 1.0

    def test_ten_to_one_clamp(self):
        gold = bindings("http://x/tp")
        answers = bindings("http://x/tp", *[f"http://x/fp{i}" for i in range(10)])
        assert confusion(answers, gold) == (1, 10, 0)
        assert clamped_f1(answers, gold) == 0.0

    def test_two_two_not_clamped(self):
        gold = bindings("http://x/a", "http://x/b")
        answers = bindings("http://x/a", "http://x/b", "http://x/c", "http://x/d")
        assert confusion(answers, gold) == (2, 2, 0)
        assert clamped_f1(answers, gold) == pytest.approx(2 * (0.5 * 1) / (0.5 + 1))

    def test_boolean_answers(self):
        gold = AnswerSet(kind="boolean", truth=True)
        assert clamped_f1(AnswerSet(kind="boolean", truth=True), gold) == 1.0
        assert clamped_f1(AnswerSet(kind="boolean", truth=False), gold) == 0.0

    def test_both_empty_is_perfect(self):
        assert clamped_f1(bindings(), bindings()) == 1.0


class TableComparator:
    """Comparator defined by an explicit sigmoid table for ordered pairs."""

    def __init__(self, table):
        self.table = table  # (idx_a, idx_b) -> (sig_a, sig_b)

    def __call__(self, question, a, b):
        sig_a, sig_b = self.table[(a.enum_index, b.enum_index)]
        clamp = lambda s: min(max(s, 1e-9), 1 - 1e-9)
        logit = lambda s: math.log(clamp(s) / (1 - clamp(s)))
        return ComparatorOutput(
            raw_a=logit(sig_a), raw_b=logit(sig_b), sig_a=clamp(sig_a), sig_b=clamp(sig_b)
        )


def symmetric_table(rng, indices):
    table = {}
    for a, b in itertools.permutations(indices, 2):
        table[(a, b)] = (rng.random(), rng.random())
    return table


def mostwins_oracle(cands, table, margin):
    wins = {c.enum_index: 0 for c in cands}
    for a, b in itertools.combinations(sorted(c.enum_index for c in cands), 2):
        fwd = table[(a, b)]
        rev = table[(b, a)]
        mean_a = (fwd[0] + rev[1]) / 2
        mean_b = (fwd[1] + rev[0]) / 2
        if mean_a - mean_b > margin:
            wins[a] += 1
        elif mean_b - mean_a > margin:
            wins[b] += 1
    by_idx = {c.enum_index: c for c in cands}
    return max(
        by_idx.values(), key=lambda c: (wins[c.enum_index], c.tree_score, -c.enum_index)
    )


def accum_oracle(cands, table, mode):
    clamp = lambda s: min(max(s, 1e-9), 1 - 1e-9)
    logit = lambda s: math.log(clamp(s) / (1 - clamp(s)))
    totals = {c.enum_index: 0.0 for c in cands}
    for a, b in itertools.combinations(sorted(c.enum_index for c in cands), 2):
        fwd = table[(a, b)]
        rev = table[(b, a)]
        if mode == "sigmoid":
            totals[a] += clamp(fwd[0]) + clamp(rev[1])
            totals[b] += clamp(fwd[1]) + clamp(rev[0])
        else:
            totals[a] += logit(fwd[0]) + logit(rev[1])
            totals[b] += logit(fwd[1]) + logit(rev[0])
    by_idx = {c.enum_index: c for c in cands}
    return max(
        by_idx.values(), key=lambda c: (totals[c.enum_index], c.tree_score, -c.enum_index)
    )


class TestSelect:
    def test_bestscore_picks_oracle_max(self):
        gold = bindings("http://x/gold")
        right = candidate(1, answers=bindings("http://x/gold"))
        wrong = candidate(0, answers=bindings("http://x/other"))
        assert select(BestScore(), [wrong, right], "q", gold) is right

    def test_bestscore_requires_gold(self):
        with pytest.raises(ValueError):
            select(BestScore(), [candidate(0)], "q", None)

    def test_empty_candidates_none(self):
        assert select(BestScore(), [], "q", bindings()) is None

    def test_single_candidate_returned_by_all_strategies(self):
        only = candidate(0)
        comp = BaselineComparator()
        assert select(MostWins(0.5, (comp,)), [only], "q") is only
        assert select(Accum("logits", (comp,)), [only], "q") is only

    def test_total_order_comparator_picks_top(self):
        cands = [candidate(i) for i in range(3)]
        table = {}
        for a, b in itertools.permutations(range(3), 2):
            table[(a, b)] = (0.9, 0.1) if a > b else (0.1, 0.9)
        winner = select(MostWins(0.0, (TableComparator(table),)), cands, "q")
        assert winner.enum_index == 2

    def test_symmetric_comparator_ties_break_on_tree_score(self):
        cands = [candidate(0, tree_score=0.3), candidate(1, tree_score=0.9)]
        table = {pair: (0.5, 0.5) for pair in itertools.permutations(range(2), 2)}
        winner = select(MostWins(0.25, (TableComparator(table),)), cands, "q")
        assert winner.enum_index == 1

    @pytest.mark.parametrize("margin", [0.0, 0.1, 0.25, 0.75])
    def test_mostwins_matches_tournament_oracle(self, margin):
        rng = random.Random(margin)
        for _ in range(60):
            n = rng.randint(2, 6)
            cands = [candidate(i, tree_score=rng.random()) for i in range(n)]
            table = symmetric_table(rng, range(n))
            got = select(MostWins(margin, (TableComparator(table),)), cands, "q")
            assert got is mostwins_oracle(cands, table, margin)

    @pytest.mark.parametrize("mode", ["logits", "sigmoid"])
    def test_accum_matches_summation_oracle(self, mode):
        rng = random.Random(mode)
        for _ in range(60):
            n = rng.randint(2, 6)
            cands = [candidate(i, tree_score=rng.random()) for i in range(n)]
            table = symmetric_table(rng, range(n))
            got = select(Accum(mode, (TableComparator(table),)), cands, "q")
            assert got is accum_oracle(cands, table, mode)

    def test_permutation_invariance(self):
        rng = random.Random(52)
        n = 5
        cands = [candidate(i, tree_score=rng.random()) for i in range(n)]
        table = symmetric_table(rng, range(n))
        strategies = [
            MostWins(0.1, (TableComparator(table),)),
            Accum("sigmoid", (TableComparator(table),)),
        ]
        for strategy in strategies:
            baseline = select(strategy, cands, "q")
            for _ in range(10):
                shuffled = cands[:]
                rng.shuffle(shuffled)
                assert select(strategy, shuffled, "q") is baseline

    def test_selected_is_member(self):
        rng = random.Random(3)
        cands = [candidate(i) for i in range(4)]
        table = symmetric_table(rng, range(4))
        got = select(MostWins(0.2, (TableComparator(table),)), cands, "q")
        assert got in cands

    def test_ensemble_outputs_summed(self):
        # two comparators with opposite preferences cancel out; tree score decides
        cands = [candidate(0, tree_score=0.1), candidate(1, tree_score=0.8)]
        pro0 = {pair: ((0.9, 0.1) if pair[0] == 0 else (0.1, 0.9))
                for pair in itertools.permutations(range(2), 2)}
        pro1 = {pair: ((0.9, 0.1) if pair[0] == 1 else (0.1, 0.9))
                for pair in itertools.permutations(range(2), 2)}
        ensemble = (TableComparator(pro0), TableComparator(pro1))
        winner = select(MostWins(0.0, ensemble), cands, "q")
        assert winner.enum_index == 1


class TestBaselineComparator:
    def test_identical_candidates_equal_raw(self):
        comp = BaselineComparator()
        out = comp("q", candidate(0), candidate(0))
        assert out.raw_a == out.raw_b

    def test_tree_score_monotonicity(self):
        comp = BaselineComparator()
        out = comp("q", candidate(0, tree_score=0.9), candidate(1, tree_score=0.3))
        assert out.raw_a > out.raw_b

    def test_antisymmetry_on_random_pairs(self):
        comp = BaselineComparator()
        rng = random.Random(11)
        for _ in range(100):
            a = candidate(0, result_count=rng.randint(0, 50), tree_score=rng.random(),
                          n_patterns=rng.randint(1, 3))
            b = candidate(1, result_count=rng.randint(0, 50), tree_score=rng.random(),
                          n_patterns=rng.randint(1, 3))
            fwd = comp("q", a, b)
            rev = comp("q", b, a)
            assert fwd.raw_a == rev.raw_b
            assert fwd.raw_b == rev.raw_a

    def test_sigmoid_invariant(self):
        out = ComparatorOutput.from_raw(1.7, -0.4)
        assert out.sig_a == pytest.approx(1 / (1 + math.exp(-1.7)))
        assert out.sig_b == pytest.approx(1 / (1 + math.exp(0.4)))


class TestExternalComparator:
    def test_subprocess_round_trip(self):
        stub = pathlib.Path(__file__).parent / "comparator_stub.py"
        comp = ExternalComparator([sys.executable, str(stub)], timeout_s=10)
        try:
            short = candidate(0)
            long_query = CandidateQuery(
                query_text="q" * 400,
                ir=short.ir,
                dudes_text="d",
                tree_score=0.5,
                enum_index=1,
                result_count=1,
                answers=bindings("http://x/a"),
            )
            out = comp("q", short, long_query)
            assert out.raw_a > out.raw_b
            winner = select(MostWins(0.0, (comp,)), [short, long_query], "q")
            assert winner is short
        finally:
            comp.close()
