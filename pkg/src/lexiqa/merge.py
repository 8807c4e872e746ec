"""Merging rules that collapse dependency nodes into phrase-level nodes.

Rule order is fixed: generic rules to fixpoint, then lexicon marker rules,
then entity-span merging.  Every application absorbs exactly one node (or
marks one node), and every application is recorded in a replayable trace.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

from .deptree import DepNode, DepTree, SpecialMark
from .lexicon import Lexicon, normalize_form
from .match import EntitySpan, _strip_leading, _strip_trailing_adp

__all__ = [
    "MergeRule",
    "MergeTrace",
    "MergeStep",
    "RuleKind",
    "GENERIC_RULES",
    "apply_generic_rules",
    "apply_marker_rules",
    "apply_entity_merging",
    "mark_special_nodes",
    "replay",
]

WH_LEMMAS = {"who", "what", "which", "where", "when", "how", "whom", "whose", "why"}
_ASK_SURFACES = {"is", "are", "was", "were", "do", "does", "did", "can", "could", "has", "have"}


class RuleKind(str, Enum):
    GENERIC = "generic"
    LEXICON_MARKER = "lexicon_marker"
    ENTITY_MERGING = "entity_merging"


@dataclass(frozen=True, slots=True)
class MergeStep:
    rule: str
    absorbed: int
    surviving: int


@dataclass(slots=True)
class MergeTrace:
    steps: list[MergeStep]

    def extend(self, other: "MergeTrace") -> None:
        self.steps.extend(other.steps)


def _absorb(tree: DepTree, absorbed_id: int, surviving_id: int) -> None:
    absorbed = tree.node(absorbed_id)
    survivor = tree.node(surviving_id)
    survivor.tokens = sorted(survivor.tokens + absorbed.tokens, key=lambda t: t.index)
    if absorbed.numeric_value is not None and survivor.numeric_value is None:
        survivor.numeric_value = absorbed.numeric_value
    for node in tree.nodes:
        if node.head_id == absorbed_id and node.node_id != surviving_id:
            node.head_id = surviving_id
    tree.nodes = [n for n in tree.nodes if n.node_id != absorbed_id]


def _drop(tree: DepTree, node_id: int) -> None:
    node = tree.node(node_id)
    for child in tree.nodes:
        if child.head_id == node_id:
            child.head_id = node.head_id
    tree.nodes = [n for n in tree.nodes if n.node_id != node_id]


def _apply_step(tree: DepTree, step: MergeStep) -> None:
    rule = step.rule
    if rule == "punct":
        _drop(tree, step.absorbed)
    elif rule == "mark_ask":
        tree.node(step.surviving).special_mark = SpecialMark.ASK_KEYWORD
    elif rule == "mark_prep_in":
        tree.node(step.surviving).special_mark = SpecialMark.PREPOSITION_IN
    else:
        _absorb(tree, step.absorbed, step.surviving)
        if rule == "comparative_more":
            tree.node(step.surviving).special_mark = SpecialMark.COMPARATIVE_MORE
        elif rule == "comparative_fewer":
            tree.node(step.surviving).special_mark = SpecialMark.COMPARATIVE_FEWER
        elif rule == "how_many":
            tree.node(step.surviving).special_mark = SpecialMark.COUNT_KEYWORD


def replay(pre_tree: DepTree, trace: MergeTrace) -> DepTree:
    """Re-run a trace on the pre-merge tree; reproduces the merged tree."""
    tree = pre_tree.copy()
    for step in trace.steps:
        _apply_step(tree, step)
    return tree


def _record(tree: DepTree, trace: MergeTrace, step: MergeStep) -> None:
    _apply_step(tree, step)
    trace.steps.append(step)


def _lexicon_covers(lex: Lexicon | None, phrase: str) -> bool:
    return lex is not None and normalize_form(phrase) in lex.form_index


def _combined_phrase(parent: DepNode, child: DepNode) -> str:
    tokens = sorted(parent.tokens + child.tokens, key=lambda t: t.index)
    return " ".join(t.surface for t in tokens)


Applicability = Callable[[DepTree, DepNode, DepNode, "Lexicon | None"], bool]


@dataclass(frozen=True, slots=True)
class MergeRule:
    """One merging rule: applying it absorbs the child into the parent."""

    name: str
    kind: RuleKind
    applicability: Applicability


def _lemma1(node: DepNode) -> str:
    return node.tokens[0].lemma.lower() if len(node.tokens) == 1 else ""


def _is_det(tree, child, parent, lex) -> bool:
    return child.deprel == "det"


def _is_compound(tree, child, parent, lex) -> bool:
    if child.deprel == "fixed":
        return True
    # proper-name sequences are left for the entity merging rule
    return child.deprel in ("compound", "flat", "flat:name") and not (
        child.upos == "PROPN" and parent.upos == "PROPN"
    )


def _is_comparative(lemma: str) -> Applicability:
    def applies(tree, child, parent, lex):
        return _lemma1(child) == lemma and child.deprel in ("advmod", "amod", "det")

    return applies


def _is_how_before_many(tree, child, parent, lex) -> bool:
    return _lemma1(child) == "how" and _lemma1(parent) == "many"


def _is_how_many(tree, child, parent, lex) -> bool:
    lemmas = [t.lemma.lower() for t in child.tokens]
    return lemmas == ["how", "many"] and child.deprel in ("amod", "det", "advmod")


def _is_covered_amod(tree, child, parent, lex) -> bool:
    return child.deprel == "amod" and _lexicon_covers(lex, _combined_phrase(parent, child))


GENERIC_RULES: tuple[MergeRule, ...] = (
    MergeRule("det", RuleKind.GENERIC, _is_det),
    MergeRule("compound", RuleKind.GENERIC, _is_compound),
    MergeRule("comparative_more", RuleKind.GENERIC, _is_comparative("more")),
    MergeRule("comparative_fewer", RuleKind.GENERIC, _is_comparative("fewer")),
    MergeRule("how_many_compound", RuleKind.GENERIC, _is_how_before_many),
    MergeRule("how_many", RuleKind.GENERIC, _is_how_many),
    MergeRule("amod_lexicon", RuleKind.GENERIC, _is_covered_amod),
)


def _generic_candidate(tree: DepTree, lex: Lexicon | None) -> MergeStep | None:
    """First applicable generic rule, scanning nodes in id order.

    Punctuation removal runs ahead of everything else; the remaining rules
    are tried per child node in registry order.
    """
    for node in sorted(tree.nodes, key=lambda n: n.node_id):
        if node.node_id == tree.root_id:
            continue
        if node.upos == "PUNCT" or node.deprel == "punct":
            return MergeStep("punct", node.node_id, node.head_id)
    for node in sorted(tree.nodes, key=lambda n: n.node_id):
        if node.head_id == 0:
            continue
        parent = tree.node(node.head_id)
        for rule in GENERIC_RULES:
            if rule.applicability(tree, node, parent, lex):
                return MergeStep(rule.name, node.node_id, parent.node_id)
    return None


def apply_generic_rules(tree: DepTree, lex: Lexicon | None = None) -> tuple[DepTree, MergeTrace]:
    """Punctuation, det/compound absorption, comparatives, count keywords.

    Runs to fixpoint; also marks a sentence-initial auxiliary as the ASK
    keyword when the question has no WH word.
    """
    tree = tree.copy()
    trace = MergeTrace(steps=[])
    while True:
        step = _generic_candidate(tree, lex)
        if step is None:
            break
        _record(tree, trace, step)
    lemmas = {t.lemma.lower() for n in tree.nodes for t in n.tokens}
    if not (lemmas & WH_LEMMAS):
        first = min(
            (t for n in tree.nodes for t in n.tokens), key=lambda t: t.index, default=None
        )
        if first is not None and (first.upos == "AUX" or first.surface.lower() in _ASK_SURFACES):
            holder = next(n for n in tree.nodes if first in n.tokens)
            if holder.special_mark is None:
                _record(tree, trace, MergeStep("mark_ask", holder.node_id, holder.node_id))
    tree.validate()
    return tree, trace


def _marker_entries(lex: Lexicon, node: DepNode) -> list[str]:
    """Markers of lexicon entries whose form matches this node's phrase."""
    probes = [
        node.phrase,
        " ".join(t.surface for t in _strip_leading(node.tokens)),
        " ".join(t.surface for t in _strip_trailing_adp(_strip_leading(node.tokens))),
        " ".join(t.lemma for t in _strip_trailing_adp(_strip_leading(node.tokens))),
    ]
    markers: set[str] = set()
    for probe in probes:
        for entry_id in lex.form_index.get(normalize_form(probe), []):
            entry = lex.entry(entry_id)
            if entry.marker:
                markers.add(entry.marker.lower())
    return sorted(markers)


def _marker_candidate(tree: DepTree, lex: Lexicon) -> MergeStep | None:
    for node in sorted(tree.nodes, key=lambda n: n.node_id):
        surfaces = {t.surface.lower() for t in node.tokens}
        for marker in _marker_entries(lex, node):
            if marker in surfaces:
                continue  # already absorbed
            # the marker node is an ADP child of this node, or of one of its
            # children (parsers attach case markers to the complement)
            pool = list(tree.children(node.node_id))
            for child in list(pool):
                pool.extend(tree.children(child.node_id))
            for cand in sorted(pool, key=lambda n: n.node_id):
                if (
                    cand.upos == "ADP"
                    and len(cand.tokens) == 1
                    and cand.tokens[0].surface.lower() == marker
                ):
                    return MergeStep("marker", cand.node_id, node.node_id)
    return None


def apply_marker_rules(tree: DepTree, lex: Lexicon) -> tuple[DepTree, MergeTrace]:
    """Merge adposition marker nodes into the node bearing the entry form."""
    tree = tree.copy()
    trace = MergeTrace(steps=[])
    while True:
        step = _marker_candidate(tree, lex)
        if step is None:
            break
        _record(tree, trace, step)
    tree.validate()
    return tree, trace


def mark_special_nodes(tree: DepTree) -> tuple[DepTree, MergeTrace]:
    """Mark leftover standalone "in" adpositions for the scorer."""
    tree = tree.copy()
    trace = MergeTrace(steps=[])
    for node in sorted(tree.nodes, key=lambda n: n.node_id):
        if (
            node.special_mark is None
            and node.upos == "ADP"
            and len(node.tokens) == 1
            and node.tokens[0].surface.lower() == "in"
        ):
            _record(tree, trace, MergeStep("mark_prep_in", node.node_id, node.node_id))
    return tree, trace


def _maximal_disjoint(spans: list[EntitySpan]) -> list[tuple[EntitySpan, ...]]:
    """All maximal subsets of pairwise non-overlapping spans."""
    if len(spans) > 8:
        spans = spans[:8]
    subsets: list[tuple[EntitySpan, ...]] = []

    def rec(i: int, chosen: list[EntitySpan]) -> None:
        if i == len(spans):
            subsets.append(tuple(chosen))
            return
        span = spans[i]
        if not any(span.overlaps(c) for c in chosen):
            rec(i + 1, chosen + [span])
        rec(i + 1, chosen)

    rec(0, [])
    keys = [frozenset(s.node_ids for s in subset) for subset in subsets]
    maximal = []
    seen: set[frozenset] = set()
    for subset, key in zip(subsets, keys):
        if key in seen:
            continue
        if any(other > key for other in keys):
            continue
        seen.add(key)
        maximal.append(subset)
    return maximal


def apply_entity_merging(
    tree: DepTree, spans: list[EntitySpan]
) -> list[tuple[DepTree, MergeTrace]]:
    """Merge multi-node entity spans into their head-most node.

    Overlapping spans branch into separate tree variants, one per maximal
    non-overlapping span selection; without overlaps this yields a single
    variant.  The merged node inherits the span's entity candidates.
    """
    usable = [s for s in spans if len(s.node_ids) >= 2]
    if not usable:
        return [(tree.copy(), MergeTrace(steps=[]))]
    variants = []
    for selection in _maximal_disjoint(usable):
        merged = tree.copy()
        trace = MergeTrace(steps=[])
        for span in selection:
            ids = set(span.node_ids)
            if not ids <= {n.node_id for n in merged.nodes}:
                continue
            heads = [i for i in span.node_ids if merged.node(i).head_id not in ids]
            if len(heads) != 1:
                continue
            survivor = heads[0]
            for node_id in span.node_ids:
                if node_id != survivor:
                    _record(merged, trace, MergeStep("entity", node_id, survivor))
            node = merged.node(survivor)
            existing = {m.iri for m in node.entity_candidates}
            node.entity_candidates = list(node.entity_candidates) + [
                m for m in span.matches if m.iri not in existing
            ]
        merged.validate()
        variants.append((merged, trace))
    return variants
