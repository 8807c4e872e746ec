"""Underspecified discourse structures and their composition.

A structure is a triple (main variable, DRS, selection pairs): the DRS is
a variable universe plus conditions, and each selection pair is an open
argument slot, optionally constrained by a marker word.  Composition
substitutes one structure into another through a selection pair:

    U_c = U2[x := v1] | U1        S_c = (S2 | S1) - {p}
    C_c = C2[x := v1] | C1        v_c = v1 if x = v2 else v2

Atomic structures are built from annotated tree nodes; a bottom-up fold
over the tree enumerates complete candidate meanings lazily, one final
structure at a time, so combinatorial blowup only costs what is consumed.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .deptree import DepNode, DepTree, SpecialMark
from .errors import CompositionError
from .lexicon import Frame, LexicalEntry, Lexicon, SubjArg
from .terms import IRI, Literal, Term

__all__ = [
    "Var",
    "VarSession",
    "PropertyAtom",
    "Equality",
    "ClassAtom",
    "Comparison",
    "Aggregation",
    "Ordering",
    "QueryFormHint",
    "Condition",
    "SelectionPair",
    "Dudes",
    "entity_dudes",
    "class_dudes",
    "property_dudes",
    "superlative_dudes",
    "comparison_dudes",
    "ask_hint_dudes",
    "compose",
    "compose_tree",
    "canonical_text",
]


@dataclass(frozen=True, slots=True)
class Var:
    id: int

    def __repr__(self) -> str:
        return f"?{self.id}"


class VarSession:
    """Fresh-variable source; ids are never reused within a session."""

    def __init__(self) -> None:
        self._counter = itertools.count(1)

    def fresh(self) -> Var:
        return Var(next(self._counter))


_GLOBAL_SESSION = VarSession()


@dataclass(frozen=True, slots=True)
class PropertyAtom:
    pred: str
    subj: "Var | Term"
    obj: "Var | Term"


@dataclass(frozen=True, slots=True)
class Equality:
    var: Var
    term: Term


@dataclass(frozen=True, slots=True)
class ClassAtom:
    cls: str
    var: Var


@dataclass(frozen=True, slots=True)
class Comparison:
    op: str  # one of < <= > >= = !=
    lhs: Var
    rhs: "Var | float"


@dataclass(frozen=True, slots=True)
class Aggregation:
    kind: str  # only "count"
    in_var: Var
    out_var: Var


@dataclass(frozen=True, slots=True)
class Ordering:
    var: Var
    direction: str  # "max" or "min"
    limit: int


@dataclass(frozen=True, slots=True)
class QueryFormHint:
    form: str  # "select" or "ask"


Condition = PropertyAtom | Equality | ClassAtom | Comparison | Aggregation | Ordering | QueryFormHint


@dataclass(frozen=True, slots=True)
class SelectionPair:
    var: Var
    marker: str | None = None


def _cond_vars(cond: Condition) -> tuple[Var, ...]:
    if isinstance(cond, PropertyAtom):
        return tuple(t for t in (cond.subj, cond.obj) if isinstance(t, Var))
    if isinstance(cond, Equality):
        return (cond.var,)
    if isinstance(cond, ClassAtom):
        return (cond.var,)
    if isinstance(cond, Comparison):
        out = [cond.lhs] if isinstance(cond.lhs, Var) else []
        if isinstance(cond.rhs, Var):
            out.append(cond.rhs)
        return tuple(out)
    if isinstance(cond, Aggregation):
        return (cond.in_var, cond.out_var)
    if isinstance(cond, Ordering):
        return (cond.var,)
    return ()


def _subst_cond(cond: Condition, old: Var, new: Var) -> Condition:
    def sub(value):
        return new if value == old else value

    if isinstance(cond, PropertyAtom):
        return PropertyAtom(cond.pred, sub(cond.subj), sub(cond.obj))
    if isinstance(cond, Equality):
        return Equality(sub(cond.var), cond.term)
    if isinstance(cond, ClassAtom):
        return ClassAtom(cond.cls, sub(cond.var))
    if isinstance(cond, Comparison):
        return Comparison(cond.op, sub(cond.lhs), sub(cond.rhs) if isinstance(cond.rhs, Var) else cond.rhs)
    if isinstance(cond, Aggregation):
        return Aggregation(cond.kind, sub(cond.in_var), sub(cond.out_var))
    if isinstance(cond, Ordering):
        return Ordering(sub(cond.var), cond.direction, cond.limit)
    return cond


@dataclass(frozen=True, slots=True)
class Dudes:
    main: Var | None
    universe: frozenset[Var]
    conditions: tuple[Condition, ...]
    selection_pairs: tuple[SelectionPair, ...]

    def __post_init__(self) -> None:
        if self.main is not None and self.main not in self.universe:
            raise CompositionError("main variable outside the universe")
        for pair in self.selection_pairs:
            if pair.var not in self.universe:
                raise CompositionError("selection pair variable outside the universe")
        for cond in self.conditions:
            for var in _cond_vars(cond):
                if var not in self.universe:
                    raise CompositionError("condition variable outside the universe")

    @property
    def is_hint_only(self) -> bool:
        return not self.universe and all(
            isinstance(c, QueryFormHint) for c in self.conditions
        )


def _dedup(conds: Iterable[Condition]) -> tuple[Condition, ...]:
    seen: set[Condition] = set()
    out = []
    for cond in conds:
        if cond not in seen:
            seen.add(cond)
            out.append(cond)
    return tuple(out)


# ---------------------------------------------------------------------------
# atomic constructors


def entity_dudes(iri: str, session: VarSession | None = None) -> Dudes:
    """Meaning of a grounded entity: fresh z with z = <iri>, no open slots."""
    session = session or _GLOBAL_SESSION
    z = session.fresh()
    return Dudes(
        main=z,
        universe=frozenset([z]),
        conditions=(Equality(z, IRI(iri)),),
        selection_pairs=(),
    )


def class_dudes(cls_iri: str, session: VarSession | None = None) -> Dudes:
    """Meaning of a class noun: fresh w restricted to instances of the class."""
    session = session or _GLOBAL_SESSION
    w = session.fresh()
    return Dudes(
        main=w,
        universe=frozenset([w]),
        conditions=(ClassAtom(cls_iri, w),),
        selection_pairs=(),
    )


def property_dudes(entry: LexicalEntry, session: VarSession | None = None) -> Dudes:
    """Binary property slot structure for a non-superlative entry.

    The marked variable is the one the marker phrase fills; its triple
    position follows the entry's subject-argument flag.  The main variable
    is the other, unmarked side, which is where answers come from once the
    marked slot is filled.
    """
    if entry.frame is Frame.ADJECTIVE_SUPERLATIVE:
        raise CompositionError("superlative entries use superlative_dudes")
    session = session or _GLOBAL_SESSION
    marked = session.fresh()
    value = session.fresh()
    if entry.subj_arg is SubjArg.SUBJECT_OF_PROPERTY:
        atom = PropertyAtom(entry.reference, marked, value)
    else:
        atom = PropertyAtom(entry.reference, value, marked)
    return Dudes(
        main=value,
        universe=frozenset([marked, value]),
        conditions=(atom,),
        selection_pairs=(SelectionPair(marked, entry.marker), SelectionPair(value, None)),
    )


def superlative_dudes(entry: LexicalEntry, session: VarSession | None = None) -> Dudes:
    """Superlative adjective: restricted set ordered by the property value."""
    if entry.frame is not Frame.ADJECTIVE_SUPERLATIVE:
        raise CompositionError("superlative_dudes requires a superlative entry")
    if entry.degree is None:
        raise CompositionError("superlative entry is missing its degree")
    session = session or _GLOBAL_SESSION
    x = session.fresh()
    y = session.fresh()
    return Dudes(
        main=x,
        universe=frozenset([x, y]),
        conditions=(
            PropertyAtom(entry.reference, x, y),
            Ordering(y, entry.degree.value, 1),
        ),
        selection_pairs=(SelectionPair(x, None),),
    )


def comparison_dudes(op: str, value: float, session: VarSession | None = None) -> Dudes:
    """Comparative restriction ("more than five ...")."""
    session = session or _GLOBAL_SESSION
    v = session.fresh()
    return Dudes(
        main=v,
        universe=frozenset([v]),
        conditions=(Comparison(op, v, value),),
        selection_pairs=(),
    )


def literal_dudes(value: float, session: VarSession | None = None) -> Dudes:
    """A bare numeral used as an argument."""
    session = session or _GLOBAL_SESSION
    v = session.fresh()
    lex = str(int(value)) if value == int(value) else repr(value)
    return Dudes(
        main=v,
        universe=frozenset([v]),
        conditions=(Equality(v, Literal(lex)),),
        selection_pairs=(),
    )


def ask_hint_dudes() -> Dudes:
    """Marker structure flipping the final query into ASK form."""
    return Dudes(
        main=None,
        universe=frozenset(),
        conditions=(QueryFormHint("ask"),),
        selection_pairs=(),
    )


# ---------------------------------------------------------------------------
# composition


def compose(d1: Dudes, d2: Dudes, pair: SelectionPair) -> Dudes:
    """Substitute d1 into d2 through one of d2's selection pairs.

    Implements the four composition equations exactly; universes must be
    disjoint, which fresh-variable allocation guarantees by construction.
    """
    if pair not in d2.selection_pairs:
        raise CompositionError("selection pair does not belong to the host structure")
    if d1.universe & d2.universe:
        raise CompositionError("universes are not disjoint")
    if d1.main is None:
        raise CompositionError("argument structure has no main variable")
    x = pair.var
    v1 = d1.main
    universe = frozenset(v1 if v == x else v for v in d2.universe) | d1.universe
    conditions = _dedup(
        tuple(_subst_cond(c, x, v1) for c in d2.conditions) + d1.conditions
    )
    pairs = tuple(p for p in d2.selection_pairs if p != pair) + d1.selection_pairs
    main = v1 if x == d2.main else d2.main
    return Dudes(main=main, universe=universe, conditions=conditions, selection_pairs=pairs)


def _union_hints(d: Dudes, hint: Dudes) -> Dudes:
    return Dudes(
        main=d.main,
        universe=d.universe,
        conditions=_dedup(d.conditions + hint.conditions),
        selection_pairs=d.selection_pairs,
    )


# ---------------------------------------------------------------------------
# canonical text form


def _term_text(value) -> str:
    if isinstance(value, (IRI, Literal)):
        return value.n3()
    return str(value)


def canonical_text(d: Dudes) -> str:
    """Stable text form: canonical variable numbers, sorted conditions."""
    order: dict[Var, int] = {}

    def name(var: Var) -> str:
        if var not in order:
            order[var] = len(order)
        return f"?x{order[var]}"

    if d.main is not None:
        name(d.main)
    for cond in d.conditions:
        for var in _cond_vars(cond):
            name(var)
    for pair in d.selection_pairs:
        name(pair.var)

    def render(cond: Condition) -> str:
        if isinstance(cond, PropertyAtom):
            subj = name(cond.subj) if isinstance(cond.subj, Var) else _term_text(cond.subj)
            obj = name(cond.obj) if isinstance(cond.obj, Var) else _term_text(cond.obj)
            return f"{cond.pred}({subj},{obj})"
        if isinstance(cond, Equality):
            return f"{name(cond.var)} = {_term_text(cond.term)}"
        if isinstance(cond, ClassAtom):
            return f"type({name(cond.var)},{cond.cls})"
        if isinstance(cond, Comparison):
            rhs = name(cond.rhs) if isinstance(cond.rhs, Var) else repr(cond.rhs)
            return f"{name(cond.lhs)} {cond.op} {rhs}"
        if isinstance(cond, Aggregation):
            return f"{name(cond.out_var)} = {cond.kind}({name(cond.in_var)})"
        if isinstance(cond, Ordering):
            return f"order({name(cond.var)},{cond.direction},{cond.limit})"
        return f"form({cond.form})"

    conds = sorted(render(c) for c in d.conditions)
    pairs = sorted(
        f"({name(p.var)},{p.marker or 'ε'})" for p in d.selection_pairs
    )
    main = name(d.main) if d.main is not None else "ε"
    return f"main={main}; conds={{{'; '.join(conds)}}}; pairs={{{', '.join(pairs)}}}"


# ---------------------------------------------------------------------------
# tree composition

_FOCUS_LEMMAS = {"which", "what", "whose"}


@dataclass(slots=True)
class _Assembly:
    dudes: Dudes | None
    origins: dict[int, Var] = field(default_factory=dict)


class TreeComposer:
    """Lazy bottom-up enumeration of final structures for one tree."""

    def __init__(
        self,
        tree: DepTree,
        lex: Lexicon,
        class_iris: frozenset[str] = frozenset(),
        max_entry_candidates: int = 3,
        max_entity_candidates: int = 3,
        stats: dict | None = None,
    ) -> None:
        self.tree = tree
        self.lex = lex
        self.class_iris = class_iris
        self.max_entry = max_entry_candidates
        self.max_entity = max_entity_candidates
        self.session = VarSession()
        self.stats = stats if stats is not None else {}
        self.stats.setdefault("pruned", 0)
        self._atomic_cache: dict[int, list[Dudes | None]] = {}

    # -- node candidates -----------------------------------------------

    def _atomic(self, node: DepNode) -> list[Dudes | None]:
        if node.node_id in self._atomic_cache:
            return self._atomic_cache[node.node_id]
        cands: list[Dudes | None] = []
        for pm in node.entry_candidates[: self.max_entry]:
            entry = self.lex.entry(pm.entry_id)
            if entry.frame is Frame.ADJECTIVE_SUPERLATIVE:
                cands.append(superlative_dudes(entry, self.session))
            else:
                cands.append(property_dudes(entry, self.session))
        for em in node.entity_candidates[: self.max_entity]:
            if em.iri in self.class_iris:
                cands.append(class_dudes(em.iri, self.session))
            else:
                cands.append(entity_dudes(em.iri, self.session))
        if node.special_mark in (SpecialMark.COMPARATIVE_MORE, SpecialMark.COMPARATIVE_FEWER):
            if node.numeric_value is not None:
                op = ">" if node.special_mark is SpecialMark.COMPARATIVE_MORE else "<"
                cands = [comparison_dudes(op, node.numeric_value, self.session)]
            else:
                cands = [None]  # unconverted textual number, nothing to compare
        elif node.special_mark is SpecialMark.ASK_KEYWORD and not cands:
            cands = [ask_hint_dudes()]
        elif not cands:
            if node.numeric_value is not None:
                cands = [literal_dudes(node.numeric_value, self.session)]
            else:
                cands = [None]
        self._atomic_cache[node.node_id] = cands
        return cands

    # -- folding ---------------------------------------------------------

    def _ordered_pairs(
        self, host: Dudes, arg: Dudes, parent: DepNode, child: DepNode
    ) -> list[SelectionPair]:
        pool = {t.surface.lower() for t in parent.tokens} | {
            t.surface.lower() for t in child.tokens
        }
        numeric_arg = any(
            isinstance(c, Comparison)
            or (isinstance(c, Equality) and isinstance(c.term, Literal))
            for c in arg.conditions
        )

        def key(item: tuple[int, SelectionPair]):
            idx, pair = item
            marker_rank = 0 if (pair.marker and pair.marker.lower() in pool) else 1
            object_rank = 0
            if numeric_arg:
                object_rank = (
                    0
                    if any(
                        isinstance(c, PropertyAtom) and c.obj == pair.var
                        for c in host.conditions
                    )
                    else 1
                )
            return (marker_rank, object_rank, idx)

        return [pair for _, pair in sorted(enumerate(host.selection_pairs), key=key)]

    def _combine(
        self, acc: _Assembly, child_asm: _Assembly, parent: DepNode, child: DepNode
    ) -> Iterator[_Assembly]:
        m = child_asm.dudes
        if m is None:
            yield acc
            return
        if acc.dudes is None:
            yield _Assembly(m, dict(child_asm.origins))
            return
        if m.is_hint_only:
            yield _Assembly(_union_hints(acc.dudes, m), dict(acc.origins))
            return
        if acc.dudes.is_hint_only:
            merged = _union_hints(m, acc.dudes)
            yield _Assembly(merged, dict(child_asm.origins))
            return
        host, host_org = acc.dudes, acc.origins
        arg, arg_org = m, child_asm.origins
        # modifier nodes invert the direction: the parent meaning is
        # substituted into the child meaning
        if child.deprel == "amod" and m.selection_pairs:
            host, host_org, arg, arg_org = m, child_asm.origins, acc.dudes, acc.origins
        if not host.selection_pairs and arg.selection_pairs:
            host, host_org, arg, arg_org = arg, arg_org, host, host_org
        if not host.selection_pairs:
            self.stats["pruned"] += 1
            return
        for pair in self._ordered_pairs(host, arg, parent, child):
            composed = compose(arg, host, pair)
            origins = {
                node_id: (arg.main if var == pair.var else var)
                for node_id, var in host_org.items()
            }
            origins.update(arg_org)
            yield _Assembly(composed, origins)

    def _fold_children(
        self, acc: _Assembly, children: list[DepNode], parent: DepNode
    ) -> Iterator[_Assembly]:
        if not children:
            yield acc
            return
        head, rest = children[0], children[1:]
        for child_asm in self._node(head):
            for combined in self._combine(acc, child_asm, parent, head):
                yield from self._fold_children(combined, rest, parent)

    def _node(self, node: DepNode) -> Iterator[_Assembly]:
        children = sorted(self.tree.children(node.node_id), key=lambda n: n.node_id)
        for own in self._atomic(node):
            origins = {}
            if own is not None and own.main is not None:
                origins[node.node_id] = own.main
            yield from self._fold_children(_Assembly(own, origins), children, node)

    # -- finals -----------------------------------------------------------

    def _focus_node(self) -> int | None:
        for node in sorted(self.tree.nodes, key=lambda n: n.node_id):
            has_wh = any(t.lemma.lower() in _FOCUS_LEMMAS for t in node.tokens)
            counted = node.special_mark is SpecialMark.COUNT_KEYWORD
            if (has_wh or counted) and (node.entry_candidates or node.entity_candidates):
                return node.node_id
        return None

    def finals(self) -> Iterator[Dudes]:
        focus = self._focus_node()
        count_question = any(
            n.special_mark is SpecialMark.COUNT_KEYWORD for n in self.tree.nodes
        )
        ask_question = any(
            n.special_mark is SpecialMark.ASK_KEYWORD for n in self.tree.nodes
        )
        seen: set[str] = set()
        root = self.tree.node(self.tree.root_id)
        for asm in self._node(root):
            d = asm.dudes
            if d is None or d.is_hint_only or not d.conditions:
                continue
            if ask_question:
                # survives even when the marked auxiliary was matched or merged
                d = _union_hints(d, ask_hint_dudes())
            readings = []
            focus_var = asm.origins.get(focus) if focus is not None else None
            if focus_var is not None and focus_var != d.main and focus_var in d.universe:
                readings.append(
                    Dudes(
                        main=focus_var,
                        universe=d.universe,
                        conditions=d.conditions,
                        selection_pairs=d.selection_pairs,
                    )
                )
            readings.append(d)
            for reading in readings:
                candidates = []
                if count_question and reading.main is not None:
                    out = self.session.fresh()
                    candidates.append(
                        Dudes(
                            main=reading.main,
                            universe=reading.universe | {out},
                            conditions=reading.conditions
                            + (Aggregation("count", reading.main, out),),
                            selection_pairs=reading.selection_pairs,
                        )
                    )
                candidates.append(reading)
                for candidate in candidates:
                    key = canonical_text(candidate)
                    if key not in seen:
                        seen.add(key)
                        yield candidate


def compose_tree(
    tree: DepTree,
    lex: Lexicon,
    class_iris: frozenset[str] = frozenset(),
    stats: dict | None = None,
) -> Iterator[Dudes]:
    """Yield final candidate structures for an annotated tree, lazily.

    Enumeration is deterministic and depth-first over per-node candidate
    choices and per-composition selection-pair choices; branches that leave
    no composable pair are pruned silently.
    """
    return TreeComposer(tree, lex, class_iris=class_iris, stats=stats).finals()
