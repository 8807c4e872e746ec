"""Translate a final meaning structure into one executable SPARQL query.

Variable boundness is decided by a fixpoint propagation over equality and
aggregation conditions (the condition language is conjunctive, so this is
sound and complete for inlining purposes).  Equality-bound variables are
inlined as terms; the projection is the main variable when free, otherwise
the unique free pattern variable.
"""

from __future__ import annotations

from dataclasses import dataclass

from .dudes import (
    Aggregation,
    ClassAtom,
    Comparison,
    Dudes,
    Equality,
    Ordering,
    PropertyAtom,
    QueryFormHint,
    Var,
)
from .errors import ProjectionError
from .terms import IRI, RDF_TYPE, Term

__all__ = [
    "QueryIR",
    "BoundnessReport",
    "analyze_boundness",
    "to_query",
    "serialize",
]

TriplePattern = tuple["Var | Term", str, "Var | Term"]


@dataclass(frozen=True, slots=True)
class QueryIR:
    form: str  # select | ask | count
    projection: tuple[Var, ...]
    patterns: tuple[TriplePattern, ...]
    filters: tuple[Comparison, ...] = ()
    order: tuple[Var, str, int] | None = None  # var, max|min, limit
    distinct: bool = True


@dataclass(frozen=True, slots=True)
class BoundnessReport:
    bound: frozenset[Var]
    free: frozenset[Var]


def analyze_boundness(d: Dudes) -> BoundnessReport:
    """Which variables are forced to concrete values.

    A variable is bound when an equality ties it to a term, or when it is
    the output of an aggregation whose input is bound or is the structure's
    own (projected) main variable.  Everything else stays free.
    """
    bound: set[Var] = {c.var for c in d.conditions if isinstance(c, Equality)}
    changed = True
    while changed:
        changed = False
        for cond in d.conditions:
            if isinstance(cond, Aggregation) and cond.out_var not in bound:
                if cond.in_var in bound or cond.in_var == d.main:
                    bound.add(cond.out_var)
                    changed = True
    return BoundnessReport(bound=frozenset(bound), free=frozenset(d.universe - bound))


def to_query(d: Dudes) -> QueryIR:
    """Build the query IR for one final structure.

    Raises ProjectionError when no sound projection exists; callers treat
    that as a pruned enumeration branch.
    """
    report = analyze_boundness(d)
    inline: dict[Var, Term] = {}
    for cond in d.conditions:
        if isinstance(cond, Equality) and cond.var not in inline:
            inline[cond.var] = cond.term

    def resolve(value):
        if isinstance(value, Var):
            return inline.get(value, value)
        return value

    patterns: list[TriplePattern] = []
    filters: list[Comparison] = []
    order: tuple[Var, str, int] | None = None
    form = "select"
    aggregation: Aggregation | None = None
    for cond in d.conditions:
        if isinstance(cond, PropertyAtom):
            patterns.append((resolve(cond.subj), cond.pred, resolve(cond.obj)))
        elif isinstance(cond, ClassAtom):
            patterns.append((resolve(cond.var), RDF_TYPE, IRI(cond.cls)))
        elif isinstance(cond, Comparison):
            filters.append(cond)
        elif isinstance(cond, Ordering):
            if order is not None:
                raise ProjectionError("multiple ordering constraints")
            order = (cond.var, cond.direction, cond.limit)
        elif isinstance(cond, QueryFormHint):
            if cond.form == "ask":
                form = "ask"
        elif isinstance(cond, Aggregation):
            aggregation = cond
    if not patterns:
        raise ProjectionError("no graph pattern")
    pattern_vars: list[Var] = []
    for subj, _, obj in patterns:
        for value in (subj, obj):
            if isinstance(value, Var) and value not in pattern_vars:
                pattern_vars.append(value)
    if order is not None and order[0] not in pattern_vars:
        order = None  # ordering over an inlined or absent variable is a no-op
    filters = [f for f in filters if f.lhs in pattern_vars]

    if form == "ask":
        return QueryIR(
            form="ask",
            projection=(),
            patterns=tuple(patterns),
            filters=tuple(filters),
            order=order,
            distinct=False,
        )

    free_pattern_vars = [v for v in pattern_vars if v in report.free]
    if aggregation is not None:
        in_var = aggregation.in_var
        if in_var not in free_pattern_vars:
            raise ProjectionError("count input is not a free pattern variable")
        return QueryIR(
            form="count",
            projection=(in_var,),
            patterns=tuple(patterns),
            filters=tuple(filters),
            order=order,
            distinct=True,
        )
    if d.main is not None and d.main in free_pattern_vars:
        projection = (d.main,)
    elif len(free_pattern_vars) == 1:
        projection = (free_pattern_vars[0],)
    elif not free_pattern_vars:
        raise ProjectionError("no free variable to project")
    else:
        raise ProjectionError("ambiguous projection")
    return QueryIR(
        form="select",
        projection=projection,
        patterns=tuple(patterns),
        filters=tuple(filters),
        order=order,
        distinct=True,
    )


def _render_number(value: float) -> str:
    if value == int(value):
        return str(int(value))
    return repr(value)


def serialize(q: QueryIR) -> str:
    """Canonical SPARQL text.

    Variables are named ?v0, ?v1, ... in first-occurrence order, except a
    SELECT projection which is always named ?answer.  Serialization is
    injective on canonicalized IRs.
    """
    names: dict[Var, str] = {}
    counter = 0
    if q.form == "select" and q.projection:
        names[q.projection[0]] = "answer"

    def name(var: Var) -> str:
        nonlocal counter
        if var not in names:
            names[var] = f"v{counter}"
            counter += 1
        return "?" + names[var]

    def atom(value) -> str:
        if isinstance(value, Var):
            return name(value)
        return value.n3()

    body_parts = []
    for subj, pred, obj in q.patterns:
        body_parts.append(f"{atom(subj)} <{pred}> {atom(obj)}")
    for filt in q.filters:
        rhs = name(filt.rhs) if isinstance(filt.rhs, Var) else _render_number(filt.rhs)
        body_parts.append(f"FILTER({name(filt.lhs)} {filt.op} {rhs})")
    body = " . ".join(body_parts)

    if q.form == "ask":
        text = f"ASK WHERE {{ {body} }}"
    elif q.form == "count":
        inner = name(q.projection[0])
        text = f"SELECT (COUNT(DISTINCT {inner}) AS ?answer) WHERE {{ {body} }}"
    else:
        distinct = "DISTINCT " if q.distinct else ""
        text = f"SELECT {distinct}{name(q.projection[0])} WHERE {{ {body} }}"
    if q.order is not None and q.form != "ask":
        var, direction, limit = q.order
        keyword = "DESC" if direction == "max" else "ASC"
        text += f" ORDER BY {keyword}({name(var)}) LIMIT {limit}"
    return text
