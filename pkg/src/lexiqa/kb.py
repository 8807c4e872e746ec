"""Query execution: bundled in-memory triple store or a remote endpoint.

The in-memory engine implements exactly the SPARQL subset the generator
emits (BGP, numeric FILTER, ORDER BY/LIMIT, COUNT, DISTINCT, ASK) and
fails loudly on anything else.  The remote client speaks the SPARQL
protocol over HTTP with JSON results.
"""

from __future__ import annotations

import json
import re
import threading
import time
import urllib.error
import urllib.parse
import urllib.request
from dataclasses import dataclass

from .errors import TransportError, UnsupportedQueryError
from .sparql import QueryIR
from .dudes import Comparison, Var
from .terms import IRI, RDF_TYPE, XSD, Literal, Term, _unescape

__all__ = [
    "TripleStore",
    "AnswerSet",
    "RemoteEndpoint",
    "load_ntriples",
    "parse_ntriples_line",
    "parse_query",
    "parse_json_results",
    "execute",
]

Triple = tuple[IRI, IRI, Term]


@dataclass(frozen=True, slots=True)
class AnswerSet:
    kind: str  # "bindings" or "boolean"
    values: frozenset[Term] = frozenset()
    truth: bool = False

    @property
    def count(self) -> int:
        if self.kind == "boolean":
            return 1
        return len(self.values)


class TripleStore:
    """Immutable-after-load triple set with per-position indexes."""

    def __init__(self, triples: set[Triple] | None = None) -> None:
        self.triples: set[Triple] = set(triples or ())
        self.by_subj: dict[IRI, list[Triple]] = {}
        self.by_pred: dict[IRI, list[Triple]] = {}
        self.by_obj: dict[Term, list[Triple]] = {}
        self._reindex()

    def _reindex(self) -> None:
        self.by_subj.clear()
        self.by_pred.clear()
        self.by_obj.clear()
        for triple in sorted(self.triples, key=lambda t: (t[0].value, t[1].value, t[2].n3())):
            subj, pred, obj = triple
            self.by_subj.setdefault(subj, []).append(triple)
            self.by_pred.setdefault(pred, []).append(triple)
            self.by_obj.setdefault(obj, []).append(triple)

    def __len__(self) -> int:
        return len(self.triples)

    def class_iris(self) -> frozenset[str]:
        """IRIs used as objects of rdf:type triples."""
        return frozenset(
            obj.value
            for subj, pred, obj in self.triples
            if pred.value == RDF_TYPE and isinstance(obj, IRI)
        )


_NT_LINE = re.compile(
    r"^\s*<([^>]*)>\s+<([^>]*)>\s+(.+?)\s*\.\s*$"
)
_NT_LITERAL = re.compile(
    r'^"((?:[^"\\]|\\.)*)"(?:\^\^<([^>]*)>|@([A-Za-z][A-Za-z0-9-]*))?$'
)


def parse_ntriples_line(line: str, lineno: int) -> Triple:
    match = _NT_LINE.match(line)
    if not match:
        raise ValueError(f"line {lineno}: not a valid N-Triples statement")
    subj, pred, obj_text = match.groups()
    if obj_text.startswith("<") and obj_text.endswith(">"):
        obj: Term = IRI(obj_text[1:-1])
    else:
        lit = _NT_LITERAL.match(obj_text)
        if not lit:
            raise ValueError(f"line {lineno}: malformed object term")
        lexical, datatype, lang = lit.groups()
        obj = Literal(_unescape(lexical), datatype=datatype, lang=lang)
    return (IRI(subj), IRI(pred), obj)


def load_ntriples(path: str) -> TripleStore:
    """Load an N-Triples file; duplicate statements are stored once."""
    triples: set[Triple] = set()
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            triples.add(parse_ntriples_line(line, lineno))
    return TripleStore(triples)


# ---------------------------------------------------------------------------
# query text parsing (the emitted subset only)

_TOKEN_RE = re.compile(
    r"""
    (?P<iri><[^>]*>)
  | (?P<literal>"(?:[^"\\]|\\.)*"(?:\^\^<[^>]*>|@[A-Za-z][A-Za-z0-9-]*)?)
  | (?P<var>\?[A-Za-z_][A-Za-z0-9_]*)
  | (?P<number>-?\d+(?:\.\d+)?)
  | (?P<op><=|>=|!=|<|>|=)
  | (?P<punct>[{}().])
  | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> list[str]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        match = _TOKEN_RE.match(text, pos)
        if not match:
            raise UnsupportedQueryError(f"cannot tokenize query at offset {pos}")
        tokens.append(match.group(0))
        pos = match.end()
    return tokens


class _Parser:
    def __init__(self, tokens: list[str]) -> None:
        self.tokens = tokens
        self.pos = 0
        self.vars: dict[str, Var] = {}

    def peek(self) -> str | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self) -> str:
        token = self.peek()
        if token is None:
            raise UnsupportedQueryError("unexpected end of query")
        self.pos += 1
        return token

    def expect(self, word: str) -> None:
        token = self.next()
        if token.upper() != word.upper():
            raise UnsupportedQueryError(f"expected {word!r}, got {token!r}")

    def var(self, token: str) -> Var:
        if token not in self.vars:
            self.vars[token] = Var(len(self.vars) + 1)
        return self.vars[token]

    def term_or_var(self):
        token = self.next()
        if token.startswith("?"):
            return self.var(token)
        if token.startswith("<"):
            return IRI(token[1:-1])
        if token.startswith('"'):
            lit = _NT_LITERAL.match(token)
            if not lit:
                raise UnsupportedQueryError(f"bad literal {token!r}")
            lexical, datatype, lang = lit.groups()
            return Literal(_unescape(lexical), datatype=datatype, lang=lang)
        try:
            float(token)
        except ValueError:
            raise UnsupportedQueryError(f"expected term or variable, got {token!r}")
        return Literal(token, datatype=XSD + ("integer" if "." not in token else "decimal"))

    def group(self) -> tuple[list, list]:
        self.expect("{")
        patterns = []
        filters = []
        while True:
            token = self.peek()
            if token is None:
                raise UnsupportedQueryError("unterminated group")
            if token == "}":
                self.next()
                break
            if token == ".":
                self.next()
                continue
            if token.upper() == "FILTER":
                self.next()
                self.expect("(")
                lhs = self.term_or_var()
                op = self.next()
                if op not in ("<", "<=", ">", ">=", "=", "!="):
                    raise UnsupportedQueryError(f"unsupported filter operator {op!r}")
                rhs_token = self.peek()
                rhs: Var | float
                if rhs_token is not None and rhs_token.startswith("?"):
                    rhs = self.var(self.next())
                else:
                    try:
                        rhs = float(self.next())
                    except ValueError:
                        raise UnsupportedQueryError("filter right side must be numeric or a variable")
                self.expect(")")
                if not isinstance(lhs, Var):
                    raise UnsupportedQueryError("filter left side must be a variable")
                filters.append(Comparison(op, lhs, rhs))
                continue
            subj = self.term_or_var()
            pred = self.term_or_var()
            obj = self.term_or_var()
            if not isinstance(pred, IRI):
                raise UnsupportedQueryError("predicates must be IRIs")
            patterns.append((subj, pred.value, obj))
        return patterns, filters


def parse_query(text: str) -> QueryIR:
    """Parse the emitted SPARQL subset back into a QueryIR."""
    parser = _Parser(_tokenize(text))
    head = parser.next().upper()
    if head == "ASK":
        parser.expect("WHERE")
        patterns, filters = parser.group()
        return QueryIR(
            form="ask",
            projection=(),
            patterns=tuple(patterns),
            filters=tuple(filters),
            distinct=False,
        )
    if head != "SELECT":
        raise UnsupportedQueryError(f"unsupported query form {head!r}")
    distinct = False
    form = "select"
    projection: tuple[Var, ...]
    token = parser.peek()
    if token is not None and token.upper() == "DISTINCT":
        parser.next()
        distinct = True
    token = parser.peek()
    if token == "(":
        parser.next()
        parser.expect("COUNT")
        parser.expect("(")
        inner_distinct = parser.peek()
        if inner_distinct is not None and inner_distinct.upper() == "DISTINCT":
            parser.next()
        counted = parser.next()
        if not counted.startswith("?"):
            raise UnsupportedQueryError("COUNT argument must be a variable")
        parser.expect(")")
        parser.expect("AS")
        parser.next()  # output variable name, unused during evaluation
        parser.expect(")")
        form = "count"
        distinct = True
        projection = (parser.var(counted),)
    else:
        var_token = parser.next()
        if not var_token.startswith("?"):
            raise UnsupportedQueryError("SELECT projection must be a variable")
        projection = (parser.var(var_token),)
    parser.expect("WHERE")
    patterns, filters = parser.group()
    order = None
    token = parser.peek()
    if token is not None and token.upper() == "ORDER":
        parser.next()
        parser.expect("BY")
        keyword = parser.next().upper()
        if keyword not in ("ASC", "DESC"):
            raise UnsupportedQueryError("ORDER BY must use ASC(...) or DESC(...)")
        parser.expect("(")
        order_var = parser.next()
        parser.expect(")")
        parser.expect("LIMIT")
        limit = int(parser.next())
        order = (parser.var(order_var), "max" if keyword == "DESC" else "min", limit)
    token = parser.peek()
    if token is not None and token.upper() == "LIMIT":
        raise UnsupportedQueryError("LIMIT without ORDER BY is outside the subset")
    if parser.peek() is not None:
        raise UnsupportedQueryError(f"trailing tokens from {parser.peek()!r}")
    return QueryIR(
        form=form,
        projection=projection,
        patterns=tuple(patterns),
        filters=tuple(filters),
        order=order,
        distinct=distinct,
    )


# ---------------------------------------------------------------------------
# in-memory evaluation


def _candidates(store: TripleStore, subj, pred, obj) -> list[Triple]:
    if not isinstance(subj, Var):
        return store.by_subj.get(subj, [])
    if not isinstance(obj, Var):
        return store.by_obj.get(obj, [])
    if not isinstance(pred, Var):
        return store.by_pred.get(IRI(pred) if isinstance(pred, str) else pred, [])
    return sorted(store.triples, key=lambda t: (t[0].value, t[1].value, t[2].n3()))


def _pattern_selectivity(store: TripleStore, pattern, binding_vars: set[Var]) -> int:
    subj, pred, obj = pattern
    bound = 0
    for value in (subj, obj):
        if not isinstance(value, Var) or value in binding_vars:
            bound += 1
    if not isinstance(pred, Var):
        bound += 1
    return -bound


def _solutions(store: TripleStore, ir: QueryIR, deadline: float | None) -> list[dict[Var, Term]]:
    remaining = list(ir.patterns)
    ordered: list = []
    known_vars: set[Var] = set()
    while remaining:
        remaining.sort(key=lambda p: _pattern_selectivity(store, p, known_vars))
        best = remaining.pop(0)
        ordered.append(best)
        for value in (best[0], best[2]):
            if isinstance(value, Var):
                known_vars.add(value)
    solutions: list[dict[Var, Term]] = [{}]
    for subj, pred, obj in ordered:
        if deadline is not None and time.monotonic() > deadline:
            raise TransportError("query evaluation exceeded its time budget")
        pred_iri = IRI(pred) if isinstance(pred, str) else pred
        next_solutions: list[dict[Var, Term]] = []
        for binding in solutions:
            s = binding.get(subj, subj) if isinstance(subj, Var) else subj
            o = binding.get(obj, obj) if isinstance(obj, Var) else obj
            for triple in _candidates(store, s, pred_iri, o):
                ts, tp, to = triple
                if tp != pred_iri:
                    continue
                if not isinstance(s, Var) and ts != s:
                    continue
                if not isinstance(o, Var) and to != o:
                    continue
                new = dict(binding)
                if isinstance(s, Var):
                    new[s] = ts
                if isinstance(o, Var):
                    if s == o and ts != to:
                        continue
                    new[o] = to
                next_solutions.append(new)
        solutions = next_solutions
        if not solutions:
            break
    out = []
    for binding in solutions:
        keep = True
        for filt in ir.filters:
            value = binding.get(filt.lhs)
            if value is None or not isinstance(value, Literal):
                keep = False
                break
            lhs_num = value.numeric_value()
            rhs_num = (
                binding.get(filt.rhs).numeric_value()  # type: ignore[union-attr]
                if isinstance(filt.rhs, Var) and isinstance(binding.get(filt.rhs), Literal)
                else (filt.rhs if not isinstance(filt.rhs, Var) else None)
            )
            if lhs_num is None or rhs_num is None:
                keep = False
                break
            ok = {
                "<": lhs_num < rhs_num,
                "<=": lhs_num <= rhs_num,
                ">": lhs_num > rhs_num,
                ">=": lhs_num >= rhs_num,
                "=": lhs_num == rhs_num,
                "!=": lhs_num != rhs_num,
            }[filt.op]
            if not ok:
                keep = False
                break
        if keep:
            out.append(binding)
    return out


def _sort_key(term: Term):
    if isinstance(term, Literal):
        num = term.numeric_value()
        if num is not None:
            return (0, num, term.lexical)
        return (1, 0.0, term.lexical)
    return (2, 0.0, term.value)


def _evaluate(store: TripleStore, ir: QueryIR, deadline: float | None) -> AnswerSet:
    solutions = _solutions(store, ir, deadline)
    if ir.form == "ask":
        return AnswerSet(kind="boolean", truth=bool(solutions))
    if ir.order is not None:
        order_var, direction, limit = ir.order
        solutions = sorted(
            solutions,
            key=lambda b: _sort_key(b.get(order_var, Literal(""))),
            reverse=(direction == "max"),
        )
        projected_seq = []
        seen = set()
        for binding in solutions:
            value = binding.get(ir.projection[0]) if ir.projection else None
            if value is not None and value not in seen:
                seen.add(value)
                projected_seq.append(value)
        projected_seq = projected_seq[:limit]
        values = frozenset(projected_seq)
    else:
        values = frozenset(
            binding[ir.projection[0]]
            for binding in solutions
            if ir.projection and ir.projection[0] in binding
        )
    if ir.form == "count":
        return AnswerSet(
            kind="bindings",
            values=frozenset([Literal(str(len(values)), datatype=XSD + "integer")]),
        )
    return AnswerSet(kind="bindings", values=values)


# ---------------------------------------------------------------------------
# remote endpoint


class RemoteEndpoint:
    """SPARQL protocol client with one retry and bounded concurrency."""

    def __init__(self, url: str, timeout_s: float = 30.0, max_inflight: int = 12) -> None:
        self.url = url
        self.timeout_s = timeout_s
        self._gate = threading.Semaphore(max_inflight)

    def execute(self, query: str) -> AnswerSet:
        data = urllib.parse.urlencode({"query": query}).encode("ascii")
        request = urllib.request.Request(
            self.url,
            data=data,
            headers={
                "Accept": "application/sparql-results+json",
                "Content-Type": "application/x-www-form-urlencoded",
            },
        )
        last_error: Exception | None = None
        for attempt in range(2):
            try:
                with self._gate:
                    with urllib.request.urlopen(request, timeout=self.timeout_s) as resp:
                        payload = json.loads(resp.read().decode("utf-8"))
                return parse_json_results(payload)
            except (urllib.error.URLError, TimeoutError, json.JSONDecodeError) as exc:
                last_error = exc
        raise TransportError(f"endpoint {self.url} failed after retry: {last_error}")


def parse_json_results(payload: dict) -> AnswerSet:
    if "boolean" in payload:
        return AnswerSet(kind="boolean", truth=bool(payload["boolean"]))
    bindings = payload.get("results", {}).get("bindings", [])
    values: set[Term] = set()
    for row in bindings:
        for cell in row.values():
            kind = cell.get("type")
            if kind == "uri":
                values.add(IRI(cell["value"]))
            else:
                values.add(
                    Literal(
                        cell["value"],
                        datatype=cell.get("datatype"),
                        lang=cell.get("xml:lang"),
                    )
                )
    return AnswerSet(kind="bindings", values=frozenset(values))


def execute(target, query: str, timeout_s: float = 30.0) -> AnswerSet:
    """Run a query against an in-memory store or a remote endpoint."""
    if isinstance(target, RemoteEndpoint):
        return target.execute(query)
    if isinstance(target, TripleStore):
        ir = query if isinstance(query, QueryIR) else parse_query(query)
        deadline = time.monotonic() + timeout_s if timeout_s else None
        return _evaluate(target, ir, deadline)
    raise TypeError(f"cannot execute against {type(target).__name__}")
