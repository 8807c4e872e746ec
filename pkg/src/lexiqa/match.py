"""Assign KB properties and entities to tree nodes.

Entity labels live in a prefix trie searched with a Levenshtein beam, so
fuzzy lookup over hundreds of thousands of labels stays cheap while being
provably equivalent to a linear scan.  Property matching goes through the
lexicon with a fixed ladder of fallback heuristics.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable

import numpy as np

from .deptree import DepNode, DepTree, Token
from .lexicon import Lexicon, normalize_form

__all__ = [
    "levenshtein",
    "similarity",
    "LabelIndex",
    "build_label_index",
    "read_label_source",
    "EntityMatch",
    "PropertyMatch",
    "EntitySpan",
    "MatchSource",
    "NerCandidate",
    "find_entity_spans",
    "match_entities",
    "match_properties",
]

DEFAULT_THRESHOLD = 0.5


def levenshtein(a: str, b: str) -> int:
    """Edit distance, plain two-row DP."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i] + [0] * len(b)
        for j, cb in enumerate(b, start=1):
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb))
        prev = cur
    return prev[-1]


def similarity(a: str, b: str) -> float:
    """1 - dist/max(len); 1.0 iff equal, symmetric, in [0, 1]."""
    if a == b:
        return 1.0
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(a, b) / longest


class MatchSource(str, Enum):
    LABEL_INDEX = "label_index"
    EXTERNAL_NER = "external_ner"


@dataclass(frozen=True, slots=True)
class EntityMatch:
    iri: str
    matched_label: str
    similarity: float
    source: MatchSource
    span: tuple[int, int]  # inclusive token index range


@dataclass(frozen=True, slots=True)
class PropertyMatch:
    entry_id: str
    similarity: float
    exact: bool
    marker_matched: bool


@dataclass(frozen=True, slots=True)
class EntitySpan:
    node_ids: tuple[int, ...]
    phrase: str
    matches: tuple[EntityMatch, ...]

    def overlaps(self, other: "EntitySpan") -> bool:
        return bool(set(self.node_ids) & set(other.node_ids))


@dataclass(frozen=True, slots=True)
class NerCandidate:
    iri: str
    start: int  # token index, inclusive
    end: int
    score: float = 1.0
    label: str = ""


class _TrieNode:
    __slots__ = ("children", "labels")

    def __init__(self) -> None:
        self.children: dict[str, _TrieNode] = {}
        self.labels: list[int] = []


class LabelIndex:
    """Prefix trie over normalized labels with fuzzy and exact lookup.

    The trie is compiled into per-depth numpy arrays; fuzzy search sweeps
    one DP row matrix per depth, pruning subtrees whose best achievable
    similarity falls under the threshold.
    """

    def __init__(self) -> None:
        self._root = _TrieNode()
        self._labels: list[str] = []
        self._payload: dict[str, list[str]] = {}
        self.skipped = 0
        self._compiled: list[dict] | None = None

    # -- construction ------------------------------------------------------

    def insert(self, iri: str, label: str) -> None:
        norm = normalize_form(label)
        if not norm:
            self.skipped += 1
            return
        iris = self._payload.setdefault(norm, [])
        if iri in iris:
            return
        iris.append(iri)
        if len(iris) == 1:
            label_id = len(self._labels)
            self._labels.append(norm)
            node = self._root
            for char in norm:
                node = node.children.setdefault(char, _TrieNode())
            node.labels.append(label_id)
        self._compiled = None

    @property
    def size(self) -> int:
        return len(self._labels)

    def prepare(self) -> None:
        """Compile the search structure now; after this, lookups are read-only
        and the index is safe to share across threads."""
        self._compile()

    def lookup(self, label: str) -> list[str]:
        """Exact lookup of the normalized label; sorted IRIs."""
        return sorted(self._payload.get(normalize_form(label), []))

    # -- fuzzy search ------------------------------------------------------

    def _compile(self) -> list[dict]:
        if self._compiled is not None:
            return self._compiled
        levels: list[dict] = []
        frontier = [self._root]
        max_below: dict[int, int] = {}

        def depth_below(node: _TrieNode) -> int:
            key = id(node)
            if key not in max_below:
                max_below[key] = (
                    0
                    if not node.children
                    else 1 + max(depth_below(c) for c in node.children.values())
                )
            return max_below[key]

        sys.setrecursionlimit(max(sys.getrecursionlimit(), 10000))
        depth_below(self._root)
        while frontier:
            chars: list[int] = []
            parents: list[int] = []
            below: list[int] = []
            terminals: list[tuple[int, int]] = []
            next_frontier: list[_TrieNode] = []
            for pos, node in enumerate(frontier):
                for char, child in sorted(node.children.items()):
                    child_pos = len(next_frontier)
                    chars.append(ord(char))
                    parents.append(pos)
                    below.append(max_below[id(child)])
                    for label_id in child.labels:
                        terminals.append((child_pos, label_id))
                    next_frontier.append(child)
            if not next_frontier:
                break
            levels.append(
                {
                    "chars": np.asarray(chars, dtype=np.int32),
                    "parents": np.asarray(parents, dtype=np.int64),
                    "below": np.asarray(below, dtype=np.int32),
                    "term_pos": np.asarray([t[0] for t in terminals], dtype=np.int64),
                    "term_label": np.asarray([t[1] for t in terminals], dtype=np.int64),
                }
            )
            frontier = next_frontier
        self._compiled = levels
        return levels

    def fuzzy(self, phrase: str, threshold: float = DEFAULT_THRESHOLD) -> list[tuple[str, float, list[str]]]:
        """All labels with similarity >= threshold to the normalized phrase.

        Returns (label, similarity, iris) tuples ordered by descending
        similarity, then longer label first, then label text.
        """
        query = normalize_form(phrase)
        m = len(query)
        if not self._labels:
            return []
        levels = self._compile()
        q = np.array([ord(c) for c in query], dtype=np.int32)
        big = np.int32(2 * (m + len(levels)) + 16)
        # DP state is kept transposed: one row per query position, one column
        # per live trie node, so the running minimum walks contiguous rows
        arange = np.arange(m + 1, dtype=np.int32)[:, None]
        rows = arange.copy()
        hits: dict[int, float] = {}
        for depth, level in enumerate(levels, start=1):
            parent_rows = rows[:, level["parents"]]
            alive = parent_rows.min(axis=0) < big
            n = parent_rows.shape[1]
            chars = level["chars"]
            # cur[j] = min(step[j], cur[j-1] + 1) unrolls to a running minimum
            step = np.empty((m + 1, n), dtype=np.int32)
            step[0] = np.where(alive, np.int32(depth), big)
            if m:
                mismatch = (q[:, None] != chars[None, :]).astype(np.int32)
                mismatch += parent_rows[:-1]
                np.minimum(parent_rows[1:] + 1, mismatch, out=step[1:])
            step -= arange
            cur = np.minimum.accumulate(step, axis=0)
            cur += arange
            cur[:, ~alive] = big
            term_pos = level["term_pos"]
            if term_pos.size:
                dists = cur[m, term_pos]
                longest = max(m, depth)
                sims = 1.0 - dists / longest if longest else np.ones_like(dists, dtype=float)
                ok = (dists < big) & (sims >= threshold)
                for label_id, sim in zip(level["term_label"][ok], sims[ok]):
                    if sim > hits.get(int(label_id), -1.0):
                        hits[int(label_id)] = float(sim)
            # a subtree can still qualify if some extension stays within the
            # distance allowed for its longest label
            allowed = (1.0 - threshold) * np.maximum(m, depth + level["below"])
            dead = cur.min(axis=0) > allowed
            cur[:, dead] = big
            if bool(dead.all()):
                break
            rows = cur
        out = []
        for label_id, sim in hits.items():
            label = self._labels[label_id]
            out.append((label, sim, sorted(self._payload[label])))
        out.sort(key=lambda hit: (-hit[1], -len(hit[0]), hit[0]))
        return out


def build_label_index(labels: Iterable[tuple[str, str]]) -> LabelIndex:
    """Single-pass index build; empty labels are skipped and counted."""
    index = LabelIndex()
    for iri, label in labels:
        index.insert(iri, label)
    return index


def read_label_source(path: str) -> list[tuple[str, str]]:
    """Read (IRI, label) pairs from N-Triples rdfs:label data or 2-column TSV.

    The format is auto-detected from the first non-empty line.
    """
    from .kb import parse_ntriples_line
    from .terms import RDFS_LABEL, Literal

    pairs: list[tuple[str, str]] = []
    with open(path, encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    mode = None
    for lineno, line in enumerate(lines, start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if mode is None:
            mode = "nt" if line.lstrip().startswith("<") else "tsv"
        if mode == "nt":
            subj, pred, obj = parse_ntriples_line(line, lineno)
            if pred.value == RDFS_LABEL and isinstance(obj, Literal):
                pairs.append((subj.value, obj.lexical))
        else:
            cols = line.split("\t")
            if len(cols) < 2:
                raise ValueError(f"{path}:{lineno}: expected 2 tab-separated columns")
            pairs.append((cols[0].strip(), cols[1].strip()))
    return pairs


# ---------------------------------------------------------------------------
# node and span matching

_LEADING_SKIP_LEMMAS = {"how", "many", "which", "what", "whose"}


def _strip_leading(tokens: list[Token]) -> list[Token]:
    out = list(tokens)
    while out and (out[0].upos == "DET" or out[0].lemma.lower() in _LEADING_SKIP_LEMMAS):
        out = out[1:]
    return out


def _strip_trailing_adp(tokens: list[Token]) -> list[Token]:
    out = list(tokens)
    while out and out[-1].upos == "ADP":
        out = out[:-1]
    return out


def _phrase(tokens: list[Token], lemma: bool = False) -> str:
    return " ".join((t.lemma if lemma else t.surface) for t in tokens)


def _entity_probes(node: DepNode) -> list[str]:
    probes = [node.phrase]
    stripped = _strip_leading(node.tokens)
    probes.append(_phrase(stripped))
    probes.append(_phrase(_strip_trailing_adp(stripped)))
    probes.append(_phrase(_strip_trailing_adp(stripped), lemma=True))
    seen: set[str] = set()
    out = []
    for probe in probes:
        norm = normalize_form(probe)
        if norm and norm not in seen:
            seen.add(norm)
            out.append(probe)
    return out


def find_entity_spans(
    index: LabelIndex, tree: DepTree, threshold: float = DEFAULT_THRESHOLD
) -> list[EntitySpan]:
    """Multi-node spans whose concatenated phrase matches an entity label.

    Spans cover 2..6 nodes that are adjacent in token order and form a
    connected subtree.  Longer spans rank first among equal similarities.
    """
    ordered = sorted(tree.nodes, key=lambda n: n.tokens[0].index)
    spans: list[EntitySpan] = []
    for start in range(len(ordered)):
        for length in range(2, 7):
            chunk = ordered[start : start + length]
            if len(chunk) < length:
                break
            # spans must look like a name: content words at both edges
            if chunk[0].tokens[0].upos not in _CONTENT_UPOS:
                break
            if chunk[-1].tokens[-1].upos not in _CONTENT_UPOS:
                continue
            ids = {n.node_id for n in chunk}
            outside = [n for n in chunk if n.head_id not in ids]
            if len(outside) != 1:
                continue
            tokens = sorted(
                (t for n in chunk for t in n.tokens), key=lambda t: t.index
            )
            phrase = " ".join(t.surface for t in tokens)
            hits = index.fuzzy(phrase, threshold)
            if not hits:
                continue
            matches = tuple(
                EntityMatch(
                    iri=iri,
                    matched_label=label,
                    similarity=sim,
                    source=MatchSource.LABEL_INDEX,
                    span=(tokens[0].index, tokens[-1].index),
                )
                for label, sim, iris in hits
                for iri in iris
            )
            spans.append(
                EntitySpan(
                    node_ids=tuple(n.node_id for n in chunk),
                    phrase=phrase,
                    matches=matches,
                )
            )
    spans.sort(
        key=lambda s: (-max(m.similarity for m in s.matches), -len(s.node_ids), s.node_ids)
    )
    return spans


_CONTENT_UPOS = {"NOUN", "PROPN", "NUM", "ADJ", "VERB", "X"}


def _has_content_token(node: DepNode) -> bool:
    return any(t.upos in _CONTENT_UPOS for t in node.tokens)


NerProvider = Callable[[str, DepTree], "list[NerCandidate]"]


def match_entities(
    index: LabelIndex,
    tree: DepTree,
    ner: NerProvider | None = None,
    threshold: float = DEFAULT_THRESHOLD,
    diagnostics: list[str] | None = None,
) -> DepTree:
    """Annotate every node with ranked entity candidates.

    Label-index matches must clear the similarity threshold; external
    candidates carry their own confidence and bypass it.  Re-running the
    annotation replaces previous results (idempotent).
    """
    external: list[NerCandidate] = []
    if ner is not None:
        try:
            external = list(ner(tree.text or "", tree))
        except Exception as exc:  # provider failure is non-fatal
            if diagnostics is not None:
                diagnostics.append(f"ner provider failed: {exc}")
    for node in tree.nodes:
        best: dict[str, EntityMatch] = {}
        token_range = (node.tokens[0].index, node.tokens[-1].index)
        probes = _entity_probes(node) if _has_content_token(node) else []
        for probe in probes:
            for label, sim, iris in index.fuzzy(probe, threshold):
                for iri in iris:
                    prev = best.get(iri)
                    if prev is None or sim > prev.similarity:
                        best[iri] = EntityMatch(
                            iri=iri,
                            matched_label=label,
                            similarity=sim,
                            source=MatchSource.LABEL_INDEX,
                            span=token_range,
                        )
        indexes = {t.index for t in node.tokens}
        for cand in external:
            if not indexes & set(range(cand.start, cand.end + 1)):
                continue
            prev = best.get(cand.iri)
            if prev is None or cand.score > prev.similarity:
                best[cand.iri] = EntityMatch(
                    iri=cand.iri,
                    matched_label=cand.label or cand.iri,
                    similarity=cand.score,
                    source=MatchSource.EXTERNAL_NER,
                    span=(cand.start, cand.end),
                )
        node.entity_candidates = sorted(
            best.values(),
            key=lambda m: (-m.similarity, -len(m.matched_label), m.matched_label, m.iri),
        )
    return tree


_PROPERTY_VARIANTS = (
    ("surface", False, False),
    ("drop_trailing_adp", True, False),
    ("drop_leading_det", False, True),
    ("drop_both", True, True),
    ("lemma", None, None),
)


def _property_probe(node: DepNode, drop_adp: bool, drop_det: bool, lemma: bool) -> str:
    tokens = list(node.tokens)
    if drop_det:
        tokens = _strip_leading(tokens)
    if drop_adp:
        tokens = _strip_trailing_adp(tokens)
    return _phrase(tokens, lemma=lemma)


def match_properties(lex: Lexicon, tree: DepTree) -> DepTree:
    """Annotate nodes with ranked lexicon candidates.

    Exact form match first; failing that, a fixed heuristic ladder (drop
    trailing adpositions, drop leading determiners, then lemmas).  Entries
    whose marker appears among the node's tokens rank before the rest,
    then descending similarity to the canonical form, then entry id.
    """
    for node in tree.nodes:
        found: dict[str, PropertyMatch] = {}
        exact_ids = lex.form_index.get(normalize_form(node.phrase), [])
        for entry_id in exact_ids:
            found[entry_id] = PropertyMatch(
                entry_id=entry_id, similarity=1.0, exact=True, marker_matched=False
            )
        if not found:
            probes = [
                _property_probe(node, True, False, False),
                _property_probe(node, False, True, False),
                _property_probe(node, True, True, False),
                _property_probe(node, False, False, True),
                _property_probe(node, True, True, True),
            ]
            norm_phrase = normalize_form(node.phrase)
            for probe in probes:
                norm = normalize_form(probe)
                if not norm or norm == norm_phrase:
                    continue
                ids = lex.form_index.get(norm, [])
                for entry_id in ids:
                    if entry_id not in found:
                        entry = lex.entry(entry_id)
                        found[entry_id] = PropertyMatch(
                            entry_id=entry_id,
                            similarity=similarity(
                                norm_phrase, normalize_form(entry.canonical_form)
                            ),
                            exact=False,
                            marker_matched=False,
                        )
                if found:
                    break
        surfaces = {t.surface.lower() for t in node.tokens}
        ranked = []
        for entry_id, match in found.items():
            entry = lex.entry(entry_id)
            marker_matched = bool(entry.marker) and entry.marker.lower() in surfaces
            ranked.append(
                PropertyMatch(
                    entry_id=entry_id,
                    similarity=match.similarity,
                    exact=match.exact,
                    marker_matched=marker_matched,
                )
            )
        ranked.sort(key=lambda m: (not m.marker_matched, -m.similarity, m.entry_id))
        node.entry_candidates = ranked
    return tree
