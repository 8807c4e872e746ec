"""Dependency tree model and CoNLL-U ingest.

Trees arrive one sentence block per parse; merging later collapses nodes,
so every node carries an ordered token list rather than a single token.
A tree variant with textual numbers converted to numerals is produced
alongside the original, because entity labels may themselves contain
number words.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from enum import Enum

from .errors import ConlluFormatError, TreeStructureError

__all__ = [
    "SpecialMark",
    "Token",
    "DepNode",
    "DepTree",
    "read_conllu",
    "write_conllu",
    "numerize_variants",
    "parse_number_words",
]


class SpecialMark(str, Enum):
    ASK_KEYWORD = "ask_keyword"
    COMPARATIVE_MORE = "comparative_more"
    COMPARATIVE_FEWER = "comparative_fewer"
    PREPOSITION_IN = "preposition_in"
    # not in the original inventory: needed so "how many" questions can be
    # recognized downstream without re-deriving it from raw tokens
    COUNT_KEYWORD = "count_keyword"


class Variant(str, Enum):
    ORIGINAL = "original"
    NUMERIZED = "numerized"


@dataclass(frozen=True, slots=True)
class Token:
    index: int
    surface: str
    lemma: str
    upos: str = "X"


@dataclass(slots=True)
class DepNode:
    node_id: int
    tokens: list[Token]
    upos: str
    deprel: str
    head_id: int
    numeric_value: float | None = None
    entity_candidates: list = field(default_factory=list)
    entry_candidates: list = field(default_factory=list)
    special_mark: SpecialMark | None = None

    @property
    def phrase(self) -> str:
        return " ".join(t.surface for t in self.tokens)

    @property
    def lemma_phrase(self) -> str:
        return " ".join(t.lemma for t in self.tokens)

    def copy(self) -> "DepNode":
        node = replace(self)
        node.tokens = list(self.tokens)
        node.entity_candidates = list(self.entity_candidates)
        node.entry_candidates = list(self.entry_candidates)
        return node


@dataclass(slots=True)
class DepTree:
    nodes: list[DepNode]
    root_id: int
    variant: Variant = Variant.ORIGINAL
    parser_tag: str = "unknown"
    original_node_count: int = 1
    text: str | None = None

    def node(self, node_id: int) -> DepNode:
        for node in self.nodes:
            if node.node_id == node_id:
                return node
        raise KeyError(node_id)

    def children(self, node_id: int) -> list[DepNode]:
        return [n for n in self.nodes if n.head_id == node_id and n.node_id != node_id]

    def copy(self) -> "DepTree":
        return DepTree(
            nodes=[n.copy() for n in self.nodes],
            root_id=self.root_id,
            variant=self.variant,
            parser_tag=self.parser_tag,
            original_node_count=self.original_node_count,
            text=self.text,
        )

    def validate(self) -> None:
        ids = [n.node_id for n in self.nodes]
        if len(ids) != len(set(ids)):
            raise TreeStructureError("duplicate node ids")
        roots = [n for n in self.nodes if n.head_id == 0]
        if len(roots) != 1:
            raise TreeStructureError(f"expected exactly one root, found {len(roots)}")
        known = set(ids)
        for node in self.nodes:
            if not node.tokens:
                raise TreeStructureError(f"node {node.node_id} has no tokens")
            if node.head_id != 0 and node.head_id not in known:
                raise TreeStructureError(
                    f"node {node.node_id} points at missing head {node.head_id}"
                )
        # walk up from every node; any cycle will revisit a node
        for node in self.nodes:
            seen = set()
            cur = node
            while cur.head_id != 0:
                if cur.node_id in seen:
                    raise TreeStructureError(f"cycle through node {cur.node_id}")
                seen.add(cur.node_id)
                cur = self.node(cur.head_id)

    def structural_hash(self) -> str:
        """Hash of tokens + structure, ignoring provenance and annotations."""
        parts = []
        for node in sorted(self.nodes, key=lambda n: n.node_id):
            toks = ",".join(f"{t.index}:{t.surface}/{t.lemma}/{t.upos}" for t in node.tokens)
            parts.append(f"{node.node_id}|{toks}|{node.upos}|{node.deprel}|{node.head_id}")
        blob = f"{self.variant.value}||" + ";".join(parts)
        return hashlib.sha1(blob.encode("utf-8")).hexdigest()


def _digit_value(surface: str) -> float | None:
    text = surface.replace(",", "")
    if not text:
        return None
    try:
        return float(text)
    except ValueError:
        return None


def read_conllu(path: str) -> list[DepTree]:
    """Read CoNLL-U sentence blocks into dependency trees.

    Honors ``# text = ...`` and ``# parser = ...`` comments; multiword-token
    ranges and empty nodes are skipped.  Digit-only tokens get their
    numeric_value set immediately.
    """
    with open(path, encoding="utf-8") as handle:
        lines = handle.read().splitlines()
    trees: list[DepTree] = []
    block: list[tuple[int, str]] = []
    meta: dict[str, str] = {}

    def flush() -> None:
        nonlocal block, meta
        if block:
            trees.append(_parse_block(block, meta))
        block = []
        meta = {}

    for lineno, line in enumerate(lines, start=1):
        stripped = line.strip()
        if not stripped:
            flush()
            continue
        if stripped.startswith("#"):
            body = stripped[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                meta[key.strip()] = value.strip()
            continue
        block.append((lineno, line))
    flush()
    return trees


def _parse_block(block: list[tuple[int, str]], meta: dict[str, str]) -> DepTree:
    nodes: list[DepNode] = []
    for lineno, line in block:
        cols = line.split("\t")
        if len(cols) != 10:
            raise ConlluFormatError(f"line {lineno}: expected 10 columns, got {len(cols)}")
        ident = cols[0]
        if "-" in ident or "." in ident:
            continue  # multiword range / empty node
        try:
            node_id = int(ident)
            head_id = int(cols[6]) if cols[6] != "_" else 0
        except ValueError as exc:
            raise ConlluFormatError(f"line {lineno}: bad id or head ({exc})") from exc
        if node_id < 1 or head_id < 0:
            raise ConlluFormatError(f"line {lineno}: ids must be positive, heads >= 0")
        if head_id == node_id:
            raise TreeStructureError(f"line {lineno}: node {node_id} is its own head")
        surface = cols[1]
        lemma = cols[2] if cols[2] != "_" else surface.lower()
        upos = cols[3] if cols[3] != "_" else "X"
        token = Token(index=node_id, surface=surface, lemma=lemma, upos=upos)
        nodes.append(
            DepNode(
                node_id=node_id,
                tokens=[token],
                upos=upos,
                deprel=cols[7] if cols[7] != "_" else "dep",
                head_id=head_id,
                numeric_value=_digit_value(surface),
            )
        )
    if not nodes:
        raise ConlluFormatError("sentence block contains no token lines")
    roots = [n for n in nodes if n.head_id == 0]
    sent = meta.get("text", " ".join(n.tokens[0].surface for n in nodes))
    if len(roots) != 1:
        raise TreeStructureError(f"sentence {sent!r}: {len(roots)} roots")
    tree = DepTree(
        nodes=nodes,
        root_id=roots[0].node_id,
        variant=Variant.ORIGINAL,
        parser_tag=meta.get("parser", "unknown"),
        original_node_count=len(nodes),
        text=meta.get("text"),
    )
    try:
        tree.validate()
    except TreeStructureError as exc:
        raise TreeStructureError(f"sentence {sent!r}: {exc}") from exc
    return tree


def write_conllu(trees: list[DepTree]) -> str:
    """Serialize unmerged trees back to CoNLL-U (one token per node)."""
    blocks = []
    for tree in trees:
        lines = []
        if tree.text is not None:
            lines.append(f"# text = {tree.text}")
        lines.append(f"# parser = {tree.parser_tag}")
        for node in sorted(tree.nodes, key=lambda n: n.node_id):
            if len(node.tokens) != 1:
                raise ValueError("write_conllu only serializes unmerged trees")
            tok = node.tokens[0]
            lines.append(
                "\t".join(
                    [
                        str(node.node_id),
                        tok.surface,
                        tok.lemma,
                        node.upos,
                        "_",
                        "_",
                        str(node.head_id),
                        node.deprel,
                        "_",
                        "_",
                    ]
                )
            )
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"


# ---------------------------------------------------------------------------
# textual numbers

_UNITS = {
    "zero": 0, "one": 1, "two": 2, "three": 3, "four": 4, "five": 5,
    "six": 6, "seven": 7, "eight": 8, "nine": 9, "ten": 10, "eleven": 11,
    "twelve": 12, "thirteen": 13, "fourteen": 14, "fifteen": 15,
    "sixteen": 16, "seventeen": 17, "eighteen": 18, "nineteen": 19,
}
_TENS = {
    "twenty": 20, "thirty": 30, "forty": 40, "fifty": 50,
    "sixty": 60, "seventy": 70, "eighty": 80, "ninety": 90,
}
_SCALES = {"hundred": 100, "thousand": 1_000, "million": 1_000_000}

NUMBER_WORDS = set(_UNITS) | set(_TENS) | set(_SCALES)


def parse_number_words(words: list[str]) -> int | None:
    """Value of an English cardinal word sequence, or None if invalid.

    Handles cardinals up to 999,999,999 including "and" after scale words
    ("one thousand and one") and a leading digit token ("2 million").
    """
    if not words:
        return None
    total = 0
    current = 0.0
    saw_value = False
    for pos, word in enumerate(words):
        w = word.lower()
        if w == "and":
            if pos == 0 or pos == len(words) - 1:
                return None
            continue
        if w in _UNITS:
            current += _UNITS[w]
            saw_value = True
        elif w in _TENS:
            current += _TENS[w]
            saw_value = True
        elif w == "hundred":
            current = (current or 1) * 100
            saw_value = True
        elif w in _SCALES:
            total += (current or 1) * _SCALES[w]
            current = 0
            saw_value = True
        else:
            value = _digit_value(word)
            if value is None or pos != 0:
                return None
            current = value
            saw_value = True
    if not saw_value:
        return None
    result = total + current
    if result != int(result):
        return None
    return int(result)


def _number_spans(tree: DepTree) -> list[list[int]]:
    """Maximal runs of number-word nodes, joined by "and" after scales."""
    ordered = sorted(tree.nodes, key=lambda n: n.node_id)
    spans: list[list[int]] = []
    i = 0
    while i < len(ordered):
        node = ordered[i]
        word = node.tokens[0].surface.lower()
        if word in NUMBER_WORDS:
            span = [i]
            j = i + 1
            while j < len(ordered):
                nxt = ordered[j].tokens[0].surface.lower()
                prev = ordered[j - 1].tokens[0].surface.lower()
                if nxt in NUMBER_WORDS:
                    span.append(j)
                elif nxt == "and" and prev in _SCALES and j + 1 < len(ordered) and (
                    ordered[j + 1].tokens[0].surface.lower() in NUMBER_WORDS
                ):
                    span.append(j)
                else:
                    break
                j += 1
            # only contiguous node ids form a surface span
            ids = [ordered[k].node_id for k in span]
            if ids == list(range(ids[0], ids[0] + len(ids))):
                spans.append(ids)
            i = j
        else:
            i += 1
    return [s for s in spans if len(s) >= 1]


def numerize_variants(tree: DepTree) -> list[DepTree]:
    """Return [original] or [original, numerized].

    The numerized variant converts every textual-number span jointly; the
    original is always kept because entity labels may contain number words.
    Single-word spans ("two") convert as well; digit-only nodes already
    carry numeric_value and are left alone.
    """
    if tree.variant is not Variant.ORIGINAL:
        raise ValueError("numerize_variants expects an original-variant tree")
    spans = [
        span
        for span in _number_spans(tree)
        if parse_number_words([tree.node(i).tokens[0].surface for i in span]) is not None
    ]
    spans = [
        span
        for span in spans
        if not (len(span) == 1 and tree.node(span[0]).numeric_value is not None)
    ]
    if not spans:
        return [tree]
    variant = tree.copy()
    variant.variant = Variant.NUMERIZED
    ok = True
    for span in spans:
        value = parse_number_words([variant.node(i).tokens[0].surface for i in span])
        members = set(span)
        survivors = [i for i in span if variant.node(i).head_id not in members]
        if len(survivors) != 1:
            ok = False
            break
        survivor = variant.node(survivors[0])
        first_index = min(variant.node(i).tokens[0].index for i in span)
        survivor.tokens = [
            Token(index=first_index, surface=str(value), lemma=str(value), upos="NUM")
        ]
        survivor.upos = "NUM"
        survivor.numeric_value = float(value)
        removed = members - {survivor.node_id}
        variant.nodes = [n for n in variant.nodes if n.node_id not in removed]
        for node in variant.nodes:
            if node.head_id in removed:
                node.head_id = survivor.node_id
    if not ok:
        return [tree]
    variant.original_node_count = len(variant.nodes)
    variant.validate()
    return [tree, variant]
