"""RDF terms shared by the lexicon, DUDES, query and store layers."""

from __future__ import annotations

import re
from dataclasses import dataclass

XSD = "http://www.w3.org/2001/XMLSchema#"
RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"
RDFS_LABEL = "http://www.w3.org/2000/01/rdf-schema#label"

# scheme ':' plus at least one more character, no whitespace or angle brackets
_IRI_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+.\-]*:[^\s<>\"{}|\\^`]+$")

_NUMERIC_DATATYPES = {
    XSD + "integer",
    XSD + "int",
    XSD + "long",
    XSD + "decimal",
    XSD + "double",
    XSD + "float",
    XSD + "nonNegativeInteger",
}


def is_valid_iri(text: str) -> bool:
    """Syntactic check for an absolute IRI (scheme + opaque rest)."""
    return bool(_IRI_RE.match(text))


@dataclass(frozen=True, slots=True)
class IRI:
    value: str

    def __str__(self) -> str:
        return self.value

    def n3(self) -> str:
        return f"<{self.value}>"


@dataclass(frozen=True, slots=True)
class Literal:
    lexical: str
    datatype: str | None = None
    lang: str | None = None

    def __str__(self) -> str:
        return self.lexical

    def n3(self) -> str:
        out = '"' + _escape(self.lexical) + '"'
        if self.lang:
            return out + "@" + self.lang
        if self.datatype:
            return out + "^^<" + self.datatype + ">"
        return out

    def numeric_value(self) -> float | None:
        """Numeric interpretation, or None when the literal is not a number."""
        if self.datatype is not None and self.datatype not in _NUMERIC_DATATYPES:
            return None
        try:
            return float(self.lexical)
        except ValueError:
            return None


Term = IRI | Literal


def _escape(text: str) -> str:
    return (
        text.replace("\\", "\\\\")
        .replace('"', '\\"')
        .replace("\n", "\\n")
        .replace("\r", "\\r")
        .replace("\t", "\\t")
    )


def _unescape(text: str) -> str:
    out = []
    i = 0
    while i < len(text):
        c = text[i]
        if c == "\\" and i + 1 < len(text):
            nxt = text[i + 1]
            mapped = {"\\": "\\", '"': '"', "n": "\n", "r": "\r", "t": "\t"}.get(nxt)
            if mapped is not None:
                out.append(mapped)
                i += 2
                continue
            if nxt == "u" and i + 6 <= len(text):
                out.append(chr(int(text[i + 2 : i + 6], 16)))
                i += 6
                continue
            if nxt == "U" and i + 10 <= len(text):
                out.append(chr(int(text[i + 2 : i + 10], 16)))
                i += 10
                continue
        out.append(c)
        i += 1
    return "".join(out)


def answer_key(term: Term) -> str:
    """Canonical string used when comparing answers against gold sets.

    IRIs compare by full IRI text.  Numeric literals compare by value so
    "8848" and "8848.0" count as the same answer; other literals compare
    by lexical form, ignoring datatype and language tags.
    """
    if isinstance(term, IRI):
        return term.value
    num = term.numeric_value()
    if num is not None:
        if num == int(num):
            return str(int(num))
        return repr(num)
    return term.lexical
