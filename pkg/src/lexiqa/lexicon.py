"""Ontology lexicon: verbalizations of KB properties and classes.

A lexicon entry pairs surface forms ("mayor", "birth name") with the KB
element they verbalize, a syntactic frame, and an optional adposition
marker that disambiguates which argument of the property the marked
phrase fills.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, field
from enum import Enum

from .errors import LexiconFormatError, LexiconValidationError
from .terms import is_valid_iri

__all__ = [
    "Frame",
    "PartOfSpeech",
    "SubjArg",
    "Degree",
    "LexicalEntry",
    "Lexicon",
    "load_lexicon",
    "lookup_exact",
    "normalize_form",
]


class PartOfSpeech(str, Enum):
    NOUN = "noun"
    VERB = "verb"
    ADJECTIVE = "adjective"


class Frame(str, Enum):
    NOUN_PP = "NounPPFrame"
    TRANSITIVE = "TransitiveFrame"
    INTRANSITIVE_PP = "IntransitivePPFrame"
    ADJECTIVE_PREDICATE = "AdjectivePredicateFrame"
    ADJECTIVE_SUPERLATIVE = "AdjectiveSuperlativeFrame"


class SubjArg(str, Enum):
    """Which question role fills the subject position of the triple.

    SUBJECT_OF_PROPERTY: the marked argument ("of Moscow") is the triple's
    subject, the other variable its object.  OBJECT_OF_PROPERTY: reversed.
    """

    SUBJECT_OF_PROPERTY = "subjOfProp"
    OBJECT_OF_PROPERTY = "objOfProp"


class Degree(str, Enum):
    MAX = "max"
    MIN = "min"


_WS_RE = re.compile(r"\s+")


def normalize_form(text: str) -> str:
    """Unicode-aware lowercasing plus whitespace collapsing."""
    text = unicodedata.normalize("NFC", text)
    return _WS_RE.sub(" ", text.strip()).lower()


@dataclass(frozen=True, slots=True)
class LexicalEntry:
    id: str
    canonical_form: str
    other_forms: tuple[str, ...]
    part_of_speech: PartOfSpeech
    frame: Frame
    reference: str
    marker: str | None = None
    subj_arg: SubjArg = SubjArg.SUBJECT_OF_PROPERTY
    degree: Degree | None = None

    def forms(self) -> tuple[str, ...]:
        return (self.canonical_form,) + self.other_forms

    def validate(self) -> None:
        if not self.canonical_form or self.canonical_form != self.canonical_form.strip():
            raise LexiconValidationError(
                f"entry {self.id!r}: canonical form must be non-empty and trimmed"
            )
        if (self.frame is Frame.ADJECTIVE_SUPERLATIVE) != (self.degree is not None):
            raise LexiconValidationError(
                f"entry {self.id!r}: degree is required exactly for "
                f"{Frame.ADJECTIVE_SUPERLATIVE.value}"
            )
        if not is_valid_iri(self.reference):
            raise LexiconValidationError(
                f"entry {self.id!r}: reference {self.reference!r} is not an absolute IRI"
            )


@dataclass(slots=True)
class Lexicon:
    entries: list[LexicalEntry]
    form_index: dict[str, list[str]] = field(default_factory=dict)
    _by_id: dict[str, LexicalEntry] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self._by_id = {}
        for entry in self.entries:
            entry.validate()
            if entry.id in self._by_id:
                raise LexiconValidationError(f"duplicate entry id {entry.id!r}")
            self._by_id[entry.id] = entry
        index: dict[str, list[str]] = {}
        for entry in self.entries:
            for form in entry.forms():
                index.setdefault(normalize_form(form), []).append(entry.id)
        self.form_index = {form: sorted(set(ids)) for form, ids in index.items()}

    def entry(self, entry_id: str) -> LexicalEntry:
        return self._by_id[entry_id]

    def __len__(self) -> int:
        return len(self.entries)


_ENTRY_KEYS = {
    "id",
    "canonicalForm",
    "otherForms",
    "partOfSpeech",
    "frame",
    "reference",
    "marker",
    "subjArg",
    "degree",
}

_REQUIRED_KEYS = {"id", "canonicalForm", "partOfSpeech", "frame", "reference", "subjArg"}


def _parse_entry(raw: object, position: int) -> LexicalEntry:
    where = f"entries[{position}]"
    if not isinstance(raw, dict):
        raise LexiconFormatError(f"{where}: entry must be an object")
    unknown = set(raw) - _ENTRY_KEYS
    if unknown:
        raise LexiconFormatError(f"{where}: unknown keys {sorted(unknown)}")
    missing = _REQUIRED_KEYS - set(raw)
    if missing:
        raise LexiconFormatError(f"{where}: missing keys {sorted(missing)}")
    other = raw.get("otherForms", [])
    if not isinstance(other, list) or not all(isinstance(f, str) for f in other):
        raise LexiconFormatError(f"{where}: otherForms must be an array of strings")
    try:
        return LexicalEntry(
            id=str(raw["id"]),
            canonical_form=raw["canonicalForm"],
            other_forms=tuple(other),
            part_of_speech=PartOfSpeech(raw["partOfSpeech"]),
            frame=Frame(raw["frame"]),
            reference=raw["reference"],
            marker=raw.get("marker"),
            subj_arg=SubjArg(raw["subjArg"]),
            degree=Degree(raw["degree"]) if raw.get("degree") is not None else None,
        )
    except ValueError as exc:
        raise LexiconFormatError(f"{where}: {exc}") from exc


def load_lexicon(path: str) -> Lexicon:
    """Load and validate a lexicon from a JSON document.

    The document is a single object ``{"entries": [...]}``; see the entry
    key set above for the accepted fields.  Malformed documents raise
    LexiconFormatError with the offending entry position; invariant
    violations raise LexiconValidationError naming the entry id.
    """
    with open(path, encoding="utf-8") as handle:
        try:
            doc = json.load(handle)
        except json.JSONDecodeError as exc:
            raise LexiconFormatError(f"{path}: invalid JSON at line {exc.lineno}") from exc
    if not isinstance(doc, dict) or "entries" not in doc:
        raise LexiconFormatError(f"{path}: top-level object with an 'entries' array expected")
    entries = doc["entries"]
    if not isinstance(entries, list):
        raise LexiconFormatError(f"{path}: 'entries' must be an array")
    parsed = [_parse_entry(raw, i) for i, raw in enumerate(entries)]
    return Lexicon(entries=parsed)


def lookup_exact(lex: Lexicon, phrase: str) -> list[LexicalEntry]:
    """All entries having a form equal to the normalized phrase.

    Deterministic order: ascending entry id.  Empty list on no match.
    """
    ids = lex.form_index.get(normalize_form(phrase), [])
    return [lex.entry(i) for i in ids]
