"""Parser backends behind one tiny interface.

A backend is a callable mapping a question string to token rows
(surface, lemma, upos, head, deprel).  spaCy and Stanza are loaded lazily
and skipped with a warning when unavailable; the heuristic backend has no
dependencies and always loads.
"""

from __future__ import annotations

import sys
from typing import Callable

from . import heuristic

Row = tuple[str, str, str, int, str]
Backend = Callable[[str], "list[Row]"]


class BackendUnavailable(RuntimeError):
    pass


def _heuristic_backend(model: str) -> Backend:
    if model not in heuristic.MODELS:
        raise BackendUnavailable(
            f"heuristic model {model!r} unknown (have: {', '.join(heuristic.MODELS)})"
        )

    def run(question: str) -> list[Row]:
        return [
            (w.surface, w.lemma, w.upos, w.head, w.deprel)
            for w in heuristic.parse(question, model)
        ]

    return run


def _spacy_backend(model: str) -> Backend:
    try:
        import spacy
    except ImportError as exc:
        raise BackendUnavailable(f"spacy is not installed: {exc}") from exc
    try:
        nlp = spacy.load(model)
    except Exception as exc:
        raise BackendUnavailable(f"spacy model {model!r} failed to load: {exc}") from exc

    def run(question: str) -> list[Row]:
        doc = nlp(question)
        rows: list[Row] = []
        for token in doc:
            head = 0 if token.head is token else token.head.i + 1
            rows.append((token.text, token.lemma_ or token.text, token.pos_, head, token.dep_))
        return rows

    return run


def _stanza_backend(model: str) -> Backend:
    try:
        import stanza
    except ImportError as exc:
        raise BackendUnavailable(f"stanza is not installed: {exc}") from exc
    try:
        nlp = stanza.Pipeline(
            lang=model or "en",
            processors="tokenize,pos,lemma,depparse",
            verbose=False,
        )
    except Exception as exc:
        raise BackendUnavailable(f"stanza pipeline {model!r} failed to load: {exc}") from exc

    def run(question: str) -> list[Row]:
        doc = nlp(question)
        rows: list[Row] = []
        for sentence in doc.sentences:
            for word in sentence.words:
                rows.append(
                    (word.text, word.lemma or word.text, word.upos, word.head, word.deprel)
                )
            break  # questions are single sentences
        return rows

    return run


_FRAMEWORKS = {
    "heuristic": _heuristic_backend,
    "spacy": _spacy_backend,
    "stanza": _stanza_backend,
}


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_FRAMEWORKS))


def load_backend(framework: str, model: str) -> Backend:
    """Instantiate a backend; raises BackendUnavailable when it cannot load."""
    try:
        factory = _FRAMEWORKS[framework]
    except KeyError:
        raise BackendUnavailable(
            f"unknown framework {framework!r} (have: {', '.join(available_backends())})"
        ) from None
    return factory(model)


def warn(message: str) -> None:
    print(f"parse-adapter: {message}", file=sys.stderr)
