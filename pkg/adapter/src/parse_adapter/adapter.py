"""Batch conversion of questions into validated CoNLL-U blocks."""

from __future__ import annotations

from dataclasses import dataclass, field

from .backends import Backend, BackendUnavailable, Row, load_backend, warn


class AdapterError(RuntimeError):
    pass


@dataclass(slots=True)
class AdapterConfig:
    backends: list[tuple[str, str]] = field(
        default_factory=lambda: [("heuristic", "nounattach")]
    )
    out: str | None = None  # None writes to stdout

    def __post_init__(self) -> None:
        if not self.backends:
            raise AdapterError("at least one parser backend is required")


def _validate_rows(rows: list[Row], question: str, tag: str) -> None:
    if not rows:
        raise AdapterError(f"{tag}: empty parse for {question!r}")
    n = len(rows)
    roots = 0
    for position, (surface, lemma, upos, head, deprel) in enumerate(rows, start=1):
        if not surface or any(c in surface for c in "\t\n"):
            raise AdapterError(f"{tag}: bad surface form at token {position}")
        if head == 0:
            roots += 1
        elif not 1 <= head <= n or head == position:
            raise AdapterError(f"{tag}: token {position} has head {head} out of range")
    if roots != 1:
        raise AdapterError(f"{tag}: expected exactly one root, found {roots}")
    # acyclicity: every token must reach the root
    for position in range(1, n + 1):
        seen = set()
        cursor = position
        while rows[cursor - 1][3] != 0:
            if cursor in seen:
                raise AdapterError(f"{tag}: cycle through token {position}")
            seen.add(cursor)
            cursor = rows[cursor - 1][3]


def _block(question: str, tag: str, rows: list[Row]) -> str:
    lines = [f"# text = {question}", f"# parser = {tag}"]
    for position, (surface, lemma, upos, head, deprel) in enumerate(rows, start=1):
        lines.append(
            "\t".join(
                [
                    str(position),
                    surface,
                    lemma or "_",
                    upos or "_",
                    "_",
                    "_",
                    str(head),
                    deprel or "dep",
                    "_",
                    "_",
                ]
            )
        )
    return "\n".join(lines)


def parse_to_conllu(cfg: AdapterConfig, questions: list[str]) -> str:
    """One validated sentence block per (question, usable backend) pair.

    Backends that fail to load are skipped with a warning on stderr; if
    none remain an AdapterError is raised.
    """
    loaded: list[tuple[str, Backend]] = []
    for framework, model in cfg.backends:
        tag = f"{framework}/{model}"
        try:
            loaded.append((tag, load_backend(framework, model)))
        except BackendUnavailable as exc:
            warn(f"skipping backend {tag}: {exc}")
    if not loaded:
        raise AdapterError("no usable parser backend")
    blocks = []
    for question in questions:
        question = question.strip()
        if not question:
            continue
        for tag, backend in loaded:
            rows = backend(question)
            _validate_rows(rows, question, tag)
            blocks.append(_block(question, tag, rows))
    return "\n\n".join(blocks) + "\n"
