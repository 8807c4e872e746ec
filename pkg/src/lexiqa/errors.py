"""Exception hierarchy for the lexiqa pipeline."""


class LexiqaError(Exception):
    """Base class for all errors raised by this package."""


class LexiconFormatError(LexiqaError):
    """The lexicon document is not structurally valid JSON-with-entries."""


class LexiconValidationError(LexiqaError):
    """An entry violates a lexicon invariant (bad IRI, duplicate id, ...)."""


class ConlluFormatError(LexiqaError):
    """A CoNLL-U line could not be parsed; message carries the line number."""


class TreeStructureError(LexiqaError):
    """Head links of a sentence do not form a single rooted tree."""


class CompositionError(LexiqaError):
    """A composition precondition was violated (pair not owned, shared vars)."""


class ProjectionError(LexiqaError):
    """No usable projection variable for a SELECT query.

    Raised by query building and treated as a pruned enumeration branch by
    the pipeline, never surfaced to the user.
    """


class UnsupportedQueryError(LexiqaError):
    """The in-memory engine was given a construct outside its SPARQL subset."""


class TransportError(LexiqaError):
    """A remote SPARQL endpoint could not be reached or answered badly."""
