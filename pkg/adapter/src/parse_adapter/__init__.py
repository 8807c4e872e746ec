"""Dependency parser wrapper: questions in, CoNLL-U out.

Multiple backends can run over the same questions to raise the chance
that at least one parse is usable downstream; every (question, backend)
pair becomes one sentence block tagged with a ``# parser`` comment.
"""

from .adapter import AdapterConfig, AdapterError, parse_to_conllu
from .backends import available_backends, load_backend

__all__ = [
    "AdapterConfig",
    "AdapterError",
    "parse_to_conllu",
    "available_backends",
    "load_backend",
]

__version__ = "0.1.0"
