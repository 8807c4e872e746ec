"""Compositional question answering over RDF knowledge bases.

Pipeline stages: dependency parse ingest, tree merging, ontology matching,
tree scoring, meaning composition, SPARQL generation, execution, and
candidate selection, driven by an explicit ontology lexicon.
"""

from .bench import BenchQuestion, EvalReport, load_dataset, run_benchmark
from .deptree import DepNode, DepTree, read_conllu, numerize_variants
from .dudes import (
    Dudes,
    compose,
    compose_tree,
    entity_dudes,
    property_dudes,
    superlative_dudes,
)
from .kb import AnswerSet, RemoteEndpoint, TripleStore, execute, load_ntriples
from .lexicon import LexicalEntry, Lexicon, load_lexicon, lookup_exact
from .match import (
    LabelIndex,
    build_label_index,
    match_entities,
    match_properties,
    similarity,
)
from .merge import apply_entity_merging, apply_generic_rules, apply_marker_rules
from .pipeline import Pipeline, PipelineConfig, PipelineRun, answer_question
from .score import TreeScore, score_tree
from .selector import (
    Accum,
    BaselineComparator,
    BestScore,
    CandidateQuery,
    MostWins,
    clamped_f1,
    filter_candidates,
    select,
)
from .sparql import QueryIR, analyze_boundness, serialize, to_query

__version__ = "0.1.0"
