import pathlib

import pytest

from lexiqa.deptree import read_conllu
from lexiqa.kb import load_ntriples
from lexiqa.lexicon import load_lexicon
from lexiqa.match import build_label_index, read_label_source
from lexiqa.pipeline import Pipeline, PipelineConfig

FIXTURES = pathlib.Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir() -> pathlib.Path:
    return FIXTURES


@pytest.fixture(scope="session")
def lexicon():
    return load_lexicon(str(FIXTURES / "lexicon.json"))


@pytest.fixture(scope="session")
def store():
    return load_ntriples(str(FIXTURES / "kb.nt"))


@pytest.fixture(scope="session")
def label_index():
    return build_label_index(read_label_source(str(FIXTURES / "kb.nt")))


@pytest.fixture(scope="session")
def question_trees():
    return read_conllu(str(FIXTURES / "questions.conllu"))


@pytest.fixture(scope="session")
def toy_config() -> PipelineConfig:
    return PipelineConfig(
        lexicon_path=str(FIXTURES / "lexicon.json"),
        kb_target=str(FIXTURES / "kb.nt"),
        conllu_path=str(FIXTURES / "questions.conllu"),
    )


@pytest.fixture(scope="session")
def toy_pipeline(toy_config) -> Pipeline:
    return Pipeline(toy_config)


def trees_for(trees, text):
    return [t for t in trees if t.text == text]
