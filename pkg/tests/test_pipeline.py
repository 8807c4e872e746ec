import json

from lexiqa.pipeline import Pipeline, PipelineConfig, answer_question
from lexiqa.selector import clamped_f1

from .conftest import trees_for

MOSCOW_QUERY = (
    "SELECT DISTINCT ?answer WHERE { <http://dbpedia.org/resource/Moscow> "
    "<http://dbpedia.org/ontology/leaderName> ?answer }"
)


class TestAnswerQuestion:
    def test_moscow_candidate_present(self, toy_pipeline, question_trees):
        text = "Who is the mayor of Moscow?"
        run = toy_pipeline.answer_question(trees_for(question_trees, text), text)
        assert MOSCOW_QUERY in [c.query_text for c in run.candidates]

    def test_two_hop_candidate_present(self, toy_pipeline, question_trees):
        text = "Who is the mayor of the capital of Russia?"
        run = toy_pipeline.answer_question(trees_for(question_trees, text), text)
        bodies = [c.query_text for c in run.candidates]
        expected_patterns = {
            "<http://dbpedia.org/resource/Russia> <http://dbpedia.org/ontology/capital>",
            "<http://dbpedia.org/ontology/leaderName> ?answer",
        }
        assert any(all(p in body for p in expected_patterns) for body in bodies)

    def test_unmatchable_question_yields_empty_run(self, toy_pipeline, question_trees):
        text = "Who is the mayor of Moscow?"
        trees = trees_for(question_trees, text)
        run = toy_pipeline.answer_question([], "Gibberish without parses?")
        assert run.candidates == []
        assert run.trees_considered == 0

    def test_identical_parses_deduplicated(self, toy_pipeline, question_trees):
        text = "Who is the mayor of Moscow?"
        trees = trees_for(question_trees, text)
        assert len(trees) == 2  # two parser blocks, same structure
        run = toy_pipeline.answer_question(trees, text)
        assert run.trees_considered == 1

    def test_different_parses_compete(self, toy_pipeline, question_trees):
        text = "What is the birth name of Angela Merkel?"
        trees = trees_for(question_trees, text)
        assert len(trees) == 2
        run = toy_pipeline.answer_question(trees, text)
        assert run.trees_considered == 2
        gold = "<http://dbpedia.org/resource/Angela_Merkel> " \
               "<http://dbpedia.org/ontology/birthName> ?answer"
        assert any(gold in c.query_text for c in run.candidates)

    def test_candidate_provenance_complete(self, toy_pipeline, question_trees):
        text = "Who is the mayor of Moscow?"
        run = toy_pipeline.answer_question(trees_for(question_trees, text), text)
        seen = set()
        for cand in run.candidates:
            assert cand.dudes_text
            assert 0.0 <= cand.tree_score <= 1.0
            assert cand.enum_index not in seen
            seen.add(cand.enum_index)

    def test_monotone_candidate_cap(self, toy_config, question_trees):
        text = "Which cities have more than two million inhabitants?"
        trees = trees_for(question_trees, text)
        runs = {}
        for cap in (2, 4, 64):
            cfg = PipelineConfig(
                lexicon_path=toy_config.lexicon_path,
                kb_target=toy_config.kb_target,
                conllu_path=toy_config.conllu_path,
                max_candidates=cap,
            )
            runs[cap] = Pipeline(cfg).answer_question(trees, text)
        texts = {cap: [c.query_text for c in run.candidates] for cap, run in runs.items()}
        assert texts[2] == texts[4][:2]
        assert texts[4] == texts[64][: len(texts[4])]
        assert len(texts[2]) == 2

    def test_budget_exhaustion_is_not_an_error(self, toy_pipeline, question_trees):
        import time

        text = "Who is the mayor of Moscow?"
        run = toy_pipeline.answer_question(
            trees_for(question_trees, text), text, deadline=time.monotonic() - 1
        )
        assert run.budget_exhausted
        assert run.candidates == []

    def test_answer_question_function_accepts_config(self, toy_config, question_trees):
        text = "Who is the mayor of Moscow?"
        run = answer_question(toy_config, trees_for(question_trees, text), text)
        assert MOSCOW_QUERY in [c.query_text for c in run.candidates]


class TestNerInjection:
    def test_fixture_provider_feeds_entity_merging(self, toy_config, question_trees, tmp_path):
        text = "Who is the mayor of Moscow?"
        fixture = {
            text: [
                {
                    "iri": "http://dbpedia.org/resource/Moscow_Oblast",
                    "start": 6,
                    "end": 6,
                    "score": 0.85,
                    "label": "Moscow Oblast",
                }
            ]
        }
        path = tmp_path / "ner.json"
        path.write_text(json.dumps(fixture))
        cfg = PipelineConfig(
            lexicon_path=toy_config.lexicon_path,
            kb_target=toy_config.kb_target,
            conllu_path=toy_config.conllu_path,
            ner_fixture=str(path),
        )
        run = Pipeline(cfg).answer_question(trees_for(question_trees, text), text)
        oblast = [
            c for c in run.candidates if "Moscow_Oblast" in c.query_text
        ]
        # the injected candidate produces queries; they execute to nothing and
        # are kept only in the unfiltered candidate list
        assert oblast == [] or all(c.result_count == 0 for c in oblast)
        assert MOSCOW_QUERY in [c.query_text for c in run.candidates]


class TestToySuiteCoverage:
    def test_every_question_has_perfect_candidate(self, toy_pipeline, question_trees, fixtures_dir):
        from lexiqa.bench import load_dataset

        dataset = load_dataset(str(fixtures_dir / "qald_toy.json"))
        misses = []
        for question in dataset:
            run = toy_pipeline.answer_question(
                trees_for(question_trees, question.text), question.text
            )
            best = max(
                (clamped_f1(c.answers, question.gold_answers) for c in run.candidates),
                default=0.0,
            )
            if best < 1.0:
                misses.append(question.id)
        assert misses == []


class TestRemoteTarget:
    def test_pipeline_runs_against_sparql_endpoint(self, toy_config, question_trees, tmp_path):
        import http.server
        import json as jsonlib
        import threading

        class Handler(http.server.BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers["Content-Length"])
                self.rfile.read(length)
                payload = {
                    "head": {"vars": ["answer"]},
                    "results": {
                        "bindings": [
                            {"answer": {"type": "uri",
                                        "value": "http://dbpedia.org/resource/Sergey_Sobyanin"}}
                        ]
                    },
                }
                body = jsonlib.dumps(payload).encode()
                self.send_response(200)
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def log_message(self, *args):
                pass

        server = http.server.HTTPServer(("127.0.0.1", 0), Handler)
        threading.Thread(target=server.serve_forever, daemon=True).start()
        try:
            cfg = PipelineConfig(
                lexicon_path=toy_config.lexicon_path,
                kb_target=f"http://127.0.0.1:{server.server_port}/sparql",
                label_path=toy_config.kb_target,  # labels still come from the local file
                class_iris=["http://dbpedia.org/ontology/City"],
            )
            pipeline = Pipeline(cfg)
            text = "Who is the mayor of Moscow?"
            run = pipeline.answer_question(trees_for(question_trees, text), text)
            assert run.candidates
            assert all(
                "Sergey_Sobyanin" in str(c.answers.values) for c in run.candidates
            )
        finally:
            server.shutdown()

    def test_remote_target_without_labels_is_an_error(self, toy_config):
        from lexiqa.errors import LexiqaError

        cfg = PipelineConfig(
            lexicon_path=toy_config.lexicon_path,
            kb_target="http://127.0.0.1:9/sparql",
        )
        try:
            Pipeline(cfg)
        except LexiqaError as exc:
            assert "label source" in str(exc)
        else:
            raise AssertionError("expected a configuration error")


class TestOverlappingSpansEndToEnd:
    def test_overlap_branches_and_best_variant_wins(self, tmp_path, question_trees):
        kb = tmp_path / "kb.nt"
        kb.write_text(
            "<http://x/The_New_York_Times> <http://www.w3.org/2000/01/rdf-schema#label> "
            '"New York Times" .\n'
            "<http://x/The_New_York_Times> <http://x/founder> <http://x/Henry_Raymond> .\n"
            '<http://x/New_York> <http://www.w3.org/2000/01/rdf-schema#label> "New York" .\n'
            "<http://x/Henry_Raymond> <http://www.w3.org/2000/01/rdf-schema#label> "
            '"Henry Raymond" .\n'
        )
        lexicon = tmp_path / "lexicon.json"
        lexicon.write_text(
            json.dumps(
                {
                    "entries": [
                        {
                            "id": "founded",
                            "canonicalForm": "founded",
                            "otherForms": ["found"],
                            "partOfSpeech": "verb",
                            "frame": "TransitiveFrame",
                            "reference": "http://x/founder",
                            "subjArg": "subjOfProp",
                        }
                    ]
                }
            )
        )
        conllu = tmp_path / "q.conllu"
        conllu.write_text(
            "# text = Who founded the New York Times?\n"
            "# parser = handud/core\n"
            "1\tWho\twho\tPRON\t_\t_\t2\tnsubj\t_\t_\n"
            "2\tfounded\tfound\tVERB\t_\t_\t0\troot\t_\t_\n"
            "3\tthe\tthe\tDET\t_\t_\t6\tdet\t_\t_\n"
            "4\tNew\tNew\tPROPN\t_\t_\t5\tcompound\t_\t_\n"
            "5\tYork\tYork\tPROPN\t_\t_\t6\tcompound\t_\t_\n"
            "6\tTimes\tTimes\tPROPN\t_\t_\t2\tobj\t_\t_\n"
            "7\t?\t?\tPUNCT\t_\t_\t2\tpunct\t_\t_\n"
        )
        cfg = PipelineConfig(
            lexicon_path=str(lexicon), kb_target=str(kb), conllu_path=str(conllu)
        )
        pipeline = Pipeline(cfg)
        from lexiqa.deptree import read_conllu

        trees = read_conllu(str(conllu))
        run = pipeline.answer_question(trees, "Who founded the New York Times?")
        # the overlapping "New York" / "New York Times" spans branch into
        # two competing tree variants
        assert run.trees_considered == 2
        gold = (
            "SELECT DISTINCT ?answer WHERE { <http://x/The_New_York_Times> "
            "<http://x/founder> ?answer }"
        )
        winners = [c for c in run.candidates if c.query_text == gold]
        assert winners and winners[0].result_count == 1
