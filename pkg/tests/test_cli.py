import json

import pytest

from lexiqa.cli import main


@pytest.fixture()
def config_path(tmp_path, fixtures_dir):
    cfg = {
        "lexicon_path": str(fixtures_dir / "lexicon.json"),
        "kb_target": str(fixtures_dir / "kb.nt"),
        "conllu_path": str(fixtures_dir / "questions.conllu"),
    }
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return str(path)


class TestLexiconValidate:
    def test_counts_printed(self, fixtures_dir, capsys):
        code = main(["lexicon-validate", "--lexicon", str(fixtures_dir / "lexicon.json")])
        out = capsys.readouterr().out
        assert code == 0
        assert "entries: 25" in out
        assert "NounPPFrame: 14" in out
        assert "AdjectiveSuperlativeFrame: 3" in out

    def test_json_mode(self, fixtures_dir, capsys):
        code = main(
            ["--json", "lexicon-validate", "--lexicon", str(fixtures_dir / "lexicon.json")]
        )
        payload = json.loads(capsys.readouterr().out)
        assert code == 0
        assert payload["entries"] == 25

    def test_missing_file_is_runtime_error(self, capsys):
        code = main(["lexicon-validate", "--lexicon", "/nonexistent/lex.json"])
        assert code == 1
        assert "/nonexistent/lex.json" in capsys.readouterr().err


class TestIndexBuild:
    def test_builds_and_persists(self, fixtures_dir, tmp_path, capsys):
        out_path = tmp_path / "index.json"
        code = main(
            ["index-build", "--labels", str(fixtures_dir / "kb.nt"), "--out", str(out_path)]
        )
        assert code == 0
        payload = json.loads(out_path.read_text())
        assert payload["size"] == len(payload["labels"])
        assert payload["labels"]["moscow"] == ["http://dbpedia.org/resource/Moscow"]


class TestAnswer:
    def test_answer_prints_query_and_answers(self, config_path, fixtures_dir, capsys):
        code = main(
            [
                "--json",
                "answer",
                "--config",
                config_path,
                "--question",
                "Who is the mayor of Moscow?",
                "--conllu",
                str(fixtures_dir / "questions.conllu"),
            ]
        )
        payload = json.loads(capsys.readouterr().out)
        assert code == 0
        assert "leaderName" in payload["query"]
        assert payload["answers"] == ["http://dbpedia.org/resource/Sergey_Sobyanin"]

    def test_missing_config_exits_one(self, capsys):
        code = main(["answer", "--config", "/nope.json", "--question", "Who?"])
        assert code == 1
        assert "/nope.json" in capsys.readouterr().err

    def test_unknown_flag_exits_two(self):
        with pytest.raises(SystemExit) as err:
            main(["answer", "--bogus"])
        assert err.value.code == 2


class TestEvaluate:
    def test_bestscore_run_writes_report(self, config_path, fixtures_dir, tmp_path, capsys):
        out_path = tmp_path / "report.json"
        code = main(
            [
                "evaluate",
                "--config",
                config_path,
                "--dataset",
                str(fixtures_dir / "qald_toy.json"),
                "--strategy",
                "bestscore",
                "--strategy",
                "mostwins:0.25",
                "--out",
                str(out_path),
            ]
        )
        out = capsys.readouterr().out
        assert code == 0
        assert "BestScore" in out
        reports = json.loads(out_path.read_text())
        best = [r for r in reports if r["strategy"] == "BestScore"][0]
        assert best["micro"]["f1"] >= 0.85


class TestExplain:
    def test_explain_shows_traces_and_candidates(self, config_path, fixtures_dir, capsys):
        code = main(
            [
                "explain",
                "--config",
                config_path,
                "--question",
                "Who is the mayor of Moscow?",
                "--conllu",
                str(fixtures_dir / "questions.conllu"),
            ]
        )
        out = capsys.readouterr().out
        assert code == 0
        assert "trees considered" in out
        assert "merges" in out
        assert "leaderName" in out


class TestBudgetExitCode:
    def test_exhausted_budget_exits_nonzero(self, config_path, fixtures_dir, capsys):
        code = main(
            [
                "evaluate",
                "--config",
                config_path,
                "--dataset",
                str(fixtures_dir / "qald_toy.json"),
                "--strategy",
                "bestscore",
                "--budget",
                "0.0",
            ]
        )
        assert code == 1

    def test_ample_budget_exits_zero(self, config_path, fixtures_dir, capsys):
        code = main(
            [
                "evaluate",
                "--config",
                config_path,
                "--dataset",
                str(fixtures_dir / "qald_toy.json"),
                "--strategy",
                "bestscore",
                "--budget",
                "300",
            ]
        )
        assert code == 0
