from __future__ import annotations

import json

import pytest

from browselab.cli import EXIT_DATA, EXIT_OK, main
from browselab.simlab import ExperimentConfig, SyntheticCorpusSpec, run_experiment, write_experiment_outputs


def write_corpus(path, objs):
    path.write_text("\n".join(json.dumps(o) for o in objs) + "\n")


class TestIndexCommand:
    def test_valid_corpus_summary(self, tmp_path, capsys):
        corpus = tmp_path / "corpus.jsonl"
        write_corpus(corpus, [{"id": f"d{i}", "title": "t", "keywords": ["k"]} for i in range(5)])
        assert main(["index", "--corpus", str(corpus)]) == EXIT_OK
        summary = json.loads(capsys.readouterr().out)
        assert summary["doc_count"] == 5
        assert summary["terms_per_field"]["keyword"] == 1

    def test_duplicate_id_exits_with_line_numbers(self, tmp_path, capsys):
        corpus = tmp_path / "corpus.jsonl"
        write_corpus(corpus, [{"id": "a"}, {"id": "b"}, {"id": "a"}])
        assert main(["index", "--corpus", str(corpus)]) == EXIT_DATA
        err = capsys.readouterr().err
        assert "1" in err and "3" in err

    def test_empty_corpus_warns(self, tmp_path, capsys):
        corpus = tmp_path / "empty.jsonl"
        corpus.write_text("")
        assert main(["index", "--corpus", str(corpus)]) == EXIT_OK
        captured = capsys.readouterr()
        assert "no valid records" in captured.err
        assert json.loads(captured.out)["doc_count"] == 0

    def test_missing_corpus_is_data_error(self, tmp_path, capsys):
        assert main(["index", "--corpus", str(tmp_path / "nope.jsonl")]) == EXIT_DATA

    def test_summary_written_to_out(self, tmp_path, capsys):
        corpus = tmp_path / "corpus.jsonl"
        write_corpus(corpus, [{"id": "a"}])
        out = tmp_path / "summary.json"
        main(["index", "--corpus", str(corpus), "--out", str(out)])
        assert json.loads(out.read_text())["doc_count"] == 1


SMALL = {"topics": 3, "docs_per_topic": 30, "block_size": 10, "seed": 2}


class TestSimulateCommand:
    def test_deterministic_outputs(self, tmp_path, capsys):
        config = tmp_path / "experiment.json"
        config.write_text(json.dumps({"sessions": 40, "seed": 9, "corpus": SMALL}))
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        assert main(["simulate", "--config", str(config), "--out", str(out1)]) == EXIT_OK
        assert main(["simulate", "--config", str(config), "--out", str(out2)]) == EXIT_OK
        assert (out1 / "transactions.jsonl").read_bytes() == (out2 / "transactions.jsonl").read_bytes()
        assert (out1 / "report.json").read_bytes() == (out2 / "report.json").read_bytes()

    def test_report_carries_all_headline_fields(self, tmp_path, capsys):
        config = tmp_path / "experiment.json"
        config.write_text(json.dumps({"sessions": 40, "seed": 9, "corpus": SMALL}))
        out = tmp_path / "out"
        main(["simulate", "--config", str(config), "--out", str(out)])
        report = json.loads((out / "report.json").read_text())
        for arm_report in report["arms"].values():
            for key in ("mfr", "mfr_ge20", "clicked_runs", "stratagem_runs",
                        "local_usefulness", "global_usefulness", "history_bins",
                        "mean_dwell_seconds", "mean_interactions_per_session"):
                assert key in arm_report
            assert set(arm_report["mfr"]) == {"mfr", "sd", "n"}
        assert "pairwise" in report and "bonferroni_threshold" in report

    def test_missing_corpus_path_is_data_error(self, tmp_path, capsys):
        config = tmp_path / "experiment.json"
        config.write_text(json.dumps({"sessions": 5, "corpus_path": str(tmp_path / "nope.jsonl")}))
        assert main(["simulate", "--config", str(config), "--out", str(tmp_path / "o")]) == EXIT_DATA

    def test_cli_overrides(self, tmp_path, capsys):
        config = tmp_path / "experiment.json"
        config.write_text(json.dumps({"sessions": 500, "seed": 9, "corpus": SMALL}))
        out = tmp_path / "out"
        main(["simulate", "--config", str(config), "--sessions", "10", "--out", str(out)])
        report = json.loads((out / "report.json").read_text())
        assert report["total_sessions"] <= 10


class TestEvaluateCommand:
    @pytest.fixture
    def log_path(self, tmp_path):
        config = ExperimentConfig(sessions=40, seed=9, corpus=SyntheticCorpusSpec(**SMALL))
        result = run_experiment(config)
        paths = write_experiment_outputs(result, tmp_path / "sim")
        return paths["log"], result.report

    def test_matches_report_from_simulation(self, tmp_path, capsys, log_path):
        path, report = log_path
        out = tmp_path / "eval"
        assert main(["evaluate", "--log", str(path), "--out", str(out)]) == EXIT_OK
        evaluated = json.loads((out / "report.json").read_text())
        assert evaluated == report.to_obj()

    def test_empty_log_reports_undefined_markers(self, tmp_path, capsys):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("")
        assert main(["evaluate", "--log", str(empty)]) == EXIT_OK
        assert "n/a" in capsys.readouterr().out

    def test_missing_log_is_data_error(self, tmp_path, capsys):
        assert main(["evaluate", "--log", str(tmp_path / "nope.jsonl")]) == EXIT_DATA

    def test_history_bins_flag(self, tmp_path, capsys, log_path):
        path, _ = log_path
        assert main(["evaluate", "--log", str(path), "--history-bins"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "MFR by history size" in out
        assert "[6,10]" in out


class TestUsage:
    def test_no_command_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2
