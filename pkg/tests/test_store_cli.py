"""Persistence and command-line tests: atomic writes, fingerprints, exit
codes, and end-to-end golden runs through the real CLI."""

import json
import os
import subprocess
import sys
import threading
import time
from pathlib import Path

import pytest

from retrogen.backend.mock import MockBackend
from retrogen.backend.server import BackendServer
from retrogen.cli import main
from retrogen.errors import ConfigurationError
from retrogen.store import (
    atomic_write_text,
    canonical_json,
    corpus_fingerprint,
    load_corpus,
)

DATA = Path(__file__).parent / "data"
GOLDEN = DATA / "golden"


@pytest.fixture(scope="module")
def served_mock():
    with BackendServer(MockBackend(seed=7)) as server:
        yield server


class TestStore:
    def test_load_corpus_sorted(self):
        docs = load_corpus(DATA / "corpus")
        assert [d.doc_id for d in docs] == ["door.txt", "market.txt", "tower.txt"]

    def test_empty_dir_rejected(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_corpus(tmp_path)

    def test_missing_dir_rejected(self, tmp_path):
        with pytest.raises(ConfigurationError):
            load_corpus(tmp_path / "nope")

    def test_fingerprint_stable_for_identical_bytes(self, tmp_path):
        for sub in ("a", "b"):
            d = tmp_path / sub
            d.mkdir()
            (d / "one.txt").write_text("alpha text.", "utf-8")
            (d / "two.txt").write_text("beta text.", "utf-8")
        fp_a = corpus_fingerprint(load_corpus(tmp_path / "a"))
        fp_b = corpus_fingerprint(load_corpus(tmp_path / "b"))
        assert fp_a == fp_b

    def test_fingerprint_changes_with_content(self, tmp_path):
        d = tmp_path / "c"
        d.mkdir()
        (d / "one.txt").write_text("alpha text.", "utf-8")
        fp1 = corpus_fingerprint(load_corpus(d))
        (d / "one.txt").write_text("alpha text!", "utf-8")
        fp2 = corpus_fingerprint(load_corpus(d))
        assert fp1 != fp2

    def test_atomic_write_leaves_no_temp(self, tmp_path):
        target = tmp_path / "out.json"
        atomic_write_text(target, "hello")
        assert target.read_text() == "hello"
        assert list(tmp_path.iterdir()) == [target]


class TestCliBasics:
    def test_unknown_subcommand_exits_1(self, capsys):
        with pytest.raises(SystemExit) as e:
            main(["frobnicate"])
        assert e.value.code == 1
        assert "usage" in capsys.readouterr().err

    def test_no_command_exits_1(self):
        with pytest.raises(SystemExit) as e:
            main([])
        assert e.value.code == 1

    def test_missing_backend_is_validation_error(self, tmp_path, monkeypatch):
        monkeypatch.delenv("RETROGEN_BACKEND_URL", raising=False)
        ending = tmp_path / "ending.txt"
        ending.write_text("The end.", "utf-8")
        rc = main(["generate", "bbart", "--ending", str(ending), "--iterations", "1"])
        assert rc == 1

    def test_unreachable_backend_exits_2(self, tmp_path):
        ending = tmp_path / "ending.txt"
        ending.write_text("The end.", "utf-8")
        rc = main([
            "generate", "bbart", "--ending", str(ending),
            "--backend-url", "http://127.0.0.1:9", "--out", str(tmp_path / "run"),
        ])
        assert rc == 2

    def test_env_var_backend_fallback(self, tmp_path, monkeypatch, served_mock):
        monkeypatch.setenv("RETROGEN_BACKEND_URL", served_mock.url)
        ending = tmp_path / "ending.txt"
        ending.write_text("The end came. All was still.", "utf-8")
        rc = main([
            "generate", "bbart", "--ending", str(ending), "--iterations", "1",
            "--beam-width", "2", "--max-length", "4", "--out", str(tmp_path / "run"),
        ])
        assert rc == 0


class TestCliGolden:
    def test_edgar_cli_reproduces_frozen_trace(self, served_mock, tmp_path):
        out = tmp_path / "run"
        rc = main([
            "generate", "edgar",
            "--ending", str(DATA / "ending.txt"),
            "--corpus", str(DATA / "corpus"),
            "--config", str(GOLDEN / "cli_config.json"),
            "--seed", "7", "--iterations", "3",
            "--backend-url", served_mock.url,
            "--out", str(out),
        ])
        assert rc == 0
        assert (out / "trace.json").read_bytes() == (GOLDEN / "cli_trace.json").read_bytes()
        assert (out / "story.txt").read_bytes() == (GOLDEN / "cli_story.txt").read_bytes()
        manifest = json.loads((out / "manifest.json").read_text("utf-8"))
        assert manifest["config"]["seed"] == 7
        assert manifest["corpus_fingerprint"] == corpus_fingerprint(load_corpus(DATA / "corpus"))

    def test_rerun_from_manifest_is_identical(self, served_mock, tmp_path):
        first = tmp_path / "first"
        rc = main([
            "generate", "edgar",
            "--ending", str(DATA / "ending.txt"),
            "--corpus", str(DATA / "corpus"),
            "--config", str(GOLDEN / "cli_config.json"),
            "--backend-url", served_mock.url,
            "--out", str(first),
        ])
        assert rc == 0
        manifest = json.loads((first / "manifest.json").read_text("utf-8"))
        config_path = tmp_path / "rerun_config.json"
        config_path.write_text(json.dumps(manifest["config"]), "utf-8")
        second = tmp_path / "second"
        rc = main([
            "generate", "edgar",
            "--ending", str(DATA / "ending.txt"),
            "--corpus", str(DATA / "corpus"),
            "--config", str(config_path),
            "--backend-url", served_mock.url,
            "--out", str(second),
        ])
        assert rc == 0
        assert (first / "trace.json").read_bytes() == (second / "trace.json").read_bytes()
        assert (first / "story.txt").read_bytes() == (second / "story.txt").read_bytes()


class TestCliPrepBbart:
    def test_writes_jsonl(self, tmp_path):
        narratives = tmp_path / "narratives"
        narratives.mkdir()
        for i in range(3):
            narratives / f"n{i}.txt"
            (narratives / f"n{i}.txt").write_text(
                " ".join(f"Event {j} of tale {i} happened." for j in range(10)), "utf-8"
            )
        out = tmp_path / "pairs.jsonl"
        rc = main(["prep-bbart", "--narratives", str(narratives), "--seed", "3", "--out", str(out)])
        assert rc == 0
        rows = [json.loads(line) for line in out.read_text().splitlines()]
        assert len(rows) == 3
        for row in rows:
            assert row["direction"] == "backward"
            assert len(row["target"]) == 2
            assert len(row["source"]) == 2 * row["k"]

    def test_literal_direction(self, tmp_path):
        narratives = tmp_path / "n"
        narratives.mkdir()
        (narratives / "a.txt").write_text(" ".join(f"S{j} went by." for j in range(8)), "utf-8")
        out = tmp_path / "lit.jsonl"
        rc = main(["prep-bbart", "--narratives", str(narratives), "--seed", "1",
                   "--direction", "literal", "--out", str(out)])
        assert rc == 0
        row = json.loads(out.read_text().splitlines()[0])
        assert len(row["source"]) == 2


class TestCliEval:
    def test_entropy_fixture_medians(self, tmp_path, capsys):
        rc = main([
            "eval", "entropy",
            "--responses", str(DATA / "entropy_fixture" / "responses.csv"),
            "--stories", str(DATA / "entropy_fixture" / "stories.json"),
            "--out", str(tmp_path / "report"),
        ])
        assert rc == 0
        out = capsys.readouterr().out
        assert "edgar: entropy index 0.427" in out
        report = json.loads((tmp_path / "report" / "entropy_report.json").read_text("utf-8"))
        assert abs(report["system_indices"]["bbart"] - 0.508) < 5e-4
        csv_text = (tmp_path / "report" / "story_indices.csv").read_text("utf-8")
        assert csv_text.startswith("story_id,system_id,story_index")
        assert len(csv_text.strip().splitlines()) == 34  # header + 33 stories

    def test_subjective_fixture_table(self, tmp_path, capsys):
        rc = main([
            "eval", "subjective",
            "--responses", str(DATA / "subjective_fixture" / "responses.csv"),
            "--pairs", str(DATA / "subjective_fixture" / "pairs.json"),
            "--treatment", "edgar",
            "--out", str(tmp_path / "report"),
        ])
        assert rc == 0
        out = capsys.readouterr().out
        assert "plausible" in out and "31" in out and "0.013" in out
        report = json.loads((tmp_path / "report" / "subjective_report.json").read_text("utf-8"))
        by_dim = {r["dimension"]: r for r in report["results"]}
        assert by_dim["single_plot"]["counts"] == {"bbart": 14, "edgar": 32}

    def test_bad_csv_exits_1(self, tmp_path):
        stories = tmp_path / "stories.json"
        stories.write_text('{"s0": {"system_id": "a", "questions": ["q0"]}}', "utf-8")
        bad = tmp_path / "bad.csv"
        bad.write_text("participant_id,story_id,question_id,answer,presented_at\np,s0,q0,MAYBE,0\n", "utf-8")
        rc = main(["eval", "entropy", "--responses", str(bad), "--stories", str(stories)])
        assert rc == 1


class TestCliTemplates:
    def test_inventory_listing(self, capsys):
        rc = main(["templates", "tf"])
        assert rc == 0
        out = capsys.readouterr().out
        assert out.count("could be removed") >= 3

    def test_instantiation(self, tmp_path, capsys):
        story = tmp_path / "story.txt"
        story.write_text("First thing happened. Second thing happened. Third thing happened.", "utf-8")
        rc = main(["templates", "tf", "--story", str(story), "--slot", "i=0", "--slot", "j=2", "--json"])
        assert rc == 0
        scaffolds = json.loads(capsys.readouterr().out)
        assert any('"Third thing happened." depends on "First thing happened."' in s["text"] for s in scaffolds)

    def test_bad_slots_exit_1(self, tmp_path):
        story = tmp_path / "story.txt"
        story.write_text("One. Two.", "utf-8")
        rc = main(["templates", "tf", "--story", str(story), "--slot", "i=1", "--slot", "j=0"])
        assert rc == 1


class TestMockServeSubprocess:
    def test_prints_bound_port_and_serves(self):
        proc = subprocess.Popen(
            [sys.executable, "-m", "retrogen.cli", "mock-serve", "--port", "0", "--seed", "7", "--vocab", "256"],
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
        )
        try:
            port_line = proc.stdout.readline().strip()
            port = int(port_line)
            assert port > 0
            import requests

            models = requests.get(f"http://127.0.0.1:{port}/v1/models", timeout=10).json()
            ids = {m["model_id"] for m in models}
            assert "mock-causal" in ids
            vocab = next(m["vocab_size"] for m in models if m["model_id"] == "mock-causal")
            assert vocab == 256
        finally:
            proc.terminate()
            proc.wait(timeout=10)

    def test_cross_process_byte_identity(self):
        """A subprocess server and an in-thread server with the same seed
        must answer the same request with identical bytes."""
        import requests

        body = {"model": "mock-causal", "tokens": [3, 1], "include_tokens": [5]}
        proc = subprocess.Popen(
            [sys.executable, "-m", "retrogen.cli", "mock-serve", "--port", "0", "--seed", "7"],
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
        )
        try:
            port = int(proc.stdout.readline().strip())
            from_subprocess = requests.post(f"http://127.0.0.1:{port}/v1/logits", json=body, timeout=10).content
        finally:
            proc.terminate()
            proc.wait(timeout=10)
        with BackendServer(MockBackend(seed=7)) as server:
            in_thread = requests.post(server.url + "/v1/logits", json=body, timeout=10).content
        assert from_subprocess == in_thread
