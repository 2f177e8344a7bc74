#!/usr/bin/env python3
"""Regenerate the frozen golden run traces under tests/data/golden/.

Run from the repository root after any intentional behavior change:

    python scripts/freeze_goldens.py

The test suite compares freshly generated traces byte-for-byte against
these files, so regenerating them is an explicit, reviewed act.
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
GOLDEN = ROOT / "tests" / "data" / "golden"

sys.path.insert(0, str(ROOT / "src"))

from retrogen.answers import load_ban_list  # noqa: E402
from retrogen.backend.mock import MockBackend  # noqa: E402
from retrogen.backend.server import BackendServer  # noqa: E402
from retrogen.pipeline import bbart_generate, edgar_generate  # noqa: E402
from retrogen.store import atomic_write_text, canonical_json, load_corpus  # noqa: E402
from retrogen.story import GenerationConfig, render  # noqa: E402
from retrogen.trace import run_document  # noqa: E402

API_CONFIG = GenerationConfig(
    seed=7, iterations=3, beam_width=5, max_length=12,
    question_budget=4, window_size=5,
)

CLI_CONFIG = {
    "seed": 7,
    "iterations": 3,
    "beam_width": 6,
    "max_length": 16,
    "question_budget": 4,
    "window_size": 5,
}


def main() -> None:
    GOLDEN.mkdir(parents=True, exist_ok=True)
    corpus = load_corpus(ROOT / "tests" / "data" / "corpus")
    ending = (ROOT / "tests" / "data" / "ending.txt").read_text("utf-8").strip()
    backend = MockBackend(seed=7)

    state, trace = edgar_generate(ending, corpus, backend, API_CONFIG, ban_phrases=load_ban_list())
    doc = run_document(trace, API_CONFIG, ending, render(state).split("\n"))
    atomic_write_text(GOLDEN / "edgar_trace.json", canonical_json(doc))
    print("wrote edgar_trace.json")

    state, trace = bbart_generate(ending, backend, API_CONFIG)
    doc = run_document(trace, API_CONFIG, ending, render(state).split("\n"))
    atomic_write_text(GOLDEN / "bbart_trace.json", canonical_json(doc))
    print("wrote bbart_trace.json")

    atomic_write_text(GOLDEN / "cli_config.json", json.dumps(CLI_CONFIG, indent=2) + "\n")
    with BackendServer(MockBackend(seed=7)) as server:
        with tempfile.TemporaryDirectory() as tmp:
            out = Path(tmp) / "run"
            cmd = [
                sys.executable, "-m", "retrogen.cli", "generate", "edgar",
                "--ending", str(ROOT / "tests" / "data" / "ending.txt"),
                "--corpus", str(ROOT / "tests" / "data" / "corpus"),
                "--config", str(GOLDEN / "cli_config.json"),
                "--seed", "7", "--iterations", "3",
                "--backend-url", server.url,
                "--out", str(out),
            ]
            subprocess.run(cmd, check=True, cwd=ROOT)
            atomic_write_text(GOLDEN / "cli_trace.json", (out / "trace.json").read_text("utf-8"))
            atomic_write_text(GOLDEN / "cli_story.txt", (out / "story.txt").read_text("utf-8"))
    print("wrote cli_trace.json, cli_story.txt")


if __name__ == "__main__":
    main()
