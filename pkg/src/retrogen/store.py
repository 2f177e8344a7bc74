"""Corpus loading, run persistence, and report emission.

All file writes are atomic (write to a temp name in the target directory,
then rename), so a crash never leaves a partial file. JSON output is
canonical (sorted keys, fixed indentation), so identical runs produce
byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from .answers import ReferenceDoc
from .errors import ConfigurationError
from .evals.entropy import EntropyReport
from .evals.subjective import PairwiseReport, format_table


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def atomic_write_text(path: str | Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.chmod(tmp, 0o644)  # mkstemp defaults to 0600
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
    return path


def atomic_write_json(path: str | Path, obj) -> Path:
    return atomic_write_text(path, canonical_json(obj))


def load_corpus(directory: str | Path) -> list[ReferenceDoc]:
    """Every *.txt file in the directory, in sorted filename order (which
    fixes document indexing across platforms)."""
    directory = Path(directory)
    if not directory.is_dir():
        raise ConfigurationError(f"corpus directory not found: {directory}")
    docs = []
    for path in sorted(directory.glob("*.txt")):
        try:
            text = path.read_text("utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            raise ConfigurationError(f"unreadable corpus file {path}: {exc}") from exc
        if text.strip():
            docs.append(ReferenceDoc(doc_id=path.name, text=text.strip(), source_path=str(path)))
    if not docs:
        raise ConfigurationError(f"corpus directory has no non-empty .txt files: {directory}")
    return docs


def load_narratives(directory: str | Path) -> list[tuple[str, str]]:
    return [(doc.doc_id, doc.text) for doc in load_corpus(directory)]


def corpus_fingerprint(docs: Sequence[ReferenceDoc]) -> str:
    """Stable content hash over (filename, bytes) pairs in sorted order."""
    h = hashlib.sha256()
    for doc in sorted(docs, key=lambda d: d.doc_id):
        h.update(doc.doc_id.encode("utf-8"))
        h.update(b"\x00")
        h.update(doc.text.encode("utf-8"))
        h.update(b"\x00")
    return h.hexdigest()


@dataclass
class RunManifest:
    """Invocation metadata: enough to re-execute the run exactly."""

    config: dict
    backend_url: str
    models: dict
    corpus_fingerprint: str | None = None
    run_id: str = field(default_factory=lambda: str(uuid.uuid4()))
    created_at: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    outputs: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "created_at": self.created_at,
            "config": self.config,
            "backend": {"url": self.backend_url, "models": self.models},
            "corpus_fingerprint": self.corpus_fingerprint,
            "outputs": self.outputs,
        }


def persist_run(out_dir: str | Path, manifest: RunManifest, run_doc: dict, story_text: str) -> dict:
    """Write trace.json (the deterministic run document), story.txt, and
    manifest.json. Returns the path map (also recorded in the manifest)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "trace": str(out_dir / "trace.json"),
        "story": str(out_dir / "story.txt"),
        "manifest": str(out_dir / "manifest.json"),
    }
    atomic_write_json(paths["trace"], run_doc)
    atomic_write_text(paths["story"], story_text + "\n")
    manifest.outputs = paths
    atomic_write_json(paths["manifest"], manifest.to_dict())
    return paths


def write_jsonl(path: str | Path, records: Sequence[dict]) -> Path:
    lines = [json.dumps(r, sort_keys=True, ensure_ascii=False) for r in records]
    return atomic_write_text(path, "\n".join(lines) + ("\n" if lines else ""))


def emit_entropy_report(report: EntropyReport, out_dir: str | Path) -> dict:
    """JSON report plus a per-story CSV of indices for box-plot rendering."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / "entropy_report.json"
    csv_path = out_dir / "story_indices.csv"
    atomic_write_json(json_path, report.to_dict())
    rows = ["story_id,system_id,story_index"]
    for story_id in sorted(report.story_indices):
        rows.append(f"{story_id},{report.story_systems[story_id]},{report.story_indices[story_id]!r}")
    atomic_write_text(csv_path, "\n".join(rows) + "\n")
    return {"json": str(json_path), "csv": str(csv_path)}


def emit_subjective_report(report: PairwiseReport, out_dir: str | Path) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / "subjective_report.json"
    table_path = out_dir / "subjective_table.txt"
    atomic_write_json(json_path, report.to_dict())
    atomic_write_text(table_path, format_table(report) + "\n")
    return {"json": str(json_path), "table": str(table_path)}
