"""Pairwise forced-choice harness: tally preferences across the five
subjective dimensions and compute exact one-tailed binomial significance
against the fair-coin null."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

from ..errors import ContractViolation, IngestionError

DIMENSIONS = ("plausible", "single_plot", "makes_sense", "quality", "enjoyable")


@dataclass(frozen=True)
class PairInfo:
    pair_id: str
    system_a: str
    system_b: str
    story_a: str
    story_b: str


@dataclass(frozen=True)
class PairwiseRecord:
    participant_id: str
    pair_id: str
    dimension: str
    chosen_system_id: str

    def __post_init__(self):
        if self.dimension not in DIMENSIONS:
            raise ContractViolation(f"unknown dimension: {self.dimension}")


@dataclass(frozen=True)
class DimensionResult:
    dimension: str
    counts: Mapping[str, int]
    treatment: str
    wins: int
    total: int
    p_value: float


@dataclass(frozen=True)
class PairwiseReport:
    treatment: str
    results: tuple[DimensionResult, ...]

    def to_dict(self) -> dict:
        return {
            "treatment": self.treatment,
            "results": [
                {
                    "dimension": r.dimension,
                    "counts": dict(r.counts),
                    "wins": r.wins,
                    "total": r.total,
                    "p_value": r.p_value,
                }
                for r in self.results
            ],
        }


def load_pairs_manifest(path: str | Path) -> dict[str, PairInfo]:
    data = json.loads(Path(path).read_text("utf-8"))
    pairs = {}
    for pair_id, info in data.items():
        pairs[pair_id] = PairInfo(
            pair_id=pair_id,
            system_a=info["A"],
            system_b=info["B"],
            story_a=info.get("story_A", ""),
            story_b=info.get("story_B", ""),
        )
    return pairs


def load_records_csv(path: str | Path, pairs: Mapping[str, PairInfo]) -> list[PairwiseRecord]:
    """Records CSV: participant_id,pair_id,dimension,choice with choice in {A,B}."""
    bad: list[tuple[int, str]] = []
    records: list[PairwiseRecord] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = {"participant_id", "pair_id", "dimension", "choice"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise IngestionError(f"records file must have columns {sorted(required)}")
        for lineno, row in enumerate(reader, start=2):
            pair = pairs.get(row["pair_id"].strip())
            if pair is None:
                bad.append((lineno, f"unknown pair_id {row['pair_id']!r}"))
                continue
            choice = (row["choice"] or "").strip()
            if choice not in ("A", "B"):
                bad.append((lineno, f"choice must be A or B, got {choice!r}"))
                continue
            dimension = row["dimension"].strip()
            if dimension not in DIMENSIONS:
                bad.append((lineno, f"unknown dimension {dimension!r}"))
                continue
            records.append(PairwiseRecord(
                participant_id=row["participant_id"].strip(),
                pair_id=pair.pair_id,
                dimension=dimension,
                chosen_system_id=pair.system_a if choice == "A" else pair.system_b,
            ))
    if bad:
        raise IngestionError(f"{len(bad)} bad record rows", rows=bad)
    return records


def tally(records: Sequence[PairwiseRecord], pairs: Mapping[str, PairInfo]) -> dict[str, dict[str, int]]:
    """Exact per-dimension, per-system counts.

    Records whose chosen system is not one of the pair's two systems are
    collected and reported as an ingestion error.
    """
    bad: list[tuple[int, str]] = []
    counts: dict[str, dict[str, int]] = {d: {} for d in DIMENSIONS}
    for i, record in enumerate(records):
        pair = pairs.get(record.pair_id)
        if pair is None:
            bad.append((i, f"unknown pair_id {record.pair_id!r}"))
            continue
        if record.chosen_system_id not in (pair.system_a, pair.system_b):
            bad.append((i, f"chosen system {record.chosen_system_id!r} not in pair {record.pair_id!r}"))
            continue
        per_system = counts[record.dimension]
        per_system[record.chosen_system_id] = per_system.get(record.chosen_system_id, 0) + 1
    if bad:
        raise IngestionError(f"{len(bad)} unacceptable records", rows=bad)
    return counts


def binomial_p_one_tailed(wins: int, total: int) -> float:
    """Exact P(X >= wins | n=total, p=1/2).

    The tail is summed with exact integer binomial coefficients; the only
    floating-point step is the final division.
    """
    if total < 1:
        raise ContractViolation("total must be >= 1")
    if not 0 <= wins <= total:
        raise ContractViolation("wins must be within [0, total]")
    tail = sum(math.comb(total, k) for k in range(wins, total + 1))
    return float(Fraction(tail, 2**total))


def report(counts: Mapping[str, Mapping[str, int]], treatment: str) -> PairwiseReport:
    """Attach the one-tailed p-value for the treatment system's wins to
    every dimension that received any responses."""
    results = []
    for dimension in DIMENSIONS:
        per_system = counts.get(dimension, {})
        total = sum(per_system.values())
        if total == 0:
            continue
        wins = per_system.get(treatment, 0)
        results.append(DimensionResult(
            dimension=dimension,
            counts=dict(sorted(per_system.items())),
            treatment=treatment,
            wins=wins,
            total=total,
            p_value=binomial_p_one_tailed(wins, total),
        ))
    return PairwiseReport(treatment=treatment, results=tuple(results))


def format_table(rep: PairwiseReport) -> str:
    """Plain-text table: one row per dimension, counts per system, p-value."""
    systems: list[str] = []
    for r in rep.results:
        for s in r.counts:
            if s not in systems:
                systems.append(s)
    systems.sort(key=lambda s: (s != rep.treatment, s))  # treatment first
    header = ["Question"] + systems + ["p-value"]
    rows = [header]
    for r in rep.results:
        rows.append(
            [r.dimension]
            + [str(r.counts.get(s, 0)) for s in systems]
            + [f"{r.p_value:.3f}"]
        )
    widths = [max(len(row[c]) for row in rows) for c in range(len(header))]
    lines = []
    for i, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(widths[c]) for c, cell in enumerate(row)).rstrip())
        if i == 0:
            lines.append("-" * (sum(widths) + 2 * (len(widths) - 1)))
    return "\n".join(lines)
