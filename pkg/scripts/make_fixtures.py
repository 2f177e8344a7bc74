#!/usr/bin/env python3
"""Build the synthetic response fixtures under tests/data/.

Entropy fixture: three systems with 11 stories x 7 questions each, panels
of 50 annotators per story. Per-question T/F counts are searched (meet in
the middle over achievable entropy values) so each system's median story
index lands on its target to within 5e-5:

    edgar-like 0.427, bbart-like 0.508, human-like 0.26

Subjective fixture: 46 pairings with per-dimension winner counts matching
the reference preference table (31/32/29/31/31 of 46).
"""

import bisect
import csv
import itertools
import json
import math
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
ENTROPY_DIR = ROOT / "tests" / "data" / "entropy_fixture"
SUBJ_DIR = ROOT / "tests" / "data" / "subjective_fixture"

PANEL = 50
TARGETS = {"edgar": 0.427, "bbart": 0.508, "human": 0.26}
WIN_COUNTS = {"plausible": 31, "single_plot": 32, "makes_sense": 29, "quality": 31, "enjoyable": 31}


def h_bits(t: int, n: int) -> float:
    p = t / n
    h = 0.0
    if p > 0:
        h -= p * math.log2(p)
    if p < 1:
        h -= (1 - p) * math.log2(1 - p)
    return h


def best_counts_for_target(target: float) -> tuple[list[int], float]:
    """7 T-counts (panel 50) whose mean question entropy is closest to target."""
    counts = list(range(0, PANEL // 2 + 1))  # entropy is symmetric; use t <= 25
    values = [(h_bits(t, PANEL), t) for t in counts]
    triples = [(sum(v[0] for v in c), tuple(v[1] for v in c))
               for c in itertools.combinations_with_replacement(values, 3)]
    quads = [(sum(v[0] for v in c), tuple(v[1] for v in c))
             for c in itertools.combinations_with_replacement(values, 4)]
    quads.sort(key=lambda x: x[0])
    quad_sums = [q[0] for q in quads]
    want = target * 7
    best = None
    for s3, t3 in triples:
        idx = bisect.bisect_left(quad_sums, want - s3)
        for j in (idx - 1, idx, idx + 1):
            if 0 <= j < len(quads):
                total = s3 + quads[j][0]
                err = abs(total - want)
                if best is None or err < best[0]:
                    best = (err, t3 + quads[j][1])
    assert best is not None
    ts = sorted(best[1])
    achieved = sum(h_bits(t, PANEL) for t in ts) / 7
    return list(ts), achieved


def story_plan(system: str, target: float) -> list[tuple[str, list[int], float]]:
    """11 stories: 5 below the median target, the median story, 5 above."""
    plan = []
    offsets = [-0.15, -0.12, -0.09, -0.06, -0.03, 0.0, 0.03, 0.06, 0.09, 0.12, 0.15]
    for idx, off in enumerate(offsets):
        goal = min(0.995, max(0.02, target + off))
        counts, achieved = best_counts_for_target(goal if off else target)
        plan.append((f"{system}-story-{idx:02d}", counts, achieved))
    achieved_median = sorted(p[2] for p in plan)[5]
    assert abs(achieved_median - target) < 5e-5, (system, achieved_median)
    return plan


def write_entropy_fixture() -> None:
    ENTROPY_DIR.mkdir(parents=True, exist_ok=True)
    stories = {}
    rows = []
    for system, target in TARGETS.items():
        for story_id, counts, achieved in story_plan(system, target):
            qids = [f"{story_id}-q{i}" for i in range(7)]
            stories[story_id] = {"system_id": system, "questions": qids}
            for qi, t_count in enumerate(counts):
                for p in range(PANEL):
                    rows.append({
                        "participant_id": f"{story_id}-annotator-{p:02d}",
                        "story_id": story_id,
                        "question_id": qids[qi],
                        "answer": "T" if p < t_count else "F",
                        "presented_at": qi,
                    })
    with open(ENTROPY_DIR / "responses.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=["participant_id", "story_id", "question_id", "answer", "presented_at"])
        writer.writeheader()
        writer.writerows(rows)
    (ENTROPY_DIR / "stories.json").write_text(json.dumps(stories, indent=2, sort_keys=True) + "\n", "utf-8")
    print(f"entropy fixture: {len(rows)} responses, {len(stories)} stories")


def write_subjective_fixture() -> None:
    SUBJ_DIR.mkdir(parents=True, exist_ok=True)
    pairs = {
        f"pair{i:02d}": {"A": "edgar", "B": "bbart",
                         "story_A": f"edgar-story-{i % 11:02d}", "story_B": f"bbart-story-{i % 11:02d}"}
        for i in range(46)
    }
    rows = []
    for dimension, wins in WIN_COUNTS.items():
        for i in range(46):
            rows.append({
                "participant_id": f"worker{i:02d}",
                "pair_id": f"pair{i:02d}",
                "dimension": dimension,
                "choice": "A" if i < wins else "B",
            })
    with open(SUBJ_DIR / "responses.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=["participant_id", "pair_id", "dimension", "choice"])
        writer.writeheader()
        writer.writerows(rows)
    (SUBJ_DIR / "pairs.json").write_text(json.dumps(pairs, indent=2, sort_keys=True) + "\n", "utf-8")
    print(f"subjective fixture: {len(rows)} records, {len(pairs)} pairs")


def main() -> None:
    write_entropy_fixture()
    write_subjective_fixture()
    # sanity: recompute the medians through the real harness
    sys.path.insert(0, str(ROOT / "src"))
    from retrogen.evals.entropy import aggregate, load_responses_csv, load_stories_manifest

    stories = load_stories_manifest(ENTROPY_DIR / "stories.json")
    responses = load_responses_csv(ENTROPY_DIR / "responses.csv", stories)
    report = aggregate(responses)
    for system, index in sorted(report.system_indices.items()):
        print(f"  {system}: median index {index:.6f} (target {TARGETS[system]})")
    gap = (report.system_indices["bbart"] - report.system_indices["edgar"]) / report.system_indices["bbart"]
    print(f"  relative gap: {100 * gap:.3f}% (target 15.9)")


if __name__ == "__main__":
    main()
