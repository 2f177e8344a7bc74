"""Pairwise-preference harness tests: exact binomial tail, tallying, and
the report layout."""

import math
from fractions import Fraction

import pytest

from retrogen.errors import ContractViolation, IngestionError
from retrogen.evals.subjective import (
    DIMENSIONS,
    PairInfo,
    PairwiseRecord,
    binomial_p_one_tailed,
    format_table,
    load_pairs_manifest,
    load_records_csv,
    report,
    tally,
)


def pascal_tail_oracle(wins: int, total: int) -> float:
    """Big-integer tail via the additive Pascal recurrence (independent of
    math.comb)."""
    row = [1]
    for _ in range(total):
        row = [1] + [row[i] + row[i + 1] for i in range(len(row) - 1)] + [1]
    return float(Fraction(sum(row[wins:]), 2**total))


# frozen from the big-integer oracle
TABLE2_CASES = [
    (31, 46, 0.012948040896617385, 0.013),
    (32, 46, 0.005675795718389054, 0.005),
    (29, 46, 0.051902677752053705, 0.052),
]


class TestBinomial:
    def test_trivial_tails(self):
        assert binomial_p_one_tailed(0, 5) == 1.0
        assert binomial_p_one_tailed(1, 1) == 0.5
        assert binomial_p_one_tailed(5, 5) == 2.0**-5

    @pytest.mark.parametrize("wins,total,exact,reported", TABLE2_CASES)
    def test_reference_counts(self, wins, total, exact, reported):
        p = binomial_p_one_tailed(wins, total)
        assert p == pytest.approx(exact, abs=1e-15)
        assert abs(p - reported) <= 0.01
        assert p == pascal_tail_oracle(wins, total)

    def test_oracle_agreement_sweep(self):
        for total in (1, 2, 7, 20, 46):
            for wins in range(total + 1):
                assert binomial_p_one_tailed(wins, total) == pascal_tail_oracle(wins, total)

    def test_non_increasing_in_wins(self):
        values = [binomial_p_one_tailed(w, 30) for w in range(31)]
        assert values == sorted(values, reverse=True)

    def test_symmetric_counts_not_significant(self):
        assert binomial_p_one_tailed(23, 46) > 0.4

    def test_bounds_validated(self):
        with pytest.raises(ContractViolation):
            binomial_p_one_tailed(5, 4)
        with pytest.raises(ContractViolation):
            binomial_p_one_tailed(0, 0)


def _pairs(n=46):
    return {f"pair{i}": PairInfo(f"pair{i}", "edgar", "bbart", f"eA{i}", f"bB{i}") for i in range(n)}


def _table2_records():
    """46 pairings; per-dimension edgar wins matching the reference table."""
    wins = {"plausible": 31, "single_plot": 32, "makes_sense": 29, "quality": 31, "enjoyable": 31}
    records = []
    for dim, w in wins.items():
        for i in range(46):
            records.append(PairwiseRecord(f"part{i}", f"pair{i}", dim, "edgar" if i < w else "bbart"))
    return records


class TestTally:
    def test_empty_all_zero(self):
        counts = tally([], _pairs())
        assert all(not v for v in counts.values())

    def test_reference_table_counts(self):
        counts = tally(_table2_records(), _pairs())
        assert counts["plausible"] == {"edgar": 31, "bbart": 15}
        assert counts["single_plot"] == {"edgar": 32, "bbart": 14}
        assert counts["makes_sense"] == {"edgar": 29, "bbart": 17}

    def test_permutation_invariant(self):
        records = _table2_records()
        assert tally(records, _pairs()) == tally(list(reversed(records)), _pairs())

    def test_foreign_system_rejected(self):
        records = [PairwiseRecord("p", "pair0", "quality", "roc")]
        with pytest.raises(IngestionError):
            tally(records, _pairs())

    def test_unknown_pair_rejected(self):
        records = [PairwiseRecord("p", "ghost", "quality", "edgar")]
        with pytest.raises(IngestionError):
            tally(records, _pairs())


class TestReport:
    def test_reference_table_p_values(self):
        rep = report(tally(_table2_records(), _pairs()), treatment="edgar")
        by_dim = {r.dimension: r for r in rep.results}
        assert by_dim["plausible"].p_value == pytest.approx(0.013, abs=0.01)
        assert by_dim["single_plot"].p_value == pytest.approx(0.005, abs=0.01)
        assert by_dim["makes_sense"].p_value == pytest.approx(0.052, abs=0.01)
        assert max(r.p_value for r in rep.results) <= 0.052 + 1e-12

    def test_row_per_dimension(self):
        rep = report(tally(_table2_records(), _pairs()), treatment="edgar")
        assert len(rep.results) == len(DIMENSIONS)

    def test_counts_sum_to_total(self):
        rep = report(tally(_table2_records(), _pairs()), treatment="edgar")
        for r in rep.results:
            assert sum(r.counts.values()) == r.total == 46

    def test_table_layout(self):
        rep = report(tally(_table2_records(), _pairs()), treatment="edgar")
        table = format_table(rep)
        lines = table.splitlines()
        assert lines[0].split()[:3] == ["Question", "edgar", "bbart"]
        assert any(line.startswith("plausible") and "31" in line and "0.013" in line for line in lines)


class TestIngestionFiles:
    def test_round_trip(self, tmp_path):
        pairs_path = tmp_path / "pairs.json"
        pairs_path.write_text(
            '{"p0": {"A": "edgar", "B": "bbart", "story_A": "x", "story_B": "y"}}', encoding="utf-8"
        )
        csv_path = tmp_path / "records.csv"
        csv_path.write_text(
            "participant_id,pair_id,dimension,choice\n"
            "w1,p0,plausible,A\nw1,p0,quality,B\n",
            encoding="utf-8",
        )
        pairs = load_pairs_manifest(pairs_path)
        records = load_records_csv(csv_path, pairs)
        assert records[0].chosen_system_id == "edgar"
        assert records[1].chosen_system_id == "bbart"

    def test_bad_rows_listed(self, tmp_path):
        pairs_path = tmp_path / "pairs.json"
        pairs_path.write_text('{"p0": {"A": "a", "B": "b"}}', encoding="utf-8")
        csv_path = tmp_path / "records.csv"
        csv_path.write_text(
            "participant_id,pair_id,dimension,choice\n"
            "w1,ghost,plausible,A\n"
            "w1,p0,plausible,C\n"
            "w1,p0,nonsense,A\n",
            encoding="utf-8",
        )
        with pytest.raises(IngestionError) as e:
            load_records_csv(csv_path, load_pairs_manifest(pairs_path))
        assert [row[0] for row in e.value.rows] == [2, 3, 4]
