import numpy as np
import pytest
from mmreason.eval import (
    MetricRecord,
    ablation_report,
    abstain_record,
    accuracy,
    accuracy_record,
    correction_rate,
    error_breakdown,
    lcs_length,
    mean_rouge_l,
    round_half_up,
    rouge_l,
)
from mmreason.exceptions import LengthMismatchError


def lcs_table(a, b):
    """Full-table LCS, independent of the rolling implementation."""
    table = np.zeros((len(a) + 1, len(b) + 1), dtype=int)
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                table[i, j] = table[i - 1, j - 1] + 1
            else:
                table[i, j] = max(table[i - 1, j], table[i, j - 1])
    return int(table[-1, -1])


class TestRougeL:
    def test_identical(self):
        assert rouge_l("There are 3 red patches.", "There are 3 red patches.") == 1.0

    def test_disjoint(self):
        assert rouge_l("a b c", "d e f") == 0.0

    def test_partial(self):
        assert lcs_length("a b c d".split(), "a c d e".split()) == 3
        assert rouge_l("a b c d", "a c d e") == pytest.approx(0.75)

    def test_empty(self):
        assert rouge_l("", "a b") == 0.0
        assert rouge_l("", "") == 0.0

    def test_punctuation_is_a_token(self):
        assert rouge_l("The answer is (B).", "The answer is ( B ) .") == 1.0

    def test_oracle_and_symmetry(self, rng):
        for _ in range(1000):
            a = list(rng.integers(0, 6, size=rng.integers(0, 31)).astype(str))
            b = list(rng.integers(0, 6, size=rng.integers(0, 31)).astype(str))
            lcs = lcs_table(a, b)
            assert lcs_length(a, b) == lcs
            expected = 0.0 if lcs == 0 else 2 * lcs / (len(a) + len(b))
            assert rouge_l(a, b) == pytest.approx(expected, abs=1e-12)
            assert rouge_l(a, b) == pytest.approx(rouge_l(b, a), abs=1e-12)

    def test_mean(self):
        record = mean_rouge_l(["a b", "c"], ["a b", "d"])
        assert record.name == "rougeL"
        assert record.value == pytest.approx(0.5)
        assert record.count == 2
        assert record.per_sample == (1.0, 0.0)
        with pytest.raises(LengthMismatchError):
            mean_rouge_l(["a"], [])


class TestAccuracy:
    def test_all_correct(self):
        assert accuracy([0, 1, 2], [0, 1, 2]) == 1.0

    def test_abstention_is_wrong(self):
        assert accuracy([0, None], [0, 1]) == 0.5

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatchError):
            accuracy([0], [0, 1])
        with pytest.raises(LengthMismatchError):
            accuracy([], [])

    def test_permutation_invariant(self, rng):
        preds = list(rng.integers(0, 4, size=50))
        golds = list(rng.integers(0, 4, size=50))
        order = rng.permutation(50)
        assert accuracy(preds, golds) == accuracy(
            [preds[i] for i in order], [golds[i] for i in order]
        )

    def test_random_guessing(self, rng):
        preds = rng.integers(0, 4, size=10_000)
        golds = rng.integers(0, 4, size=10_000)
        assert accuracy(list(preds), list(golds)) == pytest.approx(0.25, abs=0.02)

    def test_records(self):
        record = accuracy_record([0, None, 2], [0, 1, 1])
        assert record.value == pytest.approx(1 / 3)
        assert record.per_sample == (1.0, 0.0, 0.0)
        assert abstain_record([0, None, 2]).value == pytest.approx(1 / 3)


def test_metric_record_bounds():
    with pytest.raises(ValueError):
        MetricRecord("accuracy", 1.5, 1)
    with pytest.raises(ValueError):
        MetricRecord("accuracy", 0.5, 0)


class TestErrorAnalysis:
    def test_breakdown(self):
        result = error_breakdown(
            [True, True, False, False, False], [True, False, True, False, False]
        )
        assert result["right_sound"].value == pytest.approx(0.2)
        assert result["right_hallucinated"].value == pytest.approx(0.2)
        assert result["wrong_sound"].value == pytest.approx(0.2)
        assert result["wrong_hallucinated"].value == pytest.approx(0.4)
        assert result["hallucination_share_of_errors"].value == pytest.approx(2 / 3)
        assert result["hallucination_share_of_errors"].count == 3

    def test_no_errors(self):
        result = error_breakdown([True, True], [True, False])
        assert "hallucination_share_of_errors" not in result

    def test_correction_rate(self):
        record = correction_rate([True, True, False, True], [True, False, False, True])
        assert record.value == pytest.approx(2 / 3)
        assert correction_rate([False, False], [True, True]) is None


class TestReport:
    def rows(self, text):
        return text.splitlines()[2:]

    def test_single_variant(self):
        report = ablation_report(
            [("one:QCM_A (vision)", [MetricRecord("accuracy", 0.5, 4)])]
        )
        header = report.splitlines()[0].split()
        assert header == ["Variant", "RougeL", "Accuracy", "Abstain"]
        rows = self.rows(report)
        assert len(rows) == 1
        assert rows[0].split() == ["one:QCM_A", "(vision)", "-", "0.50", "-"]

    def test_order_follows_input(self):
        results = [
            ("b", [MetricRecord("accuracy", 0.1, 1)]),
            ("a", [MetricRecord("accuracy", 0.2, 1)]),
            ("c", [MetricRecord("accuracy", 0.3, 1)]),
        ]
        rows = self.rows(ablation_report(results))
        assert [row.split()[0] for row in rows] == ["b", "a", "c"]

    def test_half_up_rounding(self):
        assert round_half_up(0.125) == "0.13"
        assert round_half_up(0.675) == "0.68"
        assert round_half_up(0.5) == "0.50"
        report = ablation_report([("v", [MetricRecord("rougeL", 0.125, 1)])])
        assert self.rows(report)[0].split()[1] == "0.13"

    def test_mean_and_sd_over_seeds(self):
        results = [
            ("v", [MetricRecord("accuracy", value, 10)]) for value in (0.2, 0.4, 0.6)
        ]
        rows = self.rows(ablation_report(results))
        assert len(rows) == 1
        assert "0.40 ± 0.20" in rows[0]

    def test_markdown(self):
        results = [("v", [MetricRecord("accuracy", 1.0, 1)])]
        report = ablation_report(results, tablefmt="github")
        assert report.splitlines()[0].startswith("| Variant")

    def test_needs_a_variant(self):
        with pytest.raises(ValueError):
            ablation_report([])
