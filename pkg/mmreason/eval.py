"""Metrics and ablation tables."""
import logging
from decimal import ROUND_HALF_UP, Decimal
from typing import Dict, List, Optional, Sequence, Tuple, Union

import attrs
import pandas as pd

from .data.vocab import split_words
from .exceptions import LengthMismatchError

logger = logging.getLogger(__name__)

Tokens = Union[str, Sequence[str]]

REPORT_COLUMNS = {"rougeL": "RougeL", "accuracy": "Accuracy", "abstain_rate": "Abstain"}


def _in_unit_interval(instance, attribute, value):
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{attribute.name} must lie in [0, 1], got {value}")


def _at_least_one(instance, attribute, value):
    if value < 1:
        raise ValueError(f"{attribute.name} must be at least 1, got {value}")


@attrs.frozen()
class MetricRecord:
    """
    One named metric.

    Args:
        name (str): e.g. 'accuracy' or 'rougeL'.
        value (float): In [0, 1].
        count (int): Number of samples it was computed on, at least 1.
        per_sample (Optional[Tuple[float, ...]]): Values per sample, if kept.
    """

    name: str
    value: float = attrs.field(converter=float, validator=_in_unit_interval)
    count: int = attrs.field(validator=_at_least_one)
    per_sample: Optional[Tuple[float, ...]] = attrs.field(
        default=None, converter=attrs.converters.optional(tuple)
    )

    def to_dict(self) -> Dict:
        return attrs.asdict(self)


def _tokens(text: Tokens) -> List[str]:
    return split_words(text) if isinstance(text, str) else list(text)


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """Length of the longest common subsequence, by dynamic programming."""
    if len(a) == 0 or len(b) == 0:
        return 0
    previous = [0] * (len(b) + 1)
    for token_a in a:
        current = [0]
        for j, token_b in enumerate(b, start=1):
            if token_a == token_b:
                current.append(previous[j - 1] + 1)
            else:
                current.append(max(previous[j], current[j - 1]))
        previous = current
    return previous[-1]


def rouge_l(candidate: Tokens, reference: Tokens) -> float:
    """
    LCS-based F1 between two texts.

    Args:
        candidate (Tokens): Generated text, or its tokens.
        reference (Tokens): Reference text, or its tokens.

    Returns:
        float: 2PR/(P+R) with P = LCS/|candidate| and R = LCS/|reference|;
            0 if either is empty or they share no token.
    """
    cand, ref = _tokens(candidate), _tokens(reference)
    lcs = lcs_length(cand, ref)
    if lcs == 0:
        return 0.0
    precision = lcs / len(cand)
    recall = lcs / len(ref)
    return 2 * precision * recall / (precision + recall)


def mean_rouge_l(
    candidates: Sequence[Tokens], references: Sequence[Tokens]
) -> MetricRecord:
    if len(candidates) != len(references):
        raise LengthMismatchError(
            f"{len(candidates)} candidates for {len(references)} references"
        )
    scores = [rouge_l(c, r) for c, r in zip(candidates, references)]
    value = sum(scores) / max(1, len(scores))
    return MetricRecord("rougeL", value, len(scores), scores)


def accuracy(predictions: Sequence[Optional[int]], golds: Sequence[int]) -> float:
    """
    Fraction of exactly matching answers.

    Args:
        predictions (Sequence[Optional[int]]): Predicted indices; None for an
            abstention, which counts as wrong.
        golds (Sequence[int]): Gold indices.
    """
    if len(predictions) != len(golds):
        raise LengthMismatchError(
            f"{len(predictions)} predictions for {len(golds)} golds"
        )
    if len(golds) == 0:
        raise LengthMismatchError("accuracy of an empty set of predictions")
    correct = sum(1 for p, g in zip(predictions, golds) if p is not None and p == g)
    return correct / len(golds)


def accuracy_record(
    predictions: Sequence[Optional[int]], golds: Sequence[int]
) -> MetricRecord:
    value = accuracy(predictions, golds)
    per_sample = [float(p is not None and p == g) for p, g in zip(predictions, golds)]
    return MetricRecord("accuracy", value, len(golds), per_sample)


def abstain_record(predictions: Sequence[Optional[int]]) -> MetricRecord:
    if len(predictions) == 0:
        raise LengthMismatchError("abstain rate of an empty set of predictions")
    abstained = [float(p is None) for p in predictions]
    return MetricRecord("abstain_rate", sum(abstained) / len(abstained), len(abstained))


def error_breakdown(
    answer_correct: Sequence[bool], rationale_ok: Sequence[bool]
) -> Dict[str, MetricRecord]:
    """
    Split answers by correctness and by soundness of their rationale.

    Args:
        answer_correct (Sequence[bool]): Was the answer right, per sample.
        rationale_ok (Sequence[bool]): Did the rationale state only true facts.

    Returns:
        Dict[str, MetricRecord]: Shares of the four cells 'right_sound',
            'right_hallucinated', 'wrong_sound' and 'wrong_hallucinated', and
            'hallucination_share_of_errors', the share of wrong answers that
            come with a hallucinated rationale (left out without errors).
    """
    if len(answer_correct) != len(rationale_ok):
        raise LengthMismatchError(
            f"{len(answer_correct)} answers for {len(rationale_ok)} rationales"
        )
    n = len(answer_correct)
    if n == 0:
        raise LengthMismatchError("error breakdown of an empty set")
    cells = {
        "right_sound": (True, True),
        "right_hallucinated": (True, False),
        "wrong_sound": (False, True),
        "wrong_hallucinated": (False, False),
    }
    result = {}
    for name, (right, sound) in cells.items():
        hits = sum(
            1
            for a, r in zip(answer_correct, rationale_ok)
            if a == right and r == sound
        )
        result[name] = MetricRecord(name, hits / n, n)
    errors = [r for a, r in zip(answer_correct, rationale_ok) if not a]
    if len(errors) > 0:
        share = sum(1 for r in errors if not r) / len(errors)
        result["hallucination_share_of_errors"] = MetricRecord(
            "hallucination_share_of_errors", share, len(errors)
        )
    return result


def correction_rate(
    baseline_hallucinated_errors: Sequence[bool], improved_correct: Sequence[bool]
) -> Optional[MetricRecord]:
    """
    How many of a baseline's hallucination errors another variant fixes.

    Args:
        baseline_hallucinated_errors (Sequence[bool]): Per sample, was the
            baseline wrong with a hallucinated rationale.
        improved_correct (Sequence[bool]): Per sample, is the other variant right.

    Returns:
        Optional[MetricRecord]: The fraction of the baseline's hallucination
            errors answered correctly; None if the baseline has none.
    """
    if len(baseline_hallucinated_errors) != len(improved_correct):
        raise LengthMismatchError(
            f"{len(baseline_hallucinated_errors)} baseline flags for "
            f"{len(improved_correct)} improved flags"
        )
    fixed = [c for e, c in zip(baseline_hallucinated_errors, improved_correct) if e]
    if len(fixed) == 0:
        return None
    return MetricRecord("correction_rate", sum(fixed) / len(fixed), len(fixed))


def round_half_up(value: float, digits: int = 2) -> str:
    """Format with `digits` decimals, rounding halves away from zero."""
    quantum = Decimal(1).scaleb(-digits)
    return str(Decimal(repr(float(value))).quantize(quantum, rounding=ROUND_HALF_UP))


def _summarize(values: pd.Series) -> str:
    values = values.dropna()
    if len(values) == 0:
        return "-"
    if len(values) == 1:
        return round_half_up(values.iloc[0])
    return f"{round_half_up(values.mean())} ± {round_half_up(values.std(ddof=1))}"


def ablation_report(
    results: Sequence[Tuple[str, Sequence[MetricRecord]]], tablefmt: str = "simple"
) -> str:
    """
    Tabulate metrics, one row per variant.

    Several results for the same variant (e.g. seeds) are shown as
    mean ± standard deviation. Rows keep the order in which variants first
    appear; missing metrics show as '-'.

    Args:
        results (Sequence[Tuple[str, Sequence[MetricRecord]]]): Variant name
            and its metric records, per run.
        tablefmt (str): Any `tabulate` format; 'simple' for plain text,
            'github' for markdown.

    Returns:
        str: The table.
    """
    if len(results) == 0:
        raise ValueError("ablation_report needs at least one variant")
    rows = []
    for variant, records in results:
        row: Dict[str, Optional[float]] = {"variant": variant}
        row.update({name: None for name in REPORT_COLUMNS})
        row.update({r.name: r.value for r in records if r.name in REPORT_COLUMNS})
        rows.append(row)
    frame = pd.DataFrame(rows, columns=["variant", *REPORT_COLUMNS])
    frame[list(REPORT_COLUMNS)] = frame[list(REPORT_COLUMNS)].astype(float)

    table = (
        frame.groupby("variant", sort=False)[list(REPORT_COLUMNS)]
        .agg(_summarize)
        .reset_index()
        .rename(columns={"variant": "Variant", **REPORT_COLUMNS})
    )
    return table.to_markdown(index=False, tablefmt=tablefmt, disable_numparse=True)
