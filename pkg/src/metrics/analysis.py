import logging
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from constants.config import DEFAULT_PROFILE_MARGIN, LOSS_CONVERGENCE_THRESHOLD
from metrics.confusion import ConfusionMatrix, MetricsError, accuracy


class PairProfile(Enum):
    TP_DOMINANT = "tp_dominant"
    TN_DOMINANT = "tn_dominant"
    BALANCED = "balanced"


class Trend(Enum):
    IMPROVING = "improving"
    NOT_IMPROVING = "not_improving"
    NOT_APPLICABLE = "not_applicable"


@dataclass(frozen=True)
class ComparisonRow:
    model: str
    correct: int
    total: int
    accuracy: float
    # Accuracy difference against the first row.
    delta: float


@dataclass(frozen=True)
class LearningCurvePoint:
    train_size: int
    matrix: ConfusionMatrix
    fn_rate: float

    @classmethod
    def from_matrix(cls, train_size, matrix):
        if matrix.total() == 0:
            raise MetricsError(f"empty confusion matrix at training size {train_size}")
        return cls(train_size, matrix, matrix.fn / matrix.total())


def language_pair_profile(matrices, margin=DEFAULT_PROFILE_MARGIN):
    """Classify each language pair by whether correct EDIT or correct KEEP predictions dominate.

    Args:
        matrices: dict lang_pair -> ConfusionMatrix.
        margin: |tp - tn| at or below this is BALANCED.

    Returns:
        dict lang_pair -> PairProfile.
    """
    profiles = {}
    for pair, m in matrices.items():
        if m.total() == 0:
            raise MetricsError(f"empty confusion matrix for {pair}")
        if abs(m.tp - m.tn) <= margin:
            profiles[pair] = PairProfile.BALANCED
        elif m.tp > m.tn:
            profiles[pair] = PairProfile.TP_DOMINANT
        else:
            profiles[pair] = PairProfile.TN_DOMINANT
    return profiles


def compare_models(runs):
    """Accuracy table over runs evaluated on the same test set.

    Args:
        runs: list of (model_name, ConfusionMatrix).

    Raises:
        MetricsError: no runs, or the matrices have different totals.
    """
    if not runs:
        raise MetricsError("nothing to compare")
    totals = {m.total() for _, m in runs}
    if len(totals) != 1:
        raise MetricsError(f"runs were evaluated on test sets of different sizes: {sorted(totals)}")
    baseline = accuracy(runs[0][1])
    rows = []
    for name, m in runs:
        score = accuracy(m)
        rows.append(ComparisonRow(name, m.correct, m.total(), score, score - baseline))
    return rows


def learning_curve(points):
    """Sort points by training size and flag whether the FN rate improves with more data.

    Returns:
        (sorted list of LearningCurvePoint, Trend).

    Raises:
        MetricsError: two points share a training size.
    """
    sizes = [point.train_size for point in points]
    if len(set(sizes)) != len(sizes):
        raise MetricsError(f"duplicate training sizes in {sizes}")
    ordered = sorted(points, key=lambda point: point.train_size)
    if len(ordered) < 2:
        return ordered, Trend.NOT_APPLICABLE
    if ordered[-1].fn_rate < ordered[0].fn_rate:
        trend = Trend.IMPROVING
    else:
        trend = Trend.NOT_IMPROVING
    logging.info(
        f"FN rate {ordered[0].fn_rate:.2%} at {ordered[0].train_size} -> "
        f"{ordered[-1].fn_rate:.2%} at {ordered[-1].train_size}: {trend.value}"
    )
    return ordered, trend


def loss_convergence_step(events, threshold=LOSS_CONVERGENCE_THRESHOLD) -> Optional[int]:
    """First training step whose loss is at or below threshold, None if never reached."""
    for event in events:
        if event.loss <= threshold:
            return event.step
    return None
