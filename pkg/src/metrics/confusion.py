"""Confusion matrix and the cost/risk quantities derived from it.

EDIT ("requires post-editing") is the positive class throughout. Segments predicted KEEP are
the leave-as-is (LAI) set, i.e. TN + FN.
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from sklearn.metrics import confusion_matrix, precision_recall_fscore_support

from corpus.units import Label
from constants.config import DEFAULT_PAY_RATE

ABSTAIN = "abstain"


class MetricsError(Exception):
    """A metric is undefined for the given counts or inputs are inconsistent."""


@dataclass(frozen=True)
class Prediction:
    unit_id: str
    # None means the classifier abstained.
    predicted: Optional[Label]
    gold: Label
    confidence: Optional[float] = None
    error: Optional[str] = None

    @property
    def abstained(self):
        return self.predicted is None

    def to_dict(self):
        return {
            "unit_id": self.unit_id,
            "predicted": ABSTAIN if self.predicted is None else self.predicted.value,
            "gold": self.gold.value,
            "confidence": self.confidence,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, data):
        predicted = None if data["predicted"] == ABSTAIN else Label(data["predicted"])
        return cls(
            data["unit_id"], predicted, Label(data["gold"]), data.get("confidence"), data.get("error")
        )


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0
    abstained: int = 0

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn, self.abstained) < 0:
            raise MetricsError(f"confusion counts must be non-negative: {self}")

    def total(self):
        return self.tp + self.fp + self.tn + self.fn

    @property
    def correct(self):
        return self.tp + self.tn

    @property
    def lai(self):
        """Segments predicted as not requiring editing."""
        return self.tn + self.fn

    @classmethod
    def parse(cls, text):
        """Build from literal 'tp,fp,tn,fn' counts."""
        try:
            counts = [int(part) for part in text.split(",")]
        except ValueError:
            raise MetricsError(f"matrix must be four integers tp,fp,tn,fn: '{text}'")
        if len(counts) != 4:
            raise MetricsError(f"matrix must be four integers tp,fp,tn,fn: '{text}'")
        return cls(*counts)

    def to_dict(self):
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn, "abstained": self.abstained}

    @classmethod
    def from_dict(cls, data):
        return cls(data["tp"], data["fp"], data["tn"], data["fn"], data.get("abstained", 0))


@dataclass(frozen=True)
class SavingsParams:
    # Fraction of the full rate paid for reviewing an LAI segment.
    lai_review_pay_rate: float = DEFAULT_PAY_RATE

    def __post_init__(self):
        if not 0 <= self.lai_review_pay_rate <= 1:
            raise MetricsError(f"pay rate must be within [0, 1], got {self.lai_review_pay_rate}")


# Row/column order of the sklearn matrix: true label by row, predicted label by column.
CLASS_ORDER = [Label.EDIT.value, Label.KEEP.value]


def confusion_from(predictions):
    """Tally predictions by (gold, predicted). Abstentions only increment `abstained`."""
    predictions = list(predictions)
    scored = [p for p in predictions if p.predicted is not None]
    abstained = len(predictions) - len(scored)
    if not scored:
        return ConfusionMatrix(abstained=abstained)
    gold = [p.gold.value for p in scored]
    predicted = [p.predicted.value for p in scored]
    (tp, fn), (fp, tn) = confusion_matrix(gold, predicted, labels=CLASS_ORDER).tolist()
    return ConfusionMatrix(tp, fp, tn, fn, abstained)


def _require_total(m):
    if m.total() == 0:
        raise MetricsError("metric undefined for an empty confusion matrix")
    return m.total()


def accuracy(m):
    """(TP + TN) / Total."""
    return m.correct / _require_total(m)


def type2_rate(m):
    """FN / Total: segments wrongly passed as not needing post-editing."""
    return m.fn / _require_total(m)


def lai_false_rate(m):
    """FN / (TN + FN): share of leave-as-is segments that actually needed editing.

    Returns None (not applicable) when nothing was predicted KEEP.
    """
    if m.lai == 0:
        return None
    return m.fn / m.lai


def scenario1(m):
    """LAI segments are published without human review.

    Returns:
        (error_ceiling, savings): FN / Total and (TN + FN) / Total.
    """
    total = _require_total(m)
    return m.fn / total, m.lai / total


def scenario2(m, params=SavingsParams()):
    """LAI segments are reviewed at the discounted pay rate r: savings (1 - r)(TN + FN) / Total."""
    total = _require_total(m)
    return (1 - params.lai_review_pay_rate) * m.lai / total


def pay_rate_sweep(m, rates):
    """Scenario 2 savings for each pay rate, as [(rate, savings), ...]."""
    return [(rate, scenario2(m, SavingsParams(rate))) for rate in rates]


def _label_arrays(m):
    """Expand counts back into (gold, predicted) label arrays."""
    edit, keep = CLASS_ORDER
    gold = np.repeat([edit, edit, keep, keep], [m.tp, m.fn, m.fp, m.tn])
    predicted = np.repeat([edit, keep, edit, keep], [m.tp, m.fn, m.fp, m.tn])
    return gold, predicted


def edit_class_scores(m):
    """Precision, recall and F1 of the EDIT class. Each is None when its denominator is zero."""
    if m.total() == 0:
        return None, None, None
    gold, predicted = _label_arrays(m)
    scores = precision_recall_fscore_support(
        gold, predicted, pos_label=Label.EDIT.value, average="binary", zero_division=np.nan
    )[:3]
    return tuple(None if np.isnan(score) else float(score) for score in scores)


def precision(m):
    return edit_class_scores(m)[0]


def recall(m):
    return edit_class_scores(m)[1]


def f1(m):
    return edit_class_scores(m)[2]


@dataclass(frozen=True)
class SavingsReport:
    matrix: ConfusionMatrix
    params: SavingsParams
    error_ceiling: float
    lai_false_rate: Optional[float]
    scenario1_savings: float
    scenario2_savings: float
    # ((pay rate, scenario 2 savings), ...)
    sweep: Tuple[Tuple[float, float], ...] = ()

    def to_dict(self):
        return {
            "matrix": self.matrix.to_dict(),
            "pay_rate": self.params.lai_review_pay_rate,
            "error_ceiling": self.error_ceiling,
            "lai_false_rate": self.lai_false_rate,
            "scenario1_savings": self.scenario1_savings,
            "scenario2_savings": self.scenario2_savings,
            "sweep": [list(item) for item in self.sweep],
        }


def savings_report(m, params=SavingsParams(), sweep_rates=()):
    error_ceiling, savings1 = scenario1(m)
    return SavingsReport(
        matrix=m,
        params=params,
        error_ceiling=error_ceiling,
        lai_false_rate=lai_false_rate(m),
        scenario1_savings=savings1,
        scenario2_savings=scenario2(m, params),
        sweep=tuple(tuple(item) for item in pay_rate_sweep(m, sweep_rates)),
    )


@dataclass(frozen=True)
class MetricsReport:
    matrix: ConfusionMatrix
    accuracy: float
    type2_rate: float
    lai_false_rate: Optional[float]
    error_ceiling: float
    scenario1_savings: float
    scenario2_savings: float
    params: SavingsParams = field(default_factory=SavingsParams)
    precision: Optional[float] = None
    recall: Optional[float] = None
    f1: Optional[float] = None

    def to_dict(self):
        return {
            "matrix": self.matrix.to_dict(),
            "accuracy": self.accuracy,
            "type2_rate": self.type2_rate,
            "lai_false_rate": self.lai_false_rate,
            "error_ceiling": self.error_ceiling,
            "scenario1_savings": self.scenario1_savings,
            "scenario2_savings": self.scenario2_savings,
            "params": {"lai_review_pay_rate": self.params.lai_review_pay_rate},
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            matrix=ConfusionMatrix.from_dict(data["matrix"]),
            accuracy=data["accuracy"],
            type2_rate=data["type2_rate"],
            lai_false_rate=data["lai_false_rate"],
            error_ceiling=data["error_ceiling"],
            scenario1_savings=data["scenario1_savings"],
            scenario2_savings=data["scenario2_savings"],
            params=SavingsParams(data["params"]["lai_review_pay_rate"]),
            precision=data.get("precision"),
            recall=data.get("recall"),
            f1=data.get("f1"),
        )


def metrics_report(m, params=SavingsParams()):
    """Every derived quantity for one confusion matrix."""
    error_ceiling, savings1 = scenario1(m)
    edit_precision, edit_recall, edit_f1 = edit_class_scores(m)
    return MetricsReport(
        matrix=m,
        accuracy=accuracy(m),
        type2_rate=type2_rate(m),
        lai_false_rate=lai_false_rate(m),
        error_ceiling=error_ceiling,
        scenario1_savings=savings1,
        scenario2_savings=scenario2(m, params),
        params=params,
        precision=edit_precision,
        recall=edit_recall,
        f1=edit_f1,
    )


if __name__ == "__main__":
    """Quick demonstration on the published EN-IT and EN-DE counts."""
    for name, matrix in (("EN-IT", ConfusionMatrix(503, 81, 191, 67)), ("EN-DE", ConfusionMatrix(256, 46, 442, 90))):
        report = metrics_report(matrix)
        print(
            f"{name}: accuracy {report.accuracy:.2%}, LAI false rate {report.lai_false_rate:.2%}, "
            f"scenario 1 {report.scenario1_savings:.2%}, scenario 2 {report.scenario2_savings:.2%}"
        )
