"""Offline 1-nearest-neighbour classifier over training MT strings.

A floor baseline and test fixture exercising the same backend interface as a fine-tuned model.
The source text is ignored.
"""

import json
import logging
from dataclasses import dataclass
from typing import Tuple

from corpus.text import normalize_text, normalized_edit_distance
from corpus.units import Label
from finetune.backends import ClassifierBackend, ClassifierResult


class BaselineError(Exception):
    """Baseline cannot be trained or loaded."""


@dataclass(frozen=True)
class Exemplar:
    # Normalized MT text.
    mt: str
    label: Label
    id: str


@dataclass(frozen=True)
class BaselineModel(ClassifierBackend):
    exemplars: Tuple[Exemplar, ...]

    def __post_init__(self):
        if not self.exemplars:
            raise BaselineError("baseline model needs at least one exemplar")

    def classify(self, source, mt):
        return baseline_classify(self, source, mt)

    def describe(self):
        return {"kind": "baseline", "exemplars": len(self.exemplars)}


def train_baseline(segments):
    """Store every training segment as an exemplar, ordered by id.

    Raises:
        BaselineError: empty training set.
    """
    if not segments:
        raise BaselineError("cannot train a baseline on an empty training set")
    exemplars = sorted(
        (Exemplar(normalize_text(s.unit.mt), s.label, s.id) for s in segments),
        key=lambda exemplar: exemplar.id,
    )
    logging.info(f"Baseline trained with {len(exemplars)} exemplars")
    return BaselineModel(tuple(exemplars))


def baseline_classify(model, source, mt):
    """Label of the exemplar nearest to mt by normalized edit distance.

    Ties go to the lowest exemplar id. Confidence is 1 - distance.
    """
    query = normalize_text(mt)
    best, best_distance = None, None
    # Exemplars are id-ordered, so the first strict minimum wins ties.
    for exemplar in model.exemplars:
        distance = normalized_edit_distance(query, exemplar.mt)
        if best is None or distance < best_distance:
            best, best_distance = exemplar, distance
            if distance == 0:
                break
    return ClassifierResult(best.label, 1.0 - best_distance)


def save_baseline(model, path):
    """Persist as JSONL of exemplars."""
    with open(path, "w", encoding="utf-8", newline="\n") as model_file:
        for exemplar in model.exemplars:
            record = {"id": exemplar.id, "mt": exemplar.mt, "label": exemplar.label.value}
            model_file.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_baseline(path):
    try:
        with open(path, encoding="utf-8") as model_file:
            exemplars = [
                Exemplar(record["mt"], Label(record["label"]), record["id"])
                for record in map(json.loads, filter(str.strip, model_file))
            ]
    except (OSError, ValueError, KeyError) as e:
        raise BaselineError(f"unable to load baseline from {path}: {e}") from e
    return BaselineModel(tuple(exemplars))
