import asyncio
import logging
import math
from abc import abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

from corpus.units import Label
from constants.config import DEFAULT_CONCURRENCY
from finetune.encoding import FineTuneError, PromptEncoding
from finetune.transport import ApiError
from metrics.confusion import Prediction


class BatchClassificationError(FineTuneError):
    """Every unit of a batch failed to classify."""


@dataclass(frozen=True)
class ClassifierResult:
    label: Label
    confidence: Optional[float] = None


class ClassifierBackend(object):
    """Anything that can say whether an MT output needs post-editing."""

    @abstractmethod
    def classify(self, source, mt):
        """Return ClassifierResult."""

    @abstractmethod
    def describe(self):
        """JSON-safe descriptor recorded in the run manifest."""


class RemoteModel(ClassifierBackend):
    """A fine-tuned model served by the API."""

    def __init__(self, client, model_ref, encoding=PromptEncoding(), base_model=None):
        self.client = client
        self.model_ref = model_ref
        self.encoding = encoding
        self.base_model = base_model

    def classify(self, source, mt):
        path, body = self.encoding.request(self.model_ref, source, mt)
        response = self.client.request("POST", path, json_body=body)
        try:
            choice = response["choices"][0]
            if "message" in choice:
                text = choice["message"].get("content") or ""
            else:
                text = choice.get("text") or ""
            confidence = _confidence(choice)
        except (LookupError, TypeError, AttributeError) as e:
            raise ApiError(200, f"malformed completion response: {e!r}")
        return ClassifierResult(self.encoding.decode(text), confidence)

    def describe(self):
        return {
            "kind": "remote",
            "model": self.model_ref,
            "base_model": self.base_model,
            "dialect": self.encoding.dialect.value,
        }


def _confidence(choice):
    """exp of the first generated token's log-probability, None when the API sent none."""
    logprobs = choice.get("logprobs")
    if not logprobs:
        return None
    if logprobs.get("content"):
        logprob = logprobs["content"][0].get("logprob")
    elif logprobs.get("token_logprobs"):
        logprob = logprobs["token_logprobs"][0]
    else:
        return None
    return None if logprob is None else math.exp(logprob)


def classify_segment(backend, source, mt):
    """Classify one (source, mt) pair.

    Raises:
        UnparseableLabelError: the completion matched neither label.
        FineTuneError: transport or API failure (remote backends).
    """
    return backend.classify(source, mt)


def _predict(backend, segment):
    try:
        result = classify_segment(backend, segment.unit.source, segment.unit.mt)
    except FineTuneError as e:
        logging.warning(f"Abstaining on {segment.id}: {e}")
        return Prediction(segment.id, None, segment.label, error=str(e))
    return Prediction(segment.id, result.label, segment.label, result.confidence)


### Classify in parallel on a bounded thread pool, gathering results in input order.
async def _async_predict(executor, backend, segment):
    loop = asyncio.get_event_loop()
    return await loop.run_in_executor(executor, _predict, backend, segment)


async def _predict_all_async(backend, segments, concurrency):
    with ThreadPoolExecutor(max_workers=concurrency) as executor:
        tasks = [_async_predict(executor, backend, segment) for segment in segments]
        return await asyncio.gather(*tasks)


def classify_batch(backend, segments, concurrency=DEFAULT_CONCURRENCY):
    """Classify labeled segments with at most `concurrency` requests in flight.

    Units that fail become ABSTAIN predictions carrying the error; they are left out of the
    confusion counts but reported.

    Returns:
        list of Prediction in input order.

    Raises:
        BatchClassificationError: every unit failed.
    """
    if concurrency < 1:
        raise ValueError(f"concurrency must be at least 1, got {concurrency}")
    if not segments:
        return []
    predictions = list(asyncio.run(_predict_all_async(backend, segments, concurrency)))
    abstained = sum(1 for prediction in predictions if prediction.abstained)
    if abstained == len(predictions):
        raise BatchClassificationError(f"all {abstained} units failed to classify")
    if abstained:
        logging.warning(f"{abstained} of {len(predictions)} units abstained")
    logging.info(f"Classified {len(predictions) - abstained} units")
    return predictions
