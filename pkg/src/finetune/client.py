import csv
import io
import logging
import random
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from constants.config import (
    DEFAULT_POLL_INTERVAL,
    DEFAULT_POLL_TIMEOUT,
    FILES_PATH,
    JOB_EVENTS_PATH,
    JOB_PATH,
    JOBS_PATH,
    POLL_JITTER,
    RETRY_BACKOFF_INIT,
    RETRY_MAX_TRIES,
)
from finetune.encoding import FineTuneError
from finetune.transport import ApiError, RetryableApiError, request_with_retries

EVENTS_PAGE_SIZE = 100


class JobStatus(Enum):
    PENDING = "pending"
    RUNNING = "running"
    SUCCEEDED = "succeeded"
    FAILED = "failed"
    CANCELLED = "cancelled"

    @property
    def terminal(self):
        return self in (JobStatus.SUCCEEDED, JobStatus.FAILED, JobStatus.CANCELLED)


# API status strings -> JobStatus.
API_STATUS_MAP = {
    "validating_files": JobStatus.PENDING,
    "queued": JobStatus.PENDING,
    "pending": JobStatus.PENDING,
    "running": JobStatus.RUNNING,
    "succeeded": JobStatus.SUCCEEDED,
    "failed": JobStatus.FAILED,
    "cancelled": JobStatus.CANCELLED,
}


@dataclass(frozen=True)
class FineTuneJob:
    job_id: str
    base_model: str
    status: JobStatus
    fine_tuned_model: Optional[str] = None
    created_at: Optional[int] = None
    finished_at: Optional[int] = None
    hyperparams: dict = field(default_factory=dict)

    @classmethod
    def from_api(cls, body):
        """Build from an API job object, enforcing the model/finish-time invariants."""
        try:
            status = API_STATUS_MAP[body["status"]]
        except KeyError:
            raise ApiError(200, f"unexpected job status {body.get('status')!r}")
        fine_tuned_model = body.get("fine_tuned_model") if status == JobStatus.SUCCEEDED else None
        if status == JobStatus.SUCCEEDED and not fine_tuned_model:
            raise ApiError(200, f"job {body['id']} succeeded without a model reference")
        return cls(
            job_id=body["id"],
            base_model=body.get("model", ""),
            status=status,
            fine_tuned_model=fine_tuned_model,
            created_at=body.get("created_at"),
            finished_at=body.get("finished_at") if status.terminal else None,
            hyperparams=dict(body.get("hyperparameters") or {}),
        )

    def to_dict(self):
        return {
            "job_id": self.job_id,
            "base_model": self.base_model,
            "status": self.status.value,
            "fine_tuned_model": self.fine_tuned_model,
            "created_at": self.created_at,
            "finished_at": self.finished_at,
            "hyperparams": self.hyperparams,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            data["job_id"],
            data["base_model"],
            JobStatus(data["status"]),
            data.get("fine_tuned_model"),
            data.get("created_at"),
            data.get("finished_at"),
            dict(data.get("hyperparams") or {}),
        )


@dataclass(frozen=True)
class TrainingEvent:
    step: int
    loss: float
    timestamp: Optional[int] = None

    def to_dict(self):
        return {"step": self.step, "loss": self.loss, "timestamp": self.timestamp}


@dataclass(frozen=True)
class PollOutcome:
    # Last job state seen, None if no poll ever succeeded.
    job: Optional[FineTuneJob]
    timed_out: bool
    polls: int
    transport_errors: int


class FineTuneClient(object):
    """Fine-tuning job orchestration over a Transport."""

    def __init__(self, transport, max_tries=RETRY_MAX_TRIES, retry_delay=RETRY_BACKOFF_INIT, seed=0):
        self.transport = transport
        self.max_tries = max_tries
        self.retry_delay = retry_delay
        # Poll jitter comes from a seeded generator so runs stay replayable.
        self._jitter_rng = random.Random(seed)

    def request(self, method, path, max_tries=None, **kwargs):
        return request_with_retries(
            self.transport,
            method,
            path,
            max_tries=max_tries or self.max_tries,
            retry_delay=self.retry_delay,
            **kwargs,
        )

    def upload_file(self, document, filename="training.jsonl"):
        """Upload a fine-tuning JSONL document.

        Returns:
            server assigned file id.
        """
        if not document:
            raise FineTuneError("refusing to upload an empty training document")
        body = self.request(
            "POST",
            FILES_PATH,
            files={"file": (filename, document.encode("utf-8"))},
            data={"purpose": "fine-tune"},
        )
        logging.info(f"Uploaded training file as {body['id']}")
        return body["id"]

    def create_job(self, file_id, base_model, hyperparams=None):
        """Start a fine-tuning job. No idempotency: every call creates a new job."""
        payload = {"training_file": file_id, "model": base_model}
        if hyperparams:
            payload["hyperparameters"] = dict(hyperparams)
        job = FineTuneJob.from_api(self.request("POST", JOBS_PATH, json_body=payload))
        logging.info(f"Created fine-tuning job {job.job_id} on {base_model} ({job.status.value})")
        return job

    def get_job(self, job_id, max_tries=None):
        return FineTuneJob.from_api(
            self.request("GET", JOB_PATH.format(job_id=job_id), max_tries=max_tries)
        )

    def poll_job(
        self,
        job_id,
        poll_interval=DEFAULT_POLL_INTERVAL,
        timeout=DEFAULT_POLL_TIMEOUT,
        jitter=POLL_JITTER,
        sleep=time.sleep,
        clock=time.monotonic,
    ):
        """Poll a job until it reaches a terminal status or the timeout passes.

        Each poll is a single request; a failed poll is counted and the next poll is the retry.
        Sleeps at least poll_interval between polls, so at most timeout / poll_interval + 1
        requests are made.

        Returns:
            PollOutcome. A timeout is not an error, the outcome carries the last seen state.
        """
        deadline = clock() + timeout
        job = None
        polls = transport_errors = 0
        while True:
            polls += 1
            try:
                job = self.get_job(job_id, max_tries=1)
            except RetryableApiError as e:
                transport_errors += 1
                logging.warning(f"Poll {polls} of job {job_id} failed: {e}")
            else:
                logging.info(f"Job {job_id} is {job.status.value} (poll {polls})")
                if job.status.terminal:
                    return PollOutcome(job, False, polls, transport_errors)
            remaining = deadline - clock()
            if remaining < poll_interval:
                logging.warning(f"Timed out waiting for job {job_id} after {polls} polls")
                return PollOutcome(job, True, polls, transport_errors)
            sleep(min(poll_interval + self._jitter_rng.uniform(0, jitter), remaining))

    def fetch_events(self, job_id):
        """Full training event stream of a job, ordered by step.

        Only metric events carrying a step and a training loss are kept.

        Raises:
            ApiError: job not found.
        """
        path = JOB_EVENTS_PATH.format(job_id=job_id)
        raw, after = [], None
        while True:
            params = {"limit": EVENTS_PAGE_SIZE}
            if after:
                params["after"] = after
            body = self.request("GET", path, params=params)
            page = body.get("data", [])
            raw.extend(page)
            if not body.get("has_more") or not page:
                break
            after = page[-1]["id"]

        by_step = {}
        for event in raw:
            data = event.get("data") or {}
            if "step" not in data or "train_loss" not in data:
                continue
            by_step.setdefault(
                int(data["step"]), TrainingEvent(int(data["step"]), data["train_loss"], event.get("created_at"))
            )
        events = [by_step[step] for step in sorted(by_step)]
        logging.info(f"Fetched {len(events)} training events for job {job_id}")
        return events


def events_to_csv(events):
    """(step, loss) CSV for external plotting."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["step", "loss"])
    writer.writerows([event.step, event.loss] for event in events)
    return buffer.getvalue()
