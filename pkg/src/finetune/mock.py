"""In-process scripted stand-in for the OpenAI-compatible API.

Driven by a scenario dict (or JSON file):

    {
      "known_models": ["curie", "davinci", "gpt-3.5-turbo"],
      "failures": [{"method": "POST", "path": "/v1/files", "status": 401,
                    "message": "invalid credentials", "times": 1}],
      "job_defaults": {"statuses": ["queued", "running", "succeeded"],
                       "events": [[1, 0.9], [2, 0.4]]},
      "jobs": {"ftjob-0001": {"statuses": ["running"]}},
      "completions": {"default": " edit", "by_mt": {"Il gatto.": " keep"},
                      "logprob": -0.05},
      "latency": {"max": 0.01, "seed": 7}
    }

A failure with "status": 0 simulates a network timeout. "times" defaults to unlimited.
Each GET of a job advances it one entry through its status script and then stays on the last
entry. Jobs listed under "jobs" exist before any create call, so a fresh transport can poll a
job created by an earlier process.
"""

import copy
import json
import logging
import random
import threading
import time

from constants.config import (
    CHAT_COMPLETIONS_PATH,
    COMPLETIONS_PATH,
    FILES_PATH,
    JOBS_PATH,
)
from finetune.encoding import PROMPT_SUFFIX, SOURCE_MT_SEPARATOR
from finetune.transport import ApiResponse, Transport, TransportFailure

DEFAULT_KNOWN_MODELS = ["curie", "davinci", "babbage-002", "davinci-002", "gpt-3.5-turbo"]
DEFAULT_JOB_SCRIPT = {"statuses": ["queued", "running", "succeeded"], "events": []}
TERMINAL = {"succeeded", "failed", "cancelled"}
MOCK_EPOCH = 1700000000


def _error(status, message):
    return ApiResponse(status, {"error": {"message": message}})


def mt_from_request(body):
    """Recover the MT text from a classification request built by PromptEncoding."""
    if "prompt" in body:
        text = body["prompt"]
        if text.endswith(PROMPT_SUFFIX):
            text = text[: -len(PROMPT_SUFFIX)]
    else:
        text = body["messages"][-1]["content"]
    return text.split(SOURCE_MT_SEPARATOR, 1)[-1]


class MockTransport(Transport):
    def __init__(self, scenario=None):
        self.scenario = copy.deepcopy(scenario or {})
        self.known_models = set(self.scenario.get("known_models", DEFAULT_KNOWN_MODELS))
        self._failures = [dict(f) for f in self.scenario.get("failures", [])]
        latency = self.scenario.get("latency", {})
        self._max_latency = latency.get("max", 0)
        self._latency_rng = random.Random(latency.get("seed", 0))
        self._lock = threading.Lock()
        self._file_counter = 0
        self._job_counter = 0
        self.files = {}
        self.jobs = {}
        # (method, path) of every request received, in arrival order.
        self.requests = []

    @classmethod
    def from_file(cls, path):
        with open(path, encoding="utf-8") as scenario_file:
            return cls(json.load(scenario_file))

    def send(self, method, path, json_body=None, files=None, data=None, params=None):
        with self._lock:
            self.requests.append((method, path))
            failure = self._take_failure(method, path, json_body)
            delay = self._latency_rng.uniform(0, self._max_latency) if self._max_latency else 0
        if delay:
            time.sleep(delay)
        if failure is not None:
            if not failure.get("status"):
                raise TransportFailure(f"{method} {path} failed: Timeout")
            return _error(failure["status"], failure.get("message", "scripted failure"))
        with self._lock:
            return self._route(method, path, json_body, files, data, params)

    def _take_failure(self, method, path, body):
        for failure in self._failures:
            if failure.get("method", method) != method or not path.startswith(failure.get("path", "")):
                continue
            if "mt" in failure and (body is None or mt_from_request(body) != failure["mt"]):
                continue
            times = failure.get("times")
            if times is not None:
                if times <= 0:
                    continue
                failure["times"] = times - 1
            return failure
        return None

    def _route(self, method, path, body, files, data, params):
        if method == "POST" and path == FILES_PATH:
            return self._upload(files, data)
        if method == "POST" and path == JOBS_PATH:
            return self._create_job(body)
        if method == "GET" and path.startswith(JOBS_PATH + "/"):
            parts = path[len(JOBS_PATH) + 1 :].split("/")
            if len(parts) == 1:
                return self._get_job(parts[0])
            if len(parts) == 2 and parts[1] == "events":
                return self._events(parts[0])
        if method == "POST" and path in (COMPLETIONS_PATH, CHAT_COMPLETIONS_PATH):
            return self._complete(path, body)
        return _error(404, f"no route for {method} {path}")

    def _upload(self, files, data):
        if not files or "file" not in files:
            return _error(400, "missing file")
        if (data or {}).get("purpose") != "fine-tune":
            return _error(400, "purpose must be fine-tune")
        content = files["file"][1]
        if not content:
            return _error(400, "file is empty")
        self._file_counter += 1
        file_id = f"file-{self._file_counter:04d}"
        self.files[file_id] = content
        return ApiResponse(200, {"id": file_id, "object": "file", "purpose": "fine-tune"})

    def _new_job(self, job_id, model, training_file, hyperparameters):
        script = dict(DEFAULT_JOB_SCRIPT)
        script.update(self.scenario.get("job_defaults", {}))
        script.update(self.scenario.get("jobs", {}).get(job_id, {}))
        model = script.get("model", model)
        job = {
            "id": job_id,
            "model": model,
            "training_file": training_file,
            "hyperparameters": hyperparameters or {},
            "created_at": MOCK_EPOCH + len(self.jobs),
            "statuses": script["statuses"],
            "fine_tuned_model": script.get("fine_tuned_model") or f"ft:{model}:mock:{job_id}",
            "events": script["events"],
            "polls": 0,
        }
        self.jobs[job_id] = job
        return job

    def _create_job(self, body):
        body = body or {}
        if body.get("training_file") not in self.files:
            return _error(400, f"file {body.get('training_file')} not found")
        if body.get("model") not in self.known_models:
            return _error(404, f"model '{body.get('model')}' does not exist")
        self._job_counter += 1
        job_id = f"ftjob-{self._job_counter:04d}"
        job = self._new_job(job_id, body["model"], body["training_file"], body.get("hyperparameters"))
        return ApiResponse(200, self._job_view(job, job["statuses"][0]))

    def _lookup(self, job_id):
        job = self.jobs.get(job_id)
        if job is None and job_id in self.scenario.get("jobs", {}):
            job = self._new_job(job_id, "curie", None, {})
        return job

    def _current_status(self, job):
        return job["statuses"][min(max(job["polls"] - 1, 0), len(job["statuses"]) - 1)]

    def _job_view(self, job, status):
        terminal = status in TERMINAL
        return {
            "id": job["id"],
            "object": "fine_tuning.job",
            "model": job["model"],
            "status": status,
            "created_at": job["created_at"],
            "finished_at": job["created_at"] + 1200 if terminal else None,
            "fine_tuned_model": job["fine_tuned_model"] if status == "succeeded" else None,
            "hyperparameters": job["hyperparameters"],
        }

    def _get_job(self, job_id):
        job = self._lookup(job_id)
        if job is None:
            return _error(404, f"job {job_id} not found")
        job["polls"] += 1
        return ApiResponse(200, self._job_view(job, self._current_status(job)))

    def _events(self, job_id):
        job = self._lookup(job_id)
        if job is None:
            return _error(404, f"job {job_id} not found")
        status = self._current_status(job)
        if status in ("validating_files", "queued"):
            return ApiResponse(200, {"object": "list", "data": [], "has_more": False})
        events = [
            {
                "object": "fine_tuning.job.event",
                "id": f"ftevent-{job_id}-{step}",
                "created_at": job["created_at"] + step,
                "level": "info",
                "type": "metrics",
                "message": f"Step {step}: training loss={loss}",
                "data": {"step": step, "train_loss": loss},
            }
            for step, loss in job["events"]
        ]
        # Newest first, as the real API lists them.
        return ApiResponse(200, {"object": "list", "data": events[::-1], "has_more": False})

    def _complete(self, path, body):
        completions = self.scenario.get("completions", {})
        text = completions.get("by_mt", {}).get(mt_from_request(body), completions.get("default", " edit"))
        logprob = completions.get("logprob")
        if path == COMPLETIONS_PATH:
            logprobs = None
            if logprob is not None:
                logprobs = {"tokens": [text], "token_logprobs": [logprob]}
            choice = {"text": text, "index": 0, "logprobs": logprobs, "finish_reason": "length"}
        else:
            logprobs = None
            if logprob is not None:
                logprobs = {"content": [{"token": text.strip(), "logprob": logprob}]}
            choice = {
                "index": 0,
                "message": {"role": "assistant", "content": text},
                "logprobs": logprobs,
                "finish_reason": "stop",
            }
        logging.debug(f"Mock completion for {body.get('model')}: {text!r}")
        return ApiResponse(200, {"object": "completion", "model": body.get("model"), "choices": [choice]})
