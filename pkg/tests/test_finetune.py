import json
import logging
import math

import pytest

from conftest import synthetic_segments
from corpus.units import Label
from finetune.backends import (
    BatchClassificationError,
    RemoteModel,
    classify_batch,
    classify_segment,
)
from finetune.client import FineTuneClient, JobStatus, events_to_csv
from finetune.encoding import Dialect, PromptEncoding, UnparseableLabelError, prepare_training_file
from finetune.mock import MockTransport
from finetune.transport import ApiError, ApiResponse, HttpTransport, RetryableApiError, Transport
from metrics.confusion import confusion_from

EVENTS = [[1, 0.9], [2, 0.5], [3, 0.2], [4, 0.06], [5, 0.03]]


class FakeClock(object):
    def __init__(self):
        self.now = 0.0
        self.sleeps = []

    def __call__(self):
        return self.now

    def sleep(self, seconds):
        self.sleeps.append(seconds)
        self.now += seconds


def client_for(scenario=None):
    transport = MockTransport(scenario)
    return FineTuneClient(transport, retry_delay=0), transport


def start_job(client, model="curie"):
    file_id = client.upload_file('{"prompt": "x", "completion": " keep"}\n')
    return client.create_job(file_id, model, {})


def test_prepare_completion_record():
    segment = [s for s in synthetic_segments(3) if s.label == Label.KEEP][0]
    training_file = prepare_training_file([segment], PromptEncoding())
    [line] = training_file.document.splitlines()
    record = json.loads(line)
    assert record["completion"] == " keep"
    assert record["prompt"].endswith("\n\n###\n\n")


def test_prepare_chat_records_count():
    segments = synthetic_segments(6000)
    training_file = prepare_training_file(segments, PromptEncoding(Dialect.CHAT))
    assert training_file.record_count == 6000
    first = json.loads(training_file.document.splitlines()[0])
    assert [m["role"] for m in first["messages"]] == ["system", "user", "assistant"]
    assert first["messages"][-1]["content"] in ("keep", "edit")


def test_decode_is_case_insensitive_prefix():
    encoding = PromptEncoding()
    assert encoding.decode(" edit") == Label.EDIT
    assert encoding.decode("Keep") == Label.KEEP
    with pytest.raises(UnparseableLabelError):
        encoding.decode("maybe")


def test_upload_and_create():
    client, _ = client_for()
    assert client.upload_file("{}\n") == "file-0001"
    job = client.create_job("file-0001", "curie", {})
    assert job.status == JobStatus.PENDING
    assert job.fine_tuned_model is None


def test_unknown_model_is_fatal():
    client, _ = client_for()
    with pytest.raises(ApiError) as error:
        start_job(client, model="no-such-model")
    assert error.value.status == 404


def test_timeout_is_retried_then_raised():
    client, transport = client_for({"failures": [{"method": "POST", "path": "/v1/files", "status": 0}]})
    with pytest.raises(RetryableApiError):
        client.upload_file("{}\n")
    assert len(transport.requests) == client.max_tries


def test_retry_recovers_from_transient_failure():
    client, _ = client_for({"failures": [{"path": "/v1/files", "status": 503, "times": 2}]})
    assert client.upload_file("{}\n") == "file-0001"


def test_unauthorized_is_fatal():
    client, transport = client_for({"failures": [{"path": "/v1/files", "status": 401}]})
    with pytest.raises(ApiError, match="invalid credentials"):
        client.upload_file("{}\n")
    assert len(transport.requests) == 1


def test_poll_until_succeeded():
    client, _ = client_for()
    job = start_job(client)
    clock = FakeClock()
    outcome = client.poll_job(job.job_id, poll_interval=30, timeout=600, sleep=clock.sleep, clock=clock)
    assert not outcome.timed_out
    assert outcome.polls == 3
    assert outcome.job.status == JobStatus.SUCCEEDED
    assert outcome.job.fine_tuned_model == "ft:curie:mock:ftjob-0001"
    assert all(s >= 30 for s in clock.sleeps)


def test_poll_times_out_with_last_state():
    client, transport = client_for({"job_defaults": {"statuses": ["running"]}})
    job = start_job(client)
    clock = FakeClock()
    outcome = client.poll_job(job.job_id, poll_interval=0.2, timeout=1, sleep=clock.sleep, clock=clock)
    assert outcome.timed_out
    assert outcome.job.status == JobStatus.RUNNING
    assert outcome.polls <= 1 / 0.2 + 1
    assert sum(1 for method, path in transport.requests if method == "GET") == outcome.polls


def test_poll_counts_transport_errors():
    client, _ = client_for({"failures": [{"method": "GET", "status": 500, "times": 1}]})
    job = start_job(client)
    clock = FakeClock()
    outcome = client.poll_job(job.job_id, poll_interval=30, timeout=600, sleep=clock.sleep, clock=clock)
    assert outcome.transport_errors == 1
    assert outcome.job.status == JobStatus.SUCCEEDED


def test_events_stream():
    client, _ = client_for({"job_defaults": {"statuses": ["queued", "running", "succeeded"], "events": EVENTS}})
    job = start_job(client)
    assert client.fetch_events(job.job_id) == []
    clock = FakeClock()
    client.poll_job(job.job_id, poll_interval=30, timeout=600, sleep=clock.sleep, clock=clock)
    events = client.fetch_events(job.job_id)
    assert [e.step for e in events] == [1, 2, 3, 4, 5]
    assert events_to_csv(events).splitlines()[:2] == ["step,loss", "1,0.9"]


def test_events_unknown_job():
    client, _ = client_for()
    with pytest.raises(ApiError):
        client.fetch_events("ftjob-9999")


def remote(scenario, dialect=Dialect.COMPLETION):
    client, transport = client_for(scenario)
    return RemoteModel(client, "ft:curie:mock", PromptEncoding(dialect), "curie"), transport


@pytest.mark.parametrize("dialect", [Dialect.COMPLETION, Dialect.CHAT])
def test_remote_classify(dialect):
    model, _ = remote({"completions": {"default": " edit", "by_mt": {"Il gatto.": "Keep"}}}, dialect)
    result = classify_segment(model, "The cat.", "Il gato.")
    assert (result.label, result.confidence) == (Label.EDIT, None)
    assert classify_segment(model, "The cat.", "Il gatto.").label == Label.KEEP


def test_remote_confidence_from_logprob():
    model, _ = remote({"completions": {"default": " keep", "logprob": -0.05}})
    assert classify_segment(model, "s", "m").confidence == pytest.approx(math.exp(-0.05))


def test_remote_unparseable_label():
    model, _ = remote({"completions": {"default": "maybe"}})
    with pytest.raises(UnparseableLabelError):
        classify_segment(model, "s", "m")


def test_batch_keeps_input_order():
    segments = synthetic_segments(842)
    by_mt = {s.unit.mt: " keep" for s in segments if s.label == Label.KEEP}
    model, _ = remote({"completions": {"default": " edit", "by_mt": by_mt}, "latency": {"max": 0.001, "seed": 3}})
    predictions = classify_batch(model, segments, concurrency=8)
    assert [p.unit_id for p in predictions] == [s.id for s in segments]
    assert confusion_from(predictions).correct == 842


def test_batch_concurrency_does_not_change_results():
    segments = synthetic_segments(60)
    scenario = {"completions": {"default": " edit", "logprob": -0.1}, "latency": {"max": 0.002, "seed": 1}}
    sequential = classify_batch(remote(scenario)[0], segments, concurrency=1)
    parallel = classify_batch(remote(scenario)[0], segments, concurrency=4)
    assert sequential == parallel


def test_batch_failure_becomes_abstain():
    segments = synthetic_segments(10)
    scenario = {
        "completions": {"default": " edit"},
        "failures": [{"path": "/v1/completions", "mt": segments[4].unit.mt, "status": 400, "message": "bad"}],
    }
    predictions = classify_batch(remote(scenario)[0], segments)
    assert [p.abstained for p in predictions].count(True) == 1
    assert predictions[4].abstained and "bad" in predictions[4].error
    matrix = confusion_from(predictions)
    assert matrix.total() + matrix.abstained == 10


def test_unparseable_completion_abstains():
    segments = synthetic_segments(5)
    scenario = {"completions": {"default": " keep", "by_mt": {segments[0].unit.mt: "perhaps"}}}
    predictions = classify_batch(remote(scenario)[0], segments)
    assert predictions[0].abstained
    assert confusion_from(predictions).abstained == 1


class MalformedForOneTransport(Transport):
    """Answers " edit" except for one MT, which gets a 200 with an unusable body."""

    def __init__(self, bad_mt, bad_body):
        self.bad_mt = bad_mt
        self.bad_body = bad_body

    def send(self, method, path, json_body=None, files=None, data=None, params=None):
        if self.bad_mt in json.dumps(json_body):
            return ApiResponse(200, self.bad_body)
        return ApiResponse(200, {"choices": [{"text": " edit"}]})


@pytest.mark.parametrize("body", [{"choices": []}, {}, {"choices": [{"message": None}]}])
def test_malformed_completion_abstains(body):
    segments = synthetic_segments(3)
    client = FineTuneClient(MalformedForOneTransport(segments[1].unit.mt, body), retry_delay=0)
    model = RemoteModel(client, "ft:curie:mock", PromptEncoding(), "curie")
    with pytest.raises(ApiError, match="malformed completion"):
        classify_segment(model, segments[1].unit.source, segments[1].unit.mt)
    predictions = classify_batch(model, segments)
    assert [p.abstained for p in predictions] == [False, True, False]
    assert "malformed completion" in predictions[1].error


def test_batch_all_failed():
    with pytest.raises(BatchClassificationError):
        classify_batch(remote({"completions": {"default": "??"}})[0], synthetic_segments(3))


def test_full_remote_path():
    segments = synthetic_segments(50)
    train, test = segments[:45], segments[45:]
    client, transport = client_for({"job_defaults": {"statuses": ["validating_files", "running", "succeeded"], "events": EVENTS}})
    training_file = prepare_training_file(train, PromptEncoding())
    file_id = client.upload_file(training_file.document)
    assert transport.files[file_id].decode("utf-8").count("\n") == 45
    job = client.create_job(file_id, "curie")
    clock = FakeClock()
    outcome = client.poll_job(job.job_id, poll_interval=30, timeout=600, sleep=clock.sleep, clock=clock)
    assert len(client.fetch_events(job.job_id)) == 5
    model = RemoteModel(client, outcome.job.fine_tuned_model, PromptEncoding(), "curie")
    predictions = classify_batch(model, test)
    assert len(predictions) == 5
    assert model.describe()["model"] == "ft:curie:mock:ftjob-0001"


def test_api_key_is_redacted(caplog):
    secret = "sk-test-0123456789abcdef"
    transport = HttpTransport("http://localhost:9", secret)
    assert secret not in repr(transport)
    with caplog.at_level(logging.INFO):
        logging.info(f"using key {secret}")
    assert secret not in caplog.text
    assert "***" in caplog.text
