import logging
import threading
import time
from abc import abstractmethod
from dataclasses import dataclass

import requests

from constants.config import (
    HTTP_TIMEOUT,
    RETRY_BACKOFF_INIT,
    RETRY_MAX_TRIES,
    RETRYABLE_STATUS_CODES,
)
from finetune.encoding import FineTuneError

# Reduce log spam from the requests package.
logging.getLogger("urllib3").setLevel(logging.WARNING)

REDACTED = "***"


class TransportFailure(FineTuneError):
    """The request never produced an HTTP response (connection error, timeout)."""


class ApiError(FineTuneError):
    """Non-retryable API rejection."""

    def __init__(self, status, message):
        super().__init__(f"HTTP {status}: {message}")
        self.status = status
        self.message = message


class RetryableApiError(FineTuneError):
    """Transport failures, 5xx or 429 responses persisted through every retry."""


@dataclass(frozen=True)
class ApiResponse:
    status: int
    body: dict

    @property
    def error_message(self):
        error = self.body.get("error") if isinstance(self.body, dict) else None
        if isinstance(error, dict):
            return error.get("message", "")
        return str(error or "")


class Transport(object):
    """Sends one request to an OpenAI-compatible API. Implementations must be thread safe."""

    @abstractmethod
    def send(self, method, path, json_body=None, files=None, data=None, params=None):
        """Return ApiResponse or raise TransportFailure."""


class RedactingFilter(logging.Filter):
    """Replaces secrets in log records before they are emitted."""

    def __init__(self, secrets):
        super().__init__()
        self.secrets = [secret for secret in secrets if secret]

    def filter(self, record):
        message = record.getMessage()
        if any(secret in message for secret in self.secrets):
            for secret in self.secrets:
                message = message.replace(secret, REDACTED)
            record.msg = message
            record.args = None
        return True


def install_redaction(secret):
    """Attach a RedactingFilter for secret to the root logger and its handlers."""
    if not secret:
        return
    redacting_filter = RedactingFilter([secret])
    root = logging.getLogger()
    root.addFilter(redacting_filter)
    for handler in root.handlers:
        handler.addFilter(redacting_filter)


class HttpTransport(Transport):
    """requests based transport with bearer auth. One session per thread."""

    def __init__(self, api_base, api_key, timeout=HTTP_TIMEOUT):
        self.api_base = api_base.rstrip("/")
        self.timeout = timeout
        self._api_key = api_key
        self._local = threading.local()
        install_redaction(api_key)

    def _session(self):
        session = getattr(self._local, "session", None)
        if session is None:
            session = requests.Session()
            session.headers["Authorization"] = f"Bearer {self._api_key}"
            self._local.session = session
        return session

    def send(self, method, path, json_body=None, files=None, data=None, params=None):
        try:
            response = self._session().request(
                method,
                self.api_base + path,
                json=json_body,
                files=files,
                data=data,
                params=params,
                timeout=self.timeout,
            )
        except requests.exceptions.RequestException as e:
            raise TransportFailure(f"{method} {path} failed: {type(e).__name__}") from e
        try:
            body = response.json()
        except ValueError:
            body = {"error": {"message": response.text[:200]}}
        return ApiResponse(response.status_code, body)

    def __repr__(self):
        return f"HttpTransport({self.api_base})"


def request_with_retries(
    transport,
    method,
    path,
    max_tries=RETRY_MAX_TRIES,
    retry_delay=RETRY_BACKOFF_INIT,
    **kwargs,
):
    """Send a request, retrying transport failures, 5xx and 429 with exponential backoff.

    Returns:
        response body (dict) of a 2xx response.

    Raises:
        ApiError: any other non-2xx response. 401 is reported as invalid credentials.
        RetryableApiError: every attempt failed with a retryable error.
    """
    try_count = 0
    last_error = ""
    while try_count < max_tries:
        try_count += 1
        try:
            response = transport.send(method, path, **kwargs)
        except TransportFailure as e:
            last_error = str(e)
        else:
            if 200 <= response.status < 300:
                return response.body
            if response.status == 401:
                raise ApiError(401, "invalid credentials")
            if response.status not in RETRYABLE_STATUS_CODES:
                raise ApiError(response.status, response.error_message)
            last_error = f"HTTP {response.status}: {response.error_message}"
        if try_count < max_tries:
            logging.warning(
                f"Failed {method} {path} (attempt {try_count}/{max_tries}): {last_error}. Retrying..."
            )
            time.sleep(retry_delay)
            retry_delay *= 2
    logging.error(f"Giving up on {method} {path} after {try_count} attempts: {last_error}")
    raise RetryableApiError(f"{method} {path}: {last_error}")
