import sys
import os
import logging

# Misc configuration constants

# Strongly encourage Python 3.8+.
# If not 3.8+ uncaught exceptions on worker threads will not be logged.
MIN_PYTHON = (3, 8)
if sys.version_info < MIN_PYTHON:
    logging.critical(
        "Python %s.%s or later is required for proper exception logging.\n" % MIN_PYTHON
    )
LOGGING_FORMAT_STR_SUFFIX = "%(levelname)s : %(asctime)s : %(message)s"

# Environment variable names. The key itself is never stored in config or manifests.
API_KEY_ENV_VAR = "OPENAI_API_KEY"
API_BASE_ENV_VAR = "OPENAI_API_BASE"
DEFAULT_API_BASE = os.environ.get(API_BASE_ENV_VAR, "https://api.openai.com")

# Endpoint paths of the OpenAI-compatible API.
FILES_PATH = "/v1/files"
JOBS_PATH = "/v1/fine_tuning/jobs"
JOB_PATH = "/v1/fine_tuning/jobs/{job_id}"
JOB_EVENTS_PATH = "/v1/fine_tuning/jobs/{job_id}/events"
COMPLETIONS_PATH = "/v1/completions"
CHAT_COMPLETIONS_PATH = "/v1/chat/completions"

DEFAULT_BASE_MODEL = "curie"

# Train fraction of the train/test split (9:1).
DEFAULT_SPLIT_RATIO = 0.9
DEFAULT_SEED = 20230901
# Inclusive upper bounds (source tokens) of the length buckets. Last bucket is unbounded.
DEFAULT_BUCKET_BOUNDS = [5, 10, 20, 40]

# Share of the full rate paid for reviewing leave-as-is segments.
DEFAULT_PAY_RATE = 0.10
# Scenario 2 sweep, 10% to 40% of the full rate.
PAY_RATE_SWEEP = [0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40]
# |tp - tn| at or below this count is reported as balanced.
DEFAULT_PROFILE_MARGIN = 10

# Max in-flight classification requests.
DEFAULT_CONCURRENCY = 4

# The following time values are all provided in seconds.
DEFAULT_POLL_INTERVAL = 30
# Fine-tuning takes about 20 minutes, leave headroom.
DEFAULT_POLL_TIMEOUT = 45 * 60
POLL_JITTER = 2
HTTP_TIMEOUT = 60
RETRY_BACKOFF_INIT = 1

RETRY_MAX_TRIES = 3
RETRYABLE_STATUS_CODES = {429, 500, 502, 503, 504}

# Loss at or below which fine-tuning is considered converged.
LOSS_CONVERGENCE_THRESHOLD = 0.05

FINGERPRINT_ALGORITHM = "sha256"

# Sampling temperature for remote classification. Zero requests determinism.
CLASSIFY_TEMPERATURE = 0
COMPLETION_MAX_TOKENS = 1
CHAT_MAX_TOKENS = 2

# Newline character to get around limits of f-strings.
NEWLINE_CHAR = "\n"
