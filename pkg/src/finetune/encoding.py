"""Prompt/completion encodings for the legacy completion and chat fine-tuning schemas."""

import json
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Tuple

from corpus.units import Label
from constants.config import (
    CHAT_COMPLETIONS_PATH,
    CHAT_MAX_TOKENS,
    CLASSIFY_TEMPERATURE,
    COMPLETION_MAX_TOKENS,
    COMPLETIONS_PATH,
)

SOURCE_MT_SEPARATOR = "\n=>\n"
PROMPT_SUFFIX = "\n\n###\n\n"
SYSTEM_INSTRUCTION = "Answer with exactly one word: keep or edit."


class FineTuneError(Exception):
    """Base class for fine-tuning and remote classification failures."""


class UnparseableLabelError(FineTuneError):
    """A completion matched neither label token."""


class Dialect(Enum):
    COMPLETION = "completion"
    CHAT = "chat"


@dataclass(frozen=True)
class PromptEncoding:
    dialect: Dialect = Dialect.COMPLETION
    keep_token: str = " keep"
    edit_token: str = " edit"

    def token_for(self, label):
        token = self.keep_token if label == Label.KEEP else self.edit_token
        # Chat messages carry the bare word.
        return token.strip() if self.dialect == Dialect.CHAT else token

    def user_content(self, source, mt):
        return source + SOURCE_MT_SEPARATOR + mt

    def prompt(self, source, mt):
        return self.user_content(source, mt) + PROMPT_SUFFIX

    def messages(self, source, mt):
        return [
            {"role": "system", "content": SYSTEM_INSTRUCTION},
            {"role": "user", "content": self.user_content(source, mt)},
        ]

    def encode(self, source, mt, label):
        """One fine-tuning record."""
        if self.dialect == Dialect.COMPLETION:
            return {"prompt": self.prompt(source, mt), "completion": self.token_for(label)}
        messages = self.messages(source, mt)
        messages.append({"role": "assistant", "content": self.token_for(label)})
        return {"messages": messages}

    def request(self, model, source, mt):
        """(path, body) of a deterministic classification request."""
        if self.dialect == Dialect.COMPLETION:
            return COMPLETIONS_PATH, {
                "model": model,
                "prompt": self.prompt(source, mt),
                "max_tokens": COMPLETION_MAX_TOKENS,
                "temperature": CLASSIFY_TEMPERATURE,
                "logprobs": 1,
            }
        return CHAT_COMPLETIONS_PATH, {
            "model": model,
            "messages": self.messages(source, mt),
            "max_tokens": CHAT_MAX_TOKENS,
            "temperature": CLASSIFY_TEMPERATURE,
            "logprobs": True,
        }

    def decode(self, text):
        """Map completion text to a Label by case-insensitive prefix match.

        Raises:
            UnparseableLabelError: text starts with neither label word.
        """
        cleaned = (text or "").strip().lower()
        for label in (Label.EDIT, Label.KEEP):
            word = self.token_for(label).strip().lower()
            if cleaned.startswith(word):
                return label
        raise UnparseableLabelError(f"unparseable label {text!r}")


@dataclass(frozen=True)
class TrainingFile:
    document: str
    record_count: int
    # ((unit id, reason), ...)
    rejected: Tuple[Tuple[str, str], ...]


def prepare_training_file(segments, enc):
    """Fine-tuning JSONL from labeled segments. Only (source, mt) -> label is sent.

    Raises:
        FineTuneError: no segments.
    """
    if not segments:
        raise FineTuneError("no segments to prepare")
    lines, rejected = [], []
    for segment in segments:
        if not segment.unit.mt.strip():
            rejected.append((segment.id, "empty mt"))
            continue
        record = enc.encode(segment.unit.source, segment.unit.mt, segment.label)
        lines.append(json.dumps(record, ensure_ascii=False))
    if rejected:
        logging.warning(f"Left {len(rejected)} segments with empty MT out of the training file")
    logging.info(f"Prepared {len(lines)} {enc.dialect.value} records")
    document = "".join(line + "\n" for line in lines)
    return TrainingFile(document, len(lines), tuple(rejected))
