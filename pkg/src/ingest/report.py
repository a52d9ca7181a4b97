import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional, Tuple

from corpus.units import LangPair


class IngestError(Exception):
    """Structural failure reading a corpus file. Aborts the whole ingest."""


class CorpusFormat(Enum):
    TSV = "tsv"
    JSONL = "jsonl"
    TMX_PAIR = "tmx"


@dataclass(frozen=True)
class CorpusFile:
    path: Path
    format: CorpusFormat
    lang_pair: LangPair
    declared_count: Optional[int] = None


@dataclass(frozen=True)
class IngestReport:
    accepted: int
    rejected: int
    # ((locator, reason), ...)
    rejection_reasons: Tuple[Tuple[str, str], ...] = ()

    @property
    def scanned(self):
        return self.accepted + self.rejected

    def to_dict(self):
        return {
            "accepted": self.accepted,
            "rejected": self.rejected,
            "rejection_reasons": [list(item) for item in self.rejection_reasons],
        }


class ReportBuilder(object):
    """Accumulates accept/reject decisions while a file is scanned."""

    def __init__(self, name):
        self.name = name
        self.accepted = 0
        self.reasons = []
        self._seen_ids = set()

    def accept(self, unit):
        """Record an accepted unit. Raises IngestError on a duplicate id."""
        if unit.id in self._seen_ids:
            raise IngestError(f"{self.name}: duplicate id '{unit.id}'")
        self._seen_ids.add(unit.id)
        self.accepted += 1

    def reject(self, locator, reason):
        logging.debug(f"{self.name}: rejected {locator}: {reason}")
        self.reasons.append((locator, reason))

    def build(self, declared_count=None):
        report = IngestReport(self.accepted, len(self.reasons), tuple(self.reasons))
        if declared_count is not None and declared_count != report.scanned:
            logging.warning(
                f"{self.name}: declared {declared_count} records but scanned {report.scanned}"
            )
        logging.info(f"{self.name}: accepted {report.accepted}, rejected {report.rejected}")
        return report
