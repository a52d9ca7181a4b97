import logging

from corpus.text import normalize_text
from ingest.jsonl import parse_jsonl
from ingest.report import CorpusFormat, IngestError, IngestReport
from ingest.tmx import parse_tmx_pair
from ingest.tsv import parse_tsv


def _problems(units):
    """Yield (position, unit, reason) for every unit that breaks a corpus invariant."""
    seen = set()
    for position, unit in enumerate(units, start=1):
        if unit.id in seen:
            yield position, unit, "duplicate id"
            continue
        seen.add(unit.id)
        if not normalize_text(unit.source):
            yield position, unit, "empty source"


def validate_corpus(units):
    """Check corpus-level invariants. The first occurrence of an id wins."""
    reasons = tuple((f"unit {pos} ({unit.id})", reason) for pos, unit, reason in _problems(units))
    return IngestReport(len(units) - len(reasons), len(reasons), reasons)


def filter_valid(units):
    """Drop the units validate_corpus would reject.

    Returns:
        (kept units in input order, IngestReport).
    """
    rejected = {pos for pos, _, _ in _problems(units)}
    kept = [unit for pos, unit in enumerate(units, start=1) if pos not in rejected]
    report = validate_corpus(units)
    if report.rejected:
        logging.warning(f"Dropped {report.rejected} invalid units")
    return kept, report


def parse_corpus(file, pe_file=None):
    """Parse a corpus file of any supported format.

    Args:
        file: CorpusFile. For TMX_PAIR this is the MT export.
        pe_file: CorpusFile of the post-edited export, TMX_PAIR only.
    """
    if file.format == CorpusFormat.TSV:
        return parse_tsv(file)
    if file.format == CorpusFormat.JSONL:
        return parse_jsonl(file)
    if pe_file is None:
        raise IngestError("TMX input needs both the MT and the post-edited export")
    return parse_tmx_pair(file, pe_file)
