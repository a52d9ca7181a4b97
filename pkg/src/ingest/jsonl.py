import hashlib
import json
import logging

from corpus.text import normalize_text
from corpus.units import TranslationUnit
from constants.config import FINGERPRINT_ALGORITHM
from ingest.report import IngestError, ReportBuilder
from ingest.tsv import auto_id

TEXT_FIELDS = ("source", "mt", "pe")


def unit_to_line(unit):
    """Canonical one-line JSON for a unit. Key order is fixed, output is UTF-8 text."""
    record = {"id": unit.id, "source": unit.source, "mt": unit.mt, "pe": unit.pe}
    return json.dumps(record, ensure_ascii=False, separators=(",", ":"))


def canonical_jsonl(units):
    return "".join(unit_to_line(unit) + "\n" for unit in units)


def corpus_fingerprint(units):
    """Content hash of the canonical JSONL serialization."""
    digest = hashlib.new(FINGERPRINT_ALGORITHM)
    digest.update(canonical_jsonl(units).encode("utf-8"))
    return digest.hexdigest()


def write_jsonl(units, path):
    with open(path, "w", encoding="utf-8", newline="\n") as jsonl_file:
        jsonl_file.write(canonical_jsonl(units))
    logging.info(f"Wrote {len(units)} units to {path}")


def parse_jsonl(file):
    """Parse a JSONL corpus file, one {"id", "source", "mt", "pe"} object per line.

    Extra keys are ignored. A missing id is replaced by the zero padded line ordinal.

    Returns:
        (list of TranslationUnit, IngestReport).

    Raises:
        IngestError: file unreadable or not UTF-8, or an id occurs twice.
    """
    builder = ReportBuilder(str(file.path))
    units = []
    try:
        with open(file.path, encoding="utf-8") as jsonl_file:
            for line_number, line in enumerate(jsonl_file, start=1):
                if not line.strip():
                    continue
                locator = f"line {line_number}"
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as e:
                    builder.reject(locator, f"invalid JSON: {e.msg}")
                    continue
                if not isinstance(record, dict):
                    builder.reject(locator, "not a JSON object")
                    continue
                missing = [key for key in TEXT_FIELDS if key not in record]
                if missing:
                    builder.reject(locator, f"missing {', '.join(missing)}")
                    continue
                unit_id = record.get("id", auto_id(line_number))
                values = [unit_id] + [record[key] for key in TEXT_FIELDS]
                if not all(isinstance(value, str) for value in values):
                    builder.reject(locator, "fields must be strings")
                    continue
                if not unit_id:
                    builder.reject(locator, "empty id")
                    continue
                if not normalize_text(record["source"]):
                    builder.reject(locator, "empty source")
                    continue
                unit = TranslationUnit(
                    unit_id, record["source"], record["mt"], record["pe"], file.lang_pair
                )
                builder.accept(unit)
                units.append(unit)
    except (OSError, UnicodeDecodeError) as e:
        raise IngestError(f"unable to read {file.path}: {e}") from e
    return units, builder.build(file.declared_count)
