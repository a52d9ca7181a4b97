"""Tab separated triples: id, source, mt, pe (or source, mt, pe with generated ids).

Lines starting with '#' are comments. There is no quoting, so text fields cannot contain TABs.
"""

from corpus.text import normalize_text
from corpus.units import TranslationUnit
from ingest.report import IngestError, ReportBuilder

COMMENT_PREFIX = "#"


def auto_id(line_number):
    """Zero padded line ordinal used as id for 3-column lines."""
    return f"{line_number:06d}"


def parse_tsv(file):
    """Parse a TSV corpus file.

    Args:
        file: CorpusFile with format TSV.

    Returns:
        (list of TranslationUnit, IngestReport). Malformed lines are rejected, not fatal.

    Raises:
        IngestError: file unreadable or not UTF-8, or an id occurs twice.
    """
    builder = ReportBuilder(str(file.path))
    units = []
    try:
        with open(file.path, encoding="utf-8", newline="") as tsv_file:
            for line_number, line in enumerate(tsv_file, start=1):
                line = line.rstrip("\r\n")
                if not line.strip() or line.startswith(COMMENT_PREFIX):
                    continue
                locator = f"line {line_number}"
                columns = line.split("\t")
                if len(columns) == 4:
                    unit_id, source, mt, pe = columns
                elif len(columns) == 3:
                    source, mt, pe = columns
                    unit_id = auto_id(line_number)
                else:
                    builder.reject(locator, "expected 3 or 4 columns")
                    continue
                if not unit_id:
                    builder.reject(locator, "empty id")
                    continue
                if not normalize_text(source):
                    builder.reject(locator, "empty source")
                    continue
                unit = TranslationUnit(unit_id, source, mt, pe, file.lang_pair)
                builder.accept(unit)
                units.append(unit)
    except (OSError, UnicodeDecodeError) as e:
        raise IngestError(f"unable to read {file.path}: {e}") from e
    return units, builder.build(file.declared_count)
