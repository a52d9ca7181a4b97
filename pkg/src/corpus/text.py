import re
import unicodedata

import editdistance
import regex

from corpus.units import CorpusError, Label, LabeledSegment, bucket_for

# Python's str \s already covers Unicode line and paragraph separators.
WHITESPACE_RUN = re.compile(r"\s+")
# Scripts written without spaces between words.
SPACELESS_SCRIPT = regex.compile(
    r"[\p{Han}\p{Hiragana}\p{Katakana}\p{Hangul}\p{Thai}\p{Lao}\p{Khmer}\p{Myanmar}]"
)
GRAPHEME = regex.compile(r"\X")


def normalize_text(raw):
    """NFC-compose, collapse whitespace runs to single spaces and strip both ends."""
    return WHITESPACE_RUN.sub(" ", unicodedata.normalize("NFC", raw)).strip()


def derive_label(mt, pe):
    """KEEP iff the MT output and its post-edited version are equal after normalization."""
    return Label.KEEP if normalize_text(mt) == normalize_text(pe) else Label.EDIT


def edit_distance(a, b):
    """Character-level Levenshtein distance over Unicode code points (unit costs)."""
    return editdistance.eval(a, b)


def normalized_edit_distance(a, b):
    """Levenshtein distance divided by the longer length. 0.0 when both strings are empty."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 0.0
    return edit_distance(a, b) / longest


def source_length(unit):
    """Length of the source in tokens.

    Whitespace tokens, except for spaceless text in scripts such as Chinese or Japanese,
    which is measured in grapheme clusters.

    Raises:
        CorpusError: source is empty after normalization.
    """
    text = normalize_text(unit.source)
    if not text:
        raise CorpusError(f"unit {unit.id} has an empty source")
    if " " not in text and SPACELESS_SCRIPT.search(text):
        return len(GRAPHEME.findall(text))
    return len(text.split(" "))


def label_segment(unit, buckets):
    """Derive label, distances and length bucket for a single unit."""
    mt = normalize_text(unit.mt)
    pe = normalize_text(unit.pe)
    distance = edit_distance(mt, pe)
    length = source_length(unit)
    return LabeledSegment(
        unit=unit,
        label=Label.KEEP if distance == 0 else Label.EDIT,
        edit_distance=distance,
        normalized_distance=normalized_edit_distance(mt, pe),
        length_bucket=bucket_for(length, buckets),
        source_length=length,
    )


def label_corpus(units, buckets):
    return [label_segment(unit, buckets) for unit in units]


if __name__ == "__main__":
    """Label a couple of EN-IT triples."""
    from constants.config import DEFAULT_BUCKET_BOUNDS
    from corpus.units import LangPair, TranslationUnit, make_buckets

    en_it = LangPair("en", "it")
    units = [
        TranslationUnit("1", "The cat sleeps.", "Il gato dorme.", "Il gatto dorme.", en_it),
        TranslationUnit("2", "Press OK to continue.", "Premi OK per continuare.", "Premi OK per continuare.", en_it),
    ]
    for segment in label_corpus(units, make_buckets(DEFAULT_BUCKET_BOUNDS)):
        print(
            f"{segment.id}: {segment.label.value}, distance {segment.edit_distance}, "
            f"{segment.source_length} tokens in bucket {segment.length_bucket}"
        )
