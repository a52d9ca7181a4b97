import json

import pytest

from conftest import EN_IT, unit
from ingest.jsonl import corpus_fingerprint, parse_jsonl, write_jsonl
from ingest.report import CorpusFile, CorpusFormat, IngestError
from ingest.tmx import parse_tmx_pair
from ingest.tsv import parse_tsv
from ingest.validate import filter_valid, parse_corpus, validate_corpus


def tsv(path, declared_count=None):
    return CorpusFile(path, CorpusFormat.TSV, EN_IT, declared_count)


def jsonl(path):
    return CorpusFile(path, CorpusFormat.JSONL, EN_IT)


def tmx_document(units, source_lang="en", target_lang="it"):
    """units: list of (tuid or None, source, target)."""
    body = []
    for tuid, source, target in units:
        attr = f' tuid="{tuid}"' if tuid else ""
        body.append(
            f'<tu{attr}><tuv xml:lang="{source_lang}"><seg>{source}</seg></tuv>'
            f'<tuv xml:lang="{target_lang}"><seg>{target}</seg></tuv></tu>'
        )
    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n<tmx version="1.4"><header srclang="en"/><body>'
        + "".join(body)
        + "</body></tmx>"
    )


def test_tsv_four_columns(write_file):
    units, report = parse_tsv(tsv(write_file("c.tsv", "u1\tHi\tCiao\tCiao\n")))
    assert units == [unit("u1", "Hi", "Ciao", "Ciao")]
    assert (report.accepted, report.rejected) == (1, 0)


def test_tsv_three_columns_get_line_ids(write_file):
    units, _ = parse_tsv(tsv(write_file("c.tsv", "# header\nHi\tCiao\tSalve\n")))
    assert units[0].id == "000002"


def test_tsv_rejects_wrong_column_count(write_file):
    units, report = parse_tsv(tsv(write_file("c.tsv", "u1\tHi\tCiao\tCiao\nHi\tCiao\n")))
    assert len(units) == 1
    assert report.rejection_reasons == (("line 2", "expected 3 or 4 columns"),)


def test_tsv_duplicate_id_is_fatal(write_file):
    with pytest.raises(IngestError):
        parse_tsv(tsv(write_file("c.tsv", "u1\tA\tB\tB\nu1\tC\tD\tD\n")))


def test_tsv_unreadable_file_is_fatal(tmp_path):
    with pytest.raises(IngestError):
        parse_tsv(tsv(tmp_path / "missing.tsv"))


def test_tsv_counts_large_file(write_file):
    lines = "".join(f"u{i}\tsource {i}\tmt {i}\tpe {i}\n" for i in range(4000))
    units, report = parse_tsv(tsv(write_file("c.tsv", lines), declared_count=4000))
    assert (report.accepted, report.rejected, len(units)) == (4000, 0, 4000)


def test_jsonl_records(write_file):
    lines = [
        json.dumps({"id": "a", "source": "x", "mt": "y", "pe": "z", "extra": 1}),
        json.dumps({"id": "b", "source": "x", "mt": "y", "pe": "y"}),
        json.dumps({"id": "c", "source": "x", "mt": "y", "pe": "y"}),
        json.dumps({"source": "x", "mt": "y"}),
    ]
    units, report = parse_jsonl(jsonl(write_file("c.jsonl", "\n".join(lines) + "\n")))
    assert units[0] == unit("a", "x", "y", "z")
    assert (report.accepted, report.rejected) == (3, 1)
    assert report.rejection_reasons == (("line 4", "missing pe"),)


def test_jsonl_invalid_line_is_rejected(write_file):
    text = '{"id": "a", "source": "x", "mt": "y", "pe": "z"}\n{not json\n'
    _, report = parse_jsonl(jsonl(write_file("c.jsonl", text)))
    assert report.rejected == 1
    assert report.rejection_reasons[0][1].startswith("invalid JSON")


def test_jsonl_write_then_parse(tmp_path):
    units = [unit("a", "Ciao\tmondo", "x", "y"), unit("b", "Perché?", "z", "z")]
    path = tmp_path / "corpus.jsonl"
    write_jsonl(units, path)
    parsed, _ = parse_jsonl(jsonl(path))
    assert parsed == units


def test_fingerprint_tracks_content():
    units = [unit("a", "x", "y", "z")]
    assert corpus_fingerprint(units) == corpus_fingerprint([unit("a", "x", "y", "z")])
    assert corpus_fingerprint(units) != corpus_fingerprint([unit("a", "x", "y", "zz")])
    assert corpus_fingerprint(units) != corpus_fingerprint([unit("b", "x", "y", "z")])


def test_tmx_pair_join(write_file):
    mt = write_file("mt.tmx", tmx_document([("t1", "The cat.", "Il gato."), ("t2", "Hi.", "Ciao.")]))
    pe = write_file("pe.tmx", tmx_document([("t1", "The cat.", "Il gatto.")]))
    units, report = parse_tmx_pair(
        CorpusFile(mt, CorpusFormat.TMX_PAIR, EN_IT), CorpusFile(pe, CorpusFormat.TMX_PAIR, EN_IT)
    )
    assert units == [unit("t1", "The cat.", "Il gato.", "Il gatto.")]
    assert report.rejection_reasons == (("mt.tmx tuid t2", "unmatched tuid"),)


def test_tmx_counts_matched_and_unmatched(write_file):
    matched = [(f"t{i}", f"s{i}", f"m{i}") for i in range(10)]
    mt = write_file("mt.tmx", tmx_document(matched + [("only-mt", "s", "m")]))
    pe = write_file("pe.tmx", tmx_document(matched + [("only-pe", "s", "p")]))
    _, report = parse_corpus(
        CorpusFile(mt, CorpusFormat.TMX_PAIR, EN_IT), CorpusFile(pe, CorpusFormat.TMX_PAIR, EN_IT)
    )
    assert (report.accepted, report.rejected) == (10, 2)


def test_tmx_rejects_missing_tuid_and_language_mismatch(write_file):
    doc = tmx_document([(None, "s", "m"), ("t1", "s", "m")])
    mt = write_file("mt.tmx", doc)
    pe = write_file("pe.tmx", tmx_document([("t1", "s", "m")], target_lang="de"))
    units, report = parse_tmx_pair(
        CorpusFile(mt, CorpusFormat.TMX_PAIR, EN_IT), CorpusFile(pe, CorpusFormat.TMX_PAIR, EN_IT)
    )
    assert units == []
    reasons = [reason for _, reason in report.rejection_reasons]
    assert "missing tuid" in reasons
    assert "language code mismatch with en-it: de" in reasons
    assert report.rejected == 2


def test_tmx_inline_markup_keeps_text(write_file):
    doc = tmx_document([("t1", "Press <bpt i='1'>&lt;b&gt;</bpt>OK", "Premi OK")])
    mt = write_file("mt.tmx", doc)
    units, _ = parse_tmx_pair(
        CorpusFile(mt, CorpusFormat.TMX_PAIR, EN_IT), CorpusFile(mt, CorpusFormat.TMX_PAIR, EN_IT)
    )
    assert units[0].source == "Press <b>OK"


def test_tmx_malformed_is_fatal(write_file):
    path = write_file("bad.tmx", "<tmx><body><tu>")
    with pytest.raises(IngestError):
        parse_tmx_pair(
            CorpusFile(path, CorpusFormat.TMX_PAIR, EN_IT), CorpusFile(path, CorpusFormat.TMX_PAIR, EN_IT)
        )


def test_validate_corpus():
    report = validate_corpus([unit("u1"), unit("u1"), unit("u2", source="   ")])
    assert report.accepted == 1
    assert [reason for _, reason in report.rejection_reasons] == ["duplicate id", "empty source"]


def test_filter_valid_keeps_first_occurrence():
    first, second = unit("u1", mt="a"), unit("u1", mt="b")
    kept, report = filter_valid([first, second, unit("u2")])
    assert kept == [first, unit("u2")]
    assert report.accepted == 2


def test_validate_clean_corpus():
    units = [unit(f"u{i}") for i in range(25)]
    assert validate_corpus(units).accepted == 25
