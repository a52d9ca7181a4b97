import pytest

from corpus.text import label_corpus
from corpus.units import LangPair, TranslationUnit, make_buckets
from constants.config import DEFAULT_BUCKET_BOUNDS

EN_IT = LangPair("en", "it")
BUCKETS = make_buckets(DEFAULT_BUCKET_BOUNDS)


def unit(unit_id, source="The cat sleeps.", mt="Il gatto dorme.", pe=None, lang_pair=EN_IT):
    return TranslationUnit(unit_id, source, mt, mt if pe is None else pe, lang_pair)


def synthetic_segments(n, words_cycle=(3, 8, 15, 30, 50), edit_every=3):
    """n labeled segments spread over every default bucket; every edit_every-th needs editing."""
    units = []
    for i in range(n):
        words = words_cycle[i % len(words_cycle)]
        source = " ".join(f"w{j}" for j in range(words))
        mt = f"traduzione {i}"
        pe = mt + " corretta" if i % edit_every == 0 else mt
        units.append(unit(f"u{i:05d}", source, mt, pe))
    return label_corpus(units, BUCKETS)


@pytest.fixture
def write_file(tmp_path):
    def _write(name, text):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write
