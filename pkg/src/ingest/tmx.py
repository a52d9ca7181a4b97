"""Paired TMX input.

A TMX unit holds a source and a target only, so a triple needs two documents joined on tuid:
the MT export (source + raw MT) and the post-edited export (source + PE).
"""

import logging
from collections import OrderedDict

from lxml import etree

from corpus.text import normalize_text
from corpus.units import TranslationUnit
from ingest.report import IngestError, ReportBuilder

XML_LANG = "{http://www.w3.org/XML/1998/namespace}lang"


def lang_matches(lang, code):
    """True if a variant language tag falls under a declared code (en-US matches en)."""
    lang = (lang or "").lower().replace("_", "-")
    code = code.lower().replace("_", "-")
    return lang == code or lang.startswith(code + "-")


def segment_text(tuv):
    """Plain text of the seg element. Inline markup is dropped, its text content kept."""
    seg = tuv.find("seg")
    if seg is None:
        return None
    return "".join(seg.itertext())


def read_tmx(file):
    """Read one TMX document into source/target text keyed by tuid.

    Returns:
        (OrderedDict tuid -> (source_text, target_text), list of (locator, reason, tuid)).

    Raises:
        IngestError: unreadable or malformed XML, or a tuid repeated in the document.
    """
    parser = etree.XMLParser(resolve_entities=False, no_network=True)
    try:
        root = etree.parse(str(file.path), parser).getroot()
    except etree.XMLSyntaxError as e:
        raise IngestError(f"malformed TMX {file.path}: {e}") from e
    except OSError as e:
        raise IngestError(f"unable to read {file.path}: {e}") from e

    units = OrderedDict()
    rejections = []
    pair = file.lang_pair
    for position, tu in enumerate(root.iter("tu"), start=1):
        tuid = tu.get("tuid")
        locator = f"{file.path.name} tu {position}"
        if not tuid:
            rejections.append((locator, "missing tuid", None))
            continue
        locator = f"{file.path.name} tuid {tuid}"
        if tuid in units or any(r[2] == tuid for r in rejections):
            raise IngestError(f"{file.path}: duplicate tuid '{tuid}'")
        sources, targets, others = [], [], []
        for tuv in tu.iter("tuv"):
            lang = tuv.get(XML_LANG) or tuv.get("lang")
            if lang_matches(lang, pair.source):
                sources.append(segment_text(tuv))
            elif lang_matches(lang, pair.target):
                targets.append(segment_text(tuv))
            else:
                others.append(lang)
        if others:
            rejections.append((locator, f"language code mismatch with {pair}: {others[0]}", tuid))
        elif len(sources) != 1 or len(targets) != 1 or None in sources + targets:
            rejections.append((locator, "expected one source and one target variant", tuid))
        else:
            units[tuid] = (sources[0], targets[0])
    logging.info(f"Read {len(units)} usable units from {file.path}")
    return units, rejections


def parse_tmx_pair(mt_file, pe_file):
    """Join an MT export and a post-edited export on tuid.

    Source and MT come from mt_file, PE from the target variant of pe_file. A tuid found in
    only one of the files is rejected as unmatched.

    Returns:
        (list of TranslationUnit, IngestReport).
    """
    mt_units, mt_rejections = read_tmx(mt_file)
    pe_units, pe_rejections = read_tmx(pe_file)
    builder = ReportBuilder(f"{mt_file.path.name}+{pe_file.path.name}")
    for locator, reason, _ in mt_rejections + pe_rejections:
        builder.reject(locator, reason)
    mt_rejected = {tuid for _, _, tuid in mt_rejections if tuid}
    pe_rejected = {tuid for _, _, tuid in pe_rejections if tuid}

    units = []
    for tuid, (source, mt) in mt_units.items():
        locator = f"{mt_file.path.name} tuid {tuid}"
        if tuid not in pe_units:
            # Already counted when its counterpart was rejected.
            if tuid not in pe_rejected:
                builder.reject(locator, "unmatched tuid")
            continue
        if not normalize_text(source):
            builder.reject(locator, "empty source")
            continue
        unit = TranslationUnit(tuid, source, mt, pe_units[tuid][1], mt_file.lang_pair)
        builder.accept(unit)
        units.append(unit)
    for tuid in pe_units:
        if tuid not in mt_units and tuid not in mt_rejected:
            builder.reject(f"{pe_file.path.name} tuid {tuid}", "unmatched tuid")
    return units, builder.build(mt_file.declared_count)
