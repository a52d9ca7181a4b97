from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple


class CorpusError(Exception):
    """Corpus data violates a model invariant."""


class Label(Enum):
    """Whether a translation requires post-editing. EDIT is the positive class."""

    EDIT = "edit"
    KEEP = "keep"


@dataclass(frozen=True)
class LangPair:
    """Ordered language pair, e.g. en -> it."""

    source: str
    target: str

    def __post_init__(self):
        if not self.source or not self.target:
            raise CorpusError("language codes must be non-empty")
        if self.source.lower() == self.target.lower():
            raise CorpusError(f"source and target language are both '{self.source}'")

    @classmethod
    def parse(cls, text):
        """Build from 'en-it', 'en:it' or 'en>it'. Region subtags are kept ('en-US>it-IT')."""
        for sep in (">", ":"):
            if sep in text:
                source, target = text.split(sep, 1)
                return cls(source.strip(), target.strip())
        parts = text.split("-")
        if len(parts) != 2:
            raise CorpusError(f"cannot parse language pair '{text}'")
        return cls(parts[0].strip(), parts[1].strip())

    def __str__(self):
        return f"{self.source}-{self.target}"


@dataclass(frozen=True)
class TranslationUnit:
    id: str
    source: str
    mt: str
    pe: str
    lang_pair: LangPair

    def __post_init__(self):
        if not self.id:
            raise CorpusError("translation unit id must be non-empty")


@dataclass(frozen=True)
class LengthBucket:
    index: int
    lower: int
    # None means unbounded.
    upper: Optional[int]

    def contains(self, length):
        return length >= self.lower and (self.upper is None or length <= self.upper)

    def __str__(self):
        return f"{self.lower}+" if self.upper is None else f"{self.lower}-{self.upper}"


@dataclass(frozen=True)
class LabeledSegment:
    unit: TranslationUnit
    label: Label
    edit_distance: int
    normalized_distance: float
    length_bucket: LengthBucket
    source_length: int

    @property
    def id(self):
        return self.unit.id


@dataclass(frozen=True)
class CorpusStats:
    n_units: int
    edit_count: int
    keep_count: int
    mean_source_length: float
    # ((bucket, count), ...) in bucket order.
    per_bucket_counts: Tuple[Tuple[LengthBucket, int], ...]


def make_buckets(upper_bounds):
    """Build a length bucket partition of [1, inf) from ascending inclusive upper bounds.

    Args:
        upper_bounds: e.g. [5, 10, 20, 40] -> [1-5], [6-10], [11-20], [21-40], [41+].

    Raises:
        CorpusError: bounds are not strictly ascending positive integers.
    """
    bounds = list(upper_bounds)
    if any(b < 1 for b in bounds) or any(a >= b for a, b in zip(bounds, bounds[1:])):
        raise CorpusError(f"bucket bounds must be strictly ascending positive integers: {bounds}")
    buckets = []
    lower = 1
    for index, upper in enumerate(bounds):
        buckets.append(LengthBucket(index, lower, upper))
        lower = upper + 1
    buckets.append(LengthBucket(len(bounds), lower, None))
    return tuple(buckets)


def bucket_for(length, buckets):
    for bucket in buckets:
        if bucket.contains(length):
            return bucket
    raise CorpusError(f"no length bucket covers length {length}")
