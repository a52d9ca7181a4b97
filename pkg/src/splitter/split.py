import json
import logging
from dataclasses import dataclass
from decimal import Decimal, ROUND_HALF_UP
from typing import Tuple

import numpy as np

from corpus.units import LengthBucket, bucket_for

MAX_SEED = 2**64 - 1


class SplitError(Exception):
    """Invalid split request or a split that does not match its corpus."""


@dataclass(frozen=True)
class BucketAudit:
    bucket: LengthBucket
    train_count: int
    test_count: int


@dataclass(frozen=True)
class DatasetSplit:
    train_ids: Tuple[str, ...]
    test_ids: Tuple[str, ...]
    ratio: float
    seed: int
    bucket_audit: Tuple[BucketAudit, ...]

    def to_dict(self):
        return {
            "ratio": self.ratio,
            "seed": self.seed,
            "buckets": [
                {
                    "index": audit.bucket.index,
                    "lower": audit.bucket.lower,
                    "upper": audit.bucket.upper,
                    "train": audit.train_count,
                    "test": audit.test_count,
                }
                for audit in self.bucket_audit
            ],
            "train_ids": list(self.train_ids),
            "test_ids": list(self.test_ids),
        }

    @classmethod
    def from_dict(cls, data):
        audit = tuple(
            BucketAudit(LengthBucket(b["index"], b["lower"], b["upper"]), b["train"], b["test"])
            for b in data["buckets"]
        )
        return cls(
            tuple(data["train_ids"]), tuple(data["test_ids"]), data["ratio"], data["seed"], audit
        )

    @property
    def buckets(self):
        return tuple(audit.bucket for audit in self.bucket_audit)


@dataclass(frozen=True)
class BucketDistribution:
    bucket: LengthBucket
    train_count: int
    test_count: int
    # Share of the train (test) set that falls in this bucket.
    train_share: float
    test_share: float
    expected_test: float
    flagged: bool


def bucket_test_count(bucket_size, ratio):
    """Round-half-up of (1 - ratio) * bucket_size, computed in decimal to avoid 0.4999... drift."""
    exact = (Decimal(1) - Decimal(str(ratio))) * bucket_size
    return int(exact.quantize(Decimal(1), rounding=ROUND_HALF_UP))


def bucket_rng(seed, bucket_index, stream=0):
    """Independent deterministic stream per (bucket, purpose), fully determined by the seed."""
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(bucket_index, stream))
    return np.random.Generator(np.random.PCG64(sequence))


def check_seed(seed):
    if not isinstance(seed, (int, np.integer)) or not 0 <= seed <= MAX_SEED:
        raise SplitError(f"seed must be a 64-bit unsigned integer, got {seed}")


def group_by_bucket(segments, buckets):
    """Map bucket index -> ids sorted ascending."""
    groups = {bucket.index: [] for bucket in buckets}
    for segment in segments:
        groups[bucket_for(segment.source_length, buckets).index].append(segment.id)
    for ids in groups.values():
        ids.sort()
    return groups


def stratified_split(segments, ratio, seed, buckets):
    """Length-stratified train/test split.

    Within each bucket the ids are sorted, shuffled with a generator seeded from (seed, bucket)
    and the first round-half-up((1 - ratio) * |bucket|) go to test.

    Args:
        segments: list of LabeledSegment.
        ratio: train fraction, 0 < ratio < 1.
        seed: 64-bit unsigned integer.
        buckets: LengthBucket partition.

    Returns:
        DatasetSplit, ids ordered by bucket index then shuffled order.

    Raises:
        SplitError: ratio out of range, bad seed or empty corpus.
    """
    if not 0 < ratio < 1:
        raise SplitError(f"ratio must be strictly between 0 and 1, got {ratio}")
    check_seed(seed)
    if not segments:
        raise SplitError("cannot split an empty corpus")
    groups = group_by_bucket(segments, buckets)

    train_ids, test_ids, audit = [], [], []
    for bucket in buckets:
        ids = groups[bucket.index]
        order = bucket_rng(int(seed), bucket.index).permutation(len(ids))
        shuffled = [ids[i] for i in order]
        n_test = bucket_test_count(len(ids), ratio)
        test_ids.extend(shuffled[:n_test])
        train_ids.extend(shuffled[n_test:])
        audit.append(BucketAudit(bucket, len(ids) - n_test, n_test))
    logging.info(
        f"Split {len(segments)} segments into {len(train_ids)} train / {len(test_ids)} test "
        f"(ratio {ratio}, seed {seed})"
    )
    return DatasetSplit(tuple(train_ids), tuple(test_ids), ratio, int(seed), tuple(audit))


def verify_distribution(split, segments, buckets):
    """Compare per-bucket train and test shares of a split against its corpus.

    A bucket is flagged when its test count is more than one segment away from
    (1 - ratio) * |bucket|.

    Raises:
        SplitError: the split references an id not in the corpus, or misses one.
    """
    corpus_ids = {segment.id for segment in segments}
    train, test = set(split.train_ids), set(split.test_ids)
    unknown = (train | test) - corpus_ids
    if unknown:
        raise SplitError(f"split references unknown id '{sorted(unknown)[0]}'")
    missing = corpus_ids - train - test
    if missing:
        raise SplitError(f"split does not assign id '{sorted(missing)[0]}'")

    groups = group_by_bucket(segments, buckets)
    rows = []
    for bucket in buckets:
        ids = groups[bucket.index]
        n_train = sum(1 for i in ids if i in train)
        n_test = sum(1 for i in ids if i in test)
        expected = float((Decimal(1) - Decimal(str(split.ratio))) * len(ids))
        rows.append(
            BucketDistribution(
                bucket=bucket,
                train_count=n_train,
                test_count=n_test,
                train_share=n_train / len(train) if train else 0.0,
                test_share=n_test / len(test) if test else 0.0,
                expected_test=expected,
                flagged=abs(n_test - expected) > 1,
            )
        )
    flagged = [str(row.bucket) for row in rows if row.flagged]
    if flagged:
        logging.warning(f"Test share off in length buckets: {', '.join(flagged)}")
    return rows


def save_split(split, path):
    with open(path, "w", encoding="utf-8") as split_file:
        json.dump(split.to_dict(), split_file, indent=2)


def load_split(path):
    try:
        with open(path, encoding="utf-8") as split_file:
            return DatasetSplit.from_dict(json.load(split_file))
    except (OSError, ValueError, KeyError, TypeError) as e:
        raise SplitError(f"cannot read split {path}: {e!r}") from e


if __name__ == "__main__":
    """Split a small synthetic corpus and print the per-bucket audit."""
    from constants.config import DEFAULT_BUCKET_BOUNDS, DEFAULT_SEED, DEFAULT_SPLIT_RATIO
    from corpus.text import label_corpus
    from corpus.units import LangPair, TranslationUnit, make_buckets

    logging.basicConfig(level=logging.INFO)
    buckets = make_buckets(DEFAULT_BUCKET_BOUNDS)
    en_it = LangPair("en", "it")
    units = [
        TranslationUnit(f"u{i:04d}", " ".join(["word"] * (3 + i % 45)), f"mt {i}", f"mt {i}", en_it)
        for i in range(842)
    ]
    split = stratified_split(label_corpus(units, buckets), DEFAULT_SPLIT_RATIO, DEFAULT_SEED, buckets)
    for audit in split.bucket_audit:
        print(f"{audit.bucket}: train {audit.train_count}, test {audit.test_count}")
