import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Tuple

from splitter.split import SplitError, bucket_rng, check_seed, group_by_bucket

SUBSAMPLE_STREAM = 1


@dataclass(frozen=True)
class SubsamplePlan:
    sizes: Tuple[int, ...]
    seed: int

    def __post_init__(self):
        if not self.sizes:
            raise SplitError("subsample plan needs at least one size")
        if self.sizes[0] < 1 or any(a >= b for a, b in zip(self.sizes, self.sizes[1:])):
            raise SplitError(f"subsample sizes must be strictly ascending and positive: {self.sizes}")
        check_seed(self.seed)


def stratified_order(split, segments, seed):
    """Order the training ids so that every prefix keeps the bucket proportions.

    Each bucket is shuffled with the plan seed; the k-th id of a bucket of size n gets the
    position (2k + 1) / 2n. Merging all buckets by that position (bucket index breaks ties)
    gives prefixes whose per-bucket counts stay within one of proportional.
    """
    train = set(split.train_ids)
    train_segments = [segment for segment in segments if segment.id in train]
    if len(train_segments) != len(train):
        raise SplitError("split training ids do not match the corpus")
    groups = group_by_bucket(train_segments, split.buckets)

    keyed = []
    for bucket in split.buckets:
        ids = groups[bucket.index]
        order = bucket_rng(seed, bucket.index, SUBSAMPLE_STREAM).permutation(len(ids))
        for k, i in enumerate(order):
            keyed.append((Fraction(2 * k + 1, 2 * len(ids)), bucket.index, ids[i]))
    keyed.sort()
    return [unit_id for _, _, unit_id in keyed]


def subsample_train(split, plan, segments):
    """Nested, length-stratified training subsets for a training-set-size study.

    The test set is untouched and shared by every size.

    Returns:
        list of (size, list of train ids); each list is a prefix of the next larger one.

    Raises:
        SplitError: a requested size exceeds the training set.
    """
    if plan.sizes[-1] > len(split.train_ids):
        raise SplitError(
            f"requested {plan.sizes[-1]} training segments but only {len(split.train_ids)} exist"
        )
    order = stratified_order(split, segments, plan.seed)
    subsets = [(size, order[:size]) for size in plan.sizes]
    logging.info(f"Subsampled training sizes {list(plan.sizes)} with seed {plan.seed}")
    return subsets

