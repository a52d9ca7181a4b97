import logging
from collections import Counter

from corpus.units import CorpusError, CorpusStats, Label, make_buckets
from constants.config import DEFAULT_BUCKET_BOUNDS


def corpus_stats(segments, buckets=None):
    """Summarize a labeled corpus.

    Args:
        segments: list of LabeledSegment.
        buckets: the LengthBucket partition to count against. Defaults to the configured one.

    Returns:
        CorpusStats with exact counts and the mean source length in tokens.

    Raises:
        CorpusError: empty corpus.
    """
    if not segments:
        raise CorpusError("cannot compute statistics of an empty corpus")
    buckets = buckets or make_buckets(DEFAULT_BUCKET_BOUNDS)
    labels = Counter(segment.label for segment in segments)
    by_bucket = Counter()
    for segment in segments:
        # Re-bucket against the requested partition rather than trusting the stored one.
        for bucket in buckets:
            if bucket.contains(segment.source_length):
                by_bucket[bucket.index] += 1
                break
        else:
            raise CorpusError(f"no bucket covers segment {segment.id}")
    stats = CorpusStats(
        n_units=len(segments),
        edit_count=labels[Label.EDIT],
        keep_count=labels[Label.KEEP],
        mean_source_length=sum(s.source_length for s in segments) / len(segments),
        per_bucket_counts=tuple((bucket, by_bucket[bucket.index]) for bucket in buckets),
    )
    logging.info(
        f"Corpus of {stats.n_units} units: {stats.edit_count} edit, {stats.keep_count} keep, "
        f"mean source length {stats.mean_source_length:.1f}"
    )
    return stats
