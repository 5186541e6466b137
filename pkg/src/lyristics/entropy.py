"""Lyricist-singer entropy: per-lyricist Shannon entropy over singers.

A lyricist who writes for a single singer has entropy exactly 0; spreading
songs across many singers pushes entropy toward log(number of singers).
The plug-in estimator is used directly on empirical counts, no smoothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .corpus import Corpus
from .errors import DataError, EmptyDistributionError, UnknownLyricistError

BASES = {"natural": math.e, "2": 2.0, "10": 10.0}


@dataclass(frozen=True)
class LyricistStats:
    lyricist_id: str
    song_count: int
    singer_counts: dict[str, int]
    entropy: float


def singer_distribution(corpus: Corpus, lyricist_id: str) -> dict[str, int]:
    """Count the lyricist's songs per singer; only singers present appear."""
    if lyricist_id not in corpus.by_lyricist:
        raise UnknownLyricistError(f"unknown lyricist {lyricist_id!r}")
    counts: dict[str, int] = {}
    for song_id in corpus.by_lyricist[lyricist_id]:
        singer = corpus.song(song_id).singer_id
        counts[singer] = counts.get(singer, 0) + 1
    return counts


def lyricist_singer_entropy(distribution: dict[str, int], base: str = "natural") -> float:
    """Shannon entropy of the normalized singer distribution.

    Terms are summed over singers in ascending id order with compensated
    (Kahan) accumulation, so the result is bit-for-bit reproducible across
    platforms. Absent singers contribute nothing by construction.
    """
    if not distribution:
        raise EmptyDistributionError("singer distribution is empty")
    if any(c < 1 for c in distribution.values()):
        raise DataError("singer counts must be >= 1")
    total = sum(distribution.values())
    acc = 0.0
    comp = 0.0
    for singer in sorted(distribution):
        p = distribution[singer] / total
        term = p * math.log(p)
        y = term - comp
        t = acc + y
        comp = (t - acc) - y
        acc = t
    h = -acc
    if h == 0.0:  # normalize -0.0 from the single-singer case
        return 0.0
    if base != "natural":
        try:
            h /= math.log(BASES[base])
        except KeyError:
            raise DataError(f"unknown log base {base!r}; use natural, 2, or 10") from None
    return h


def compute_stats(corpus: Corpus, base: str = "natural") -> list[LyricistStats]:
    """Per-lyricist statistics for every lyricist in the corpus."""
    stats = []
    for lyricist_id in corpus.lyricist_ids:
        counts = singer_distribution(corpus, lyricist_id)
        stats.append(LyricistStats(
            lyricist_id=lyricist_id,
            song_count=sum(counts.values()),
            singer_counts=counts,
            entropy=lyricist_singer_entropy(counts, base=base),
        ))
    return stats


def entropy_histogram(stats, bin_width: float) -> list[tuple[float, int]]:
    """Histogram over half-open bins [k*w, (k+1)*w).

    Every lyricist lands in exactly one bin; empty bins between the lowest
    and highest occupied bins are reported with count 0.
    """
    if bin_width <= 0:
        raise DataError(f"bin_width must be positive, got {bin_width}")
    if not stats:
        return []
    indices = [int(math.floor(s.entropy / bin_width)) for s in stats]
    lo, hi = min(indices), max(indices)
    counts = {k: 0 for k in range(lo, hi + 1)}
    for k in indices:
        counts[k] += 1
    return [(k * bin_width, counts[k]) for k in range(lo, hi + 1)]
