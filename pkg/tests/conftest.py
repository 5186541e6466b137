"""Shared corpus builders for the test suite."""

from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for the oracles module

from lyristics.corpus import Corpus, SongRecord


def make_corpus(spec, lyrics: str = "la la la") -> Corpus:
    """Corpus from {lyricist_id: [singer_id, ...]} with one song per entry."""
    songs = []
    counter = 0
    for lyricist_id, singer_ids in spec.items():
        for singer_id in singer_ids:
            songs.append(
                SongRecord(
                    song_id=f"s{counter:04d}",
                    lyricist_id=lyricist_id,
                    singer_id=singer_id,
                    lyrics=f"{lyrics} {counter}",
                )
            )
            counter += 1
    return Corpus.from_songs(songs)


def marker_corpus(n_lyricists: int = 10, n_songs: int = 12, n_singers: int = 1) -> Corpus:
    """Linearly separable corpus: every song repeats its lyricist's marker."""
    songs = []
    for i in range(n_lyricists):
        marker = f"marker{i:02d}"
        for t in range(n_songs):
            songs.append(
                SongRecord(
                    song_id=f"m{i:02d}-{t:02d}",
                    lyricist_id=f"lyr{i:02d}",
                    singer_id=f"sng{i % max(n_singers, 1):02d}",
                    lyrics=f"{marker} {marker} filler{t} common words here",
                )
            )
    return Corpus.from_songs(songs)


@pytest.fixture
def tiny_corpus() -> Corpus:
    return make_corpus(
        {
            "alice": ["x", "x", "x"],
            "bob": ["x", "y", "y", "z"],
            "carol": ["q"],
        }
    )


@pytest.fixture
def separable_corpus() -> Corpus:
    return marker_corpus()
