"""Song corpus ingestion, validation, indexing, and name-variant review.

A corpus is an immutable collection of songs, each attributed to exactly one
lyricist and one singer, indexed both ways. Loading enforces unique song ids
and non-empty lyrics; filtering and identity remapping return new corpora.
"""

from __future__ import annotations

import csv
import json
import logging
import unicodedata
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import (
    CorpusFormatError,
    DataError,
    DuplicateSongIdError,
    EmptyLyricsError,
    UnknownLyricistError,
)

log = logging.getLogger(__name__)

REQUIRED_FIELDS = ("song_id", "lyricist_id", "singer_id", "lyrics")
OPTIONAL_FIELDS = ("lyricist_name", "singer_name")


@dataclass(frozen=True)
class SongRecord:
    """One song: identifier, lyricist, singer, and the lyric text."""

    song_id: str
    lyricist_id: str
    singer_id: str
    lyrics: str
    lyricist_name: str | None = None
    singer_name: str | None = None


@dataclass(frozen=True)
class Corpus:
    """Immutable song collection with per-lyricist and per-singer indices."""

    songs: tuple[SongRecord, ...]
    by_lyricist: dict[str, frozenset[str]] = field(repr=False)
    by_singer: dict[str, frozenset[str]] = field(repr=False)
    _by_id: dict[str, SongRecord] = field(repr=False)

    @classmethod
    def from_songs(cls, songs) -> "Corpus":
        records = tuple(songs)
        by_id: dict[str, SongRecord] = {}
        by_lyricist: dict[str, set[str]] = {}
        by_singer: dict[str, set[str]] = {}
        for song in records:
            if not song.lyrics or not song.lyrics.strip():
                raise EmptyLyricsError(f"song {song.song_id!r} has empty lyrics")
            if song.song_id in by_id:
                raise DuplicateSongIdError(f"duplicate song_id {song.song_id!r}")
            by_id[song.song_id] = song
            by_lyricist.setdefault(song.lyricist_id, set()).add(song.song_id)
            by_singer.setdefault(song.singer_id, set()).add(song.song_id)
        return cls(
            songs=records,
            by_lyricist={k: frozenset(v) for k, v in by_lyricist.items()},
            by_singer={k: frozenset(v) for k, v in by_singer.items()},
            _by_id=by_id,
        )

    def __len__(self) -> int:
        return len(self.songs)

    @property
    def lyricist_ids(self) -> list[str]:
        return sorted(self.by_lyricist)

    @property
    def singer_ids(self) -> list[str]:
        return sorted(self.by_singer)

    def song(self, song_id: str) -> SongRecord:
        try:
            return self._by_id[song_id]
        except KeyError:
            raise DataError(f"unknown song_id {song_id!r}") from None

    def songs_of(self, lyricist_id: str) -> list[SongRecord]:
        if lyricist_id not in self.by_lyricist:
            raise UnknownLyricistError(f"unknown lyricist {lyricist_id!r}")
        return [self._by_id[sid] for sid in sorted(self.by_lyricist[lyricist_id])]

    def lyricist_name(self, lyricist_id: str) -> str | None:
        """Display name for a lyricist: first non-empty name in song order."""
        if lyricist_id not in self.by_lyricist:
            raise UnknownLyricistError(f"unknown lyricist {lyricist_id!r}")
        for song in self.songs:
            if song.lyricist_id == lyricist_id and song.lyricist_name:
                return song.lyricist_name
        return None

    def summary(self) -> dict:
        return {
            "n_songs": len(self.songs),
            "n_lyricists": len(self.by_lyricist),
            "n_singers": len(self.by_singer),
        }


def _song_from_mapping(row: dict, line: int) -> SongRecord:
    missing = [k for k in REQUIRED_FIELDS if row.get(k) in (None, "")]
    if missing:
        raise CorpusFormatError(f"missing field(s) {', '.join(missing)}", line=line)
    values = {k: str(row[k]) for k in REQUIRED_FIELDS}
    for k in OPTIONAL_FIELDS:
        v = row.get(k)
        values[k] = str(v) if v not in (None, "") else None
    if not values["lyrics"].strip():
        raise CorpusFormatError(f"song {values['song_id']!r} has empty lyrics", line=line)
    return SongRecord(**values)


def _iter_jsonl(path: Path):
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"invalid JSON ({exc.msg})", line=line_no) from None
            if not isinstance(row, dict):
                raise CorpusFormatError("row is not an object", line=line_no)
            yield _song_from_mapping(row, line_no)


def _iter_csv(path: Path):
    # Comma-separated, double-quote escaping, UTF-8, mandatory header row.
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise CorpusFormatError("empty file: missing header row", line=1)
        missing = [k for k in REQUIRED_FIELDS if k not in reader.fieldnames]
        if missing:
            raise CorpusFormatError(f"header missing column(s) {', '.join(missing)}", line=1)
        for row in reader:
            yield _song_from_mapping(row, reader.line_num)


def detect_format(path) -> str:
    suffix = Path(path).suffix.lower()
    if suffix in (".jsonl", ".ndjson"):
        return "jsonl"
    if suffix == ".csv":
        return "csv"
    raise CorpusFormatError(f"cannot infer format from suffix {suffix!r}; pass format explicitly")


def load_corpus(path, format: str | None = None) -> Corpus:
    """Load and validate a corpus from a JSONL or CSV file."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"corpus file not found: {path}")
    fmt = format or detect_format(path)
    if fmt == "jsonl":
        rows = _iter_jsonl(path)
    elif fmt == "csv":
        rows = _iter_csv(path)
    else:
        raise DataError(f"unknown corpus format {fmt!r}")
    return Corpus.from_songs(rows)


def save_corpus(corpus: Corpus, path, format: str | None = None) -> None:
    """Write a corpus back out; loading the result reproduces the corpus."""
    path = Path(path)
    fmt = format or detect_format(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "jsonl":
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for song in corpus.songs:
                row = {"song_id": song.song_id, "lyricist_id": song.lyricist_id,
                       "singer_id": song.singer_id, "lyrics": song.lyrics}
                if song.lyricist_name is not None:
                    row["lyricist_name"] = song.lyricist_name
                if song.singer_name is not None:
                    row["singer_name"] = song.singer_name
                fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
    elif fmt == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(REQUIRED_FIELDS + OPTIONAL_FIELDS)
            for song in corpus.songs:
                writer.writerow([song.song_id, song.lyricist_id, song.singer_id,
                                 song.lyrics, song.lyricist_name or "", song.singer_name or ""])
    else:
        raise DataError(f"unknown corpus format {fmt!r}")


def load_remap(path) -> dict[str, str]:
    """Read a two-column CSV (from_id, to_id) of manual identity merges."""
    path = Path(path)
    mapping: dict[str, str] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        for line_no, row in enumerate(reader, start=1):
            if not row or (line_no == 1 and row[:2] == ["from_id", "to_id"]):
                continue
            if len(row) < 2:
                raise CorpusFormatError("remap row needs two columns", line=line_no)
            mapping[row[0]] = row[1]
    return mapping


def apply_remap(corpus: Corpus, mapping: dict[str, str]) -> Corpus:
    """Rewrite lyricist ids through a manual merge map (chains resolved)."""
    resolved: dict[str, str] = {}
    for src in mapping:
        seen = {src}
        dst = mapping[src]
        while dst in mapping:
            if mapping[dst] in seen:
                raise DataError(f"remap cycle involving {src!r}")
            seen.add(dst)
            dst = mapping[dst]
        resolved[src] = dst
    songs = [
        replace(song, lyricist_id=resolved.get(song.lyricist_id, song.lyricist_id))
        for song in corpus.songs
    ]
    return Corpus.from_songs(songs)


def filter_min_songs(corpus: Corpus, min_songs: int = 10) -> Corpus:
    """Drop songs whose lyricist has fewer than min_songs in the input corpus.

    Counts are taken against the input in a single pass; removal does not
    cascade into re-counting.
    """
    if min_songs < 1:
        raise DataError(f"min_songs must be >= 1, got {min_songs}")
    keep = {lid for lid, sids in corpus.by_lyricist.items() if len(sids) >= min_songs}
    return Corpus.from_songs(s for s in corpus.songs if s.lyricist_id in keep)


def levenshtein(a: str, b: str) -> int:
    """Edit distance with unit insert/delete/substitute costs."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(min(
                previous[j] + 1,            # delete
                current[j - 1] + 1,         # insert
                previous[j - 1] + (ca != cb),  # substitute
            ))
        previous = current
    return previous[-1]


def find_name_variants(corpus: Corpus, max_dist: int = 1) -> list[tuple[str, str, int]]:
    """List lyricist pairs whose display names are within max_dist edits.

    Intended for human review; nothing is merged automatically. Names are
    NFC-normalized before comparison so composed/decomposed forms do not
    produce spurious distances. Lyricists without a display name are skipped
    and counted in a warning.
    """
    named: list[tuple[str, str]] = []
    skipped = 0
    for lid in corpus.lyricist_ids:
        name = corpus.lyricist_name(lid)
        if name is None:
            skipped += 1
            continue
        named.append((lid, unicodedata.normalize("NFC", name)))
    if skipped:
        log.warning("find_name_variants: skipped %d lyricist(s) without a display name", skipped)
    pairs: list[tuple[str, str, int]] = []
    for idx, (id_a, name_a) in enumerate(named):
        for id_b, name_b in named[idx + 1:]:
            if abs(len(name_a) - len(name_b)) > max_dist:
                continue
            dist = levenshtein(name_a, name_b)
            if dist <= max_dist:
                pairs.append((id_a, id_b, dist))
    pairs.sort(key=lambda p: (p[2], p[0], p[1]))
    return pairs


def write_name_variants(pairs, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["lyricist_id_a", "lyricist_id_b", "distance"])
        for id_a, id_b, dist in pairs:
            writer.writerow([id_a, id_b, dist])
