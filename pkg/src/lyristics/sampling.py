"""Experiment dataset construction: 10 lyricists x 10 songs, split 6/2/2.

Homogenous sampling draws all ten candidates from one entropy group;
heterogenous sampling draws two from each of the five groups, concatenated
in group order. Every draw is a Fisher-Yates shuffle driven by a PCG64
stream seeded per dataset, so any dataset is reproducible from its seed
alone, on any platform.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Corpus
from .errors import DataError, GroupTooSmallError
from .grouping import Grouping

N_CANDIDATES = 10
SONGS_PER_LYRICIST = 10
SPLIT_SIZES = (6, 2, 2)  # train / validation / test
RNG_NAME = "pcg64-fisher-yates"


@dataclass(frozen=True)
class SplitSongs:
    train: tuple[str, ...]
    val: tuple[str, ...]
    test: tuple[str, ...]

    @property
    def all(self) -> tuple[str, ...]:
        return self.train + self.val + self.test


@dataclass(frozen=True)
class ExperimentDataset:
    dataset_id: str
    candidate_lyricists: tuple[str, ...]
    splits: dict[str, SplitSongs]  # keyed by lyricist id, one entry per candidate
    provenance: dict

    def target_index(self, lyricist_id: str) -> int:
        return self.candidate_lyricists.index(lyricist_id)

    def validate(self, corpus: Corpus) -> None:
        if len(self.candidate_lyricists) != N_CANDIDATES:
            raise DataError(f"dataset {self.dataset_id}: expected {N_CANDIDATES} candidates")
        if set(self.splits) != set(self.candidate_lyricists):
            raise DataError(f"dataset {self.dataset_id}: splits do not match candidates")
        for lid, split in self.splits.items():
            sizes = (len(split.train), len(split.val), len(split.test))
            if sizes != SPLIT_SIZES:
                raise DataError(f"dataset {self.dataset_id}: split sizes {sizes} != {SPLIT_SIZES}")
            if len(set(split.all)) != SONGS_PER_LYRICIST:
                raise DataError(f"dataset {self.dataset_id}: overlapping splits for {lid}")
            for song_id in split.all:
                if corpus.song(song_id).lyricist_id != lid:
                    raise DataError(
                        f"dataset {self.dataset_id}: song {song_id} not written by {lid}"
                    )

    def to_dict(self) -> dict:
        return {
            "dataset_id": self.dataset_id,
            "candidate_lyricists": list(self.candidate_lyricists),
            "lyricists": [
                {
                    "lyricist_id": lid,
                    "train": list(self.splits[lid].train),
                    "val": list(self.splits[lid].val),
                    "test": list(self.splits[lid].test),
                }
                for lid in self.candidate_lyricists
            ],
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentDataset":
        splits = {
            entry["lyricist_id"]: SplitSongs(
                train=tuple(entry["train"]),
                val=tuple(entry["val"]),
                test=tuple(entry["test"]),
            )
            for entry in data["lyricists"]
        }
        return cls(
            dataset_id=data["dataset_id"],
            candidate_lyricists=tuple(data["candidate_lyricists"]),
            splits=splits,
            provenance=dict(data["provenance"]),
        )


def save_dataset(dataset: ExperimentDataset, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(dataset.to_dict(), fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")


def load_dataset(path) -> ExperimentDataset:
    with open(path, encoding="utf-8") as fh:
        return ExperimentDataset.from_dict(json.load(fh))


def _shuffled(items, rng) -> list:
    """Fisher-Yates shuffle using rng.integers; fully pinned by the stream."""
    arr = list(items)
    for i in range(len(arr) - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        arr[i], arr[j] = arr[j], arr[i]
    return arr


def _eligible(corpus: Corpus, grouping: Grouping, group_index: int) -> list[str]:
    members = grouping.groups[group_index]
    return sorted(
        lid for lid in members
        if len(corpus.by_lyricist.get(lid, ())) >= SONGS_PER_LYRICIST
    )


def _pick_songs(corpus: Corpus, lyricist_id: str, rng) -> SplitSongs:
    song_ids = sorted(corpus.by_lyricist[lyricist_id])
    chosen = _shuffled(song_ids, rng)[:SONGS_PER_LYRICIST]
    order = _shuffled(chosen, rng)
    a, b = SPLIT_SIZES[0], SPLIT_SIZES[0] + SPLIT_SIZES[1]
    return SplitSongs(train=tuple(order[:a]), val=tuple(order[a:b]), test=tuple(order[b:]))


def _assemble(corpus, candidates, rng, dataset_id, provenance) -> ExperimentDataset:
    splits = {lid: _pick_songs(corpus, lid, rng) for lid in candidates}
    dataset = ExperimentDataset(
        dataset_id=dataset_id,
        candidate_lyricists=tuple(candidates),
        splits=splits,
        provenance=provenance,
    )
    dataset.validate(corpus)
    return dataset


def sample_homogenous(
    corpus: Corpus,
    grouping: Grouping,
    group_index: int,
    rng_seed: int,
    dataset_id: str | None = None,
) -> ExperimentDataset:
    """Ten candidates drawn without replacement from a single group."""
    pool = _eligible(corpus, grouping, group_index)
    if len(pool) < N_CANDIDATES:
        raise GroupTooSmallError(
            f"group {group_index} has {len(pool)} eligible lyricist(s); "
            f"need {N_CANDIDATES}"
        )
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    candidates = _shuffled(pool, rng)[:N_CANDIDATES]
    dataset_id = dataset_id or f"homogenous-{grouping.method}-g{group_index}-seed{rng_seed}"
    provenance = {
        "grouping_method": grouping.method,
        "sampling_mode": "homogenous",
        "source_groups": [group_index],
        "rng_seed": rng_seed,
        "rng": RNG_NAME,
    }
    return _assemble(corpus, candidates, rng, dataset_id, provenance)


def sample_heterogenous(
    corpus: Corpus,
    grouping: Grouping,
    rng_seed: int,
    dataset_id: str | None = None,
) -> ExperimentDataset:
    """Two candidates per group, concatenated in group order 0..4."""
    rng = np.random.Generator(np.random.PCG64(rng_seed))
    candidates: list[str] = []
    per_group = N_CANDIDATES // 5
    for group_index in range(5):
        pool = _eligible(corpus, grouping, group_index)
        if len(pool) < per_group:
            raise GroupTooSmallError(
                f"group {group_index} has {len(pool)} eligible lyricist(s); "
                f"need {per_group}"
            )
        candidates.extend(_shuffled(pool, rng)[:per_group])
    dataset_id = dataset_id or f"heterogenous-{grouping.method}-seed{rng_seed}"
    provenance = {
        "grouping_method": grouping.method,
        "sampling_mode": "heterogenous",
        "source_groups": [0, 1, 2, 3, 4],
        "rng_seed": rng_seed,
        "rng": RNG_NAME,
    }
    return _assemble(corpus, candidates, rng, dataset_id, provenance)


DEFAULT_REPETITIONS = {"homogenous": 10, "heterogenous": 50}


def plan_experiment(
    corpus: Corpus,
    grouping: Grouping,
    mode: str,
    repetitions: int | None = None,
    base_seed: int = 0,
) -> list[ExperimentDataset]:
    """Deterministic list of datasets for one grouping/sampling combination.

    The dataset at plan position i is drawn from an independent stream seeded
    base_seed + i, so every dataset is reproducible from (base_seed, index)
    and no two datasets in a plan share a sampling stream. Homogenous mode
    runs the repetitions once per group (5 * reps datasets, positions in
    group-major order); heterogenous runs them once.
    """
    if mode not in DEFAULT_REPETITIONS:
        raise DataError(f"unknown sampling mode {mode!r}")
    reps = DEFAULT_REPETITIONS[mode] if repetitions is None else repetitions
    if reps < 1:
        raise DataError(f"repetitions must be >= 1, got {reps}")
    datasets: list[ExperimentDataset] = []
    if mode == "homogenous":
        for group_index in range(5):
            for r in range(reps):
                datasets.append(sample_homogenous(
                    corpus, grouping, group_index, base_seed + group_index * reps + r,
                    dataset_id=f"homogenous-{grouping.method}-g{group_index}-r{r:02d}",
                ))
    else:
        for r in range(reps):
            datasets.append(sample_heterogenous(
                corpus, grouping, base_seed + r,
                dataset_id=f"heterogenous-{grouping.method}-r{r:02d}",
            ))
    return datasets
