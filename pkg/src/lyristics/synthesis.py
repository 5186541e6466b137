"""Synthetic corpora with controllable singer influence.

Each lyricist and each singer owns a private slice of the vocabulary; song
tokens are drawn from the mixture

    alpha * lyricist_style + beta * singer_style + (1 - alpha - beta) * background

where each style puts most of its mass uniformly on its private slice and
the background is uniform over the whole vocabulary. Raising beta makes
singer identity dominate the text, which is the regime where classification
performance should fall as lyricist-singer entropy rises.

Tokens are synthetic identifiers ("w0193"); no linguistic realism intended.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, SongRecord
from .errors import InvalidParamsError


@dataclass(frozen=True)
class SynthParams:
    n_lyricists: int = 20
    songs_per_lyricist: tuple[int, int] = (10, 20)
    # int: same count for everyone; (lo, hi): uniform draw per lyricist;
    # list of length n_lyricists: explicit per-lyricist singer counts
    singers_per_lyricist: object = 1
    vocab_size: int = 4000
    tokens_per_song: tuple[int, int] = (40, 60)
    alpha: float = 0.3
    beta: float = 0.6
    seed: int = 0
    singer_assignment: str = "iid"  # "iid" | "balanced" (round-robin)
    style_subset_size: int = 12
    style_mass: float = 0.9  # style mass on the sampled subset; rest uniform
    # style subsets are sampled from two dedicated pools at the front of the
    # vocabulary; smaller pools mean more subset overlap, hence harder
    # classification. None: 2 * (number of styles) * subset size.
    lyricist_pool: int | None = None
    singer_pool: int | None = None

    def __post_init__(self):
        if self.n_lyricists < 1:
            raise InvalidParamsError(f"n_lyricists must be >= 1, got {self.n_lyricists}")
        for name in ("songs_per_lyricist", "tokens_per_song"):
            lo, hi = getattr(self, name)
            if lo < 1 or hi < lo:
                raise InvalidParamsError(f"{name} range ({lo}, {hi}) is invalid")
        if self.alpha < 0 or self.beta < 0:
            raise InvalidParamsError("alpha and beta must be non-negative")
        if self.alpha + self.beta > 1 + 1e-12:
            raise InvalidParamsError(f"alpha + beta = {self.alpha + self.beta} exceeds 1")
        if not 0 <= self.style_mass <= 1:
            raise InvalidParamsError(f"style_mass must be in [0, 1], got {self.style_mass}")
        if self.vocab_size < 1 or self.style_subset_size < 1:
            raise InvalidParamsError("vocab_size and style_subset_size must be positive")
        if self.singer_assignment not in ("iid", "balanced"):
            raise InvalidParamsError(f"unknown singer_assignment {self.singer_assignment!r}")
        for name in ("lyricist_pool", "singer_pool"):
            pool = getattr(self, name)
            if pool is not None and pool < self.style_subset_size:
                raise InvalidParamsError(f"{name} {pool} is smaller than style_subset_size")

    def to_dict(self) -> dict:
        data = vars(self).copy()
        data["songs_per_lyricist"] = list(self.songs_per_lyricist)
        data["tokens_per_song"] = list(self.tokens_per_song)
        if isinstance(self.singers_per_lyricist, (list, tuple)):
            data["singers_per_lyricist"] = list(self.singers_per_lyricist)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "SynthParams":
        data = dict(data)
        for name in ("songs_per_lyricist", "tokens_per_song"):
            if name in data:
                data[name] = tuple(data[name])
        spl = data.get("singers_per_lyricist")
        if isinstance(spl, list) and len(spl) == 2 and data.get("n_lyricists") != 2:
            # two-element lists are ambiguous; treat as a range
            data["singers_per_lyricist"] = tuple(spl)
        return cls(**data)


def _singer_count(params: SynthParams, index: int, rng) -> int:
    spec = params.singers_per_lyricist
    if isinstance(spec, int):
        count = spec
    elif isinstance(spec, tuple) and len(spec) == 2 and all(isinstance(v, int) for v in spec):
        lo, hi = spec
        if lo < 1 or hi < lo:
            raise InvalidParamsError(f"singers_per_lyricist range ({lo}, {hi}) is invalid")
        count = int(rng.integers(lo, hi + 1))
    elif isinstance(spec, (list, tuple)):
        if len(spec) != params.n_lyricists:
            raise InvalidParamsError(
                f"singers_per_lyricist list has {len(spec)} entries for {params.n_lyricists} lyricists"
            )
        count = int(spec[index])
    else:
        raise InvalidParamsError(f"bad singers_per_lyricist spec: {spec!r}")
    if count < 1:
        raise InvalidParamsError(f"singer count for lyricist {index} must be >= 1, got {count}")
    return count


def generate_corpus(params: SynthParams) -> Corpus:
    """Deterministic synthetic corpus; same params and seed, same bytes.

    Every lyricist draws from its own spawned RNG substream, so per-lyricist
    generation order cannot affect the output.
    """
    streams = [
        np.random.default_rng(child)
        for child in np.random.SeedSequence(params.seed).spawn(params.n_lyricists)
    ]
    # singer counts resolve first so pool sizing can see the grand total
    counts = [_singer_count(params, i, streams[i]) for i in range(params.n_lyricists)]
    s = params.style_subset_size
    lyr_pool = params.lyricist_pool or 2 * params.n_lyricists * s
    sng_pool = params.singer_pool or 2 * sum(counts) * s
    if lyr_pool + sng_pool > params.vocab_size:
        raise InvalidParamsError(
            f"vocab_size {params.vocab_size} is too small for style pools "
            f"({lyr_pool} lyricist + {sng_pool} singer tokens)"
        )

    width = len(str(params.vocab_size - 1))
    songs = []
    for i in range(params.n_lyricists):
        rng = streams[i]
        lyricist_id = f"L{i:03d}"
        singer_ids = [f"S{i:03d}-{k:02d}" for k in range(counts[i])]
        lyr_subset = rng.choice(lyr_pool, size=s, replace=False)
        singer_subsets = [
            lyr_pool + rng.choice(sng_pool, size=s, replace=False) for _ in range(counts[i])
        ]
        n_songs = int(rng.integers(params.songs_per_lyricist[0], params.songs_per_lyricist[1] + 1))
        if params.singer_assignment == "balanced":
            picks = [t % counts[i] for t in range(n_songs)]
        else:
            picks = [int(v) for v in rng.integers(0, counts[i], n_songs)]
        for t in range(n_songs):
            sng_subset = singer_subsets[picks[t]]
            n_tokens = int(rng.integers(params.tokens_per_song[0], params.tokens_per_song[1] + 1))
            comp = rng.random(n_tokens)
            inner = rng.random(n_tokens)
            subset_pick = rng.integers(0, s, n_tokens)
            vocab_pick = rng.integers(0, params.vocab_size, n_tokens)
            on_style = inner < params.style_mass
            idx = np.where(
                comp < params.alpha,
                np.where(on_style, lyr_subset[subset_pick], vocab_pick),
                np.where(
                    comp < params.alpha + params.beta,
                    np.where(on_style, sng_subset[subset_pick], vocab_pick),
                    vocab_pick,
                ),
            )
            lyrics = " ".join(f"w{v:0{width}d}" for v in idx)
            songs.append(
                SongRecord(
                    song_id=f"syn-{i:03d}-{t:03d}",
                    lyricist_id=lyricist_id,
                    singer_id=singer_ids[picks[t]],
                    lyrics=lyrics,
                )
            )
    return Corpus.from_songs(songs)


# entropy ladder for the acceptance fixture: cycling singer counts
# 1,2,4,8,16 with 32 songs each gives exact entropies 0..ln 16
_HYPOTHESIS_LADDER = (1, 2, 4, 8, 16)


def hypothesis_params(seed: int = 0, alpha: float = 0.3, beta: float = 0.6) -> SynthParams:
    n = 100
    return SynthParams(
        n_lyricists=n,
        songs_per_lyricist=(32, 32),
        singers_per_lyricist=[_HYPOTHESIS_LADDER[i % len(_HYPOTHESIS_LADDER)] for i in range(n)],
        vocab_size=9000,
        tokens_per_song=(16, 24),
        alpha=alpha,
        beta=beta,
        seed=seed,
        singer_assignment="balanced",
        # tight lyricist pool: candidate subsets overlap, so lyricist style
        # alone cannot carry a 10-way classification; singer style can
        lyricist_pool=60,
        singer_pool=6000,
    )


def generate_hypothesis_corpus(seed: int = 0, alpha: float = 0.3, beta: float = 0.6) -> Corpus:
    """Fixed-recipe corpus where singer style dominates lyricist style.

    100 lyricists, 32 songs each, singer counts cycling 1/2/4/8/16 with
    balanced assignment, so the entropy ladder runs exactly from 0 to ln 16.
    """
    return generate_corpus(hypothesis_params(seed=seed, alpha=alpha, beta=beta))


def load_params(path) -> SynthParams:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidParamsError(f"params file {path} is not valid JSON: {exc}")
    if not isinstance(data, dict):
        raise InvalidParamsError(f"params file {path} must hold a JSON object")
    try:
        return SynthParams.from_dict(data)
    except TypeError as exc:
        raise InvalidParamsError(f"bad params in {path}: {exc}")
