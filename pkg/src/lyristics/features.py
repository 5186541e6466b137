"""Tokenization and TF-IDF feature extraction for the built-in classifier.

Tokenization is Unicode-aware: text splits on whitespace and punctuation,
runs of letters split at script boundaries, and CJK ideographs and kana
become single-character tokens so pasted-together Japanese text still
yields usable tokens. Truncation keeps the first max_tokens tokens.
"""

from __future__ import annotations

import math
import unicodedata
from functools import lru_cache

import numpy as np

from .errors import DegenerateFeaturesError

# Scripts whose characters tokenize individually (no whitespace between words).
_SINGLE_CHAR_SCRIPTS = frozenset({"CJK", "HIRAGANA", "KATAKANA"})


@lru_cache(maxsize=None)
def _script_of(ch: str) -> str:
    name = unicodedata.name(ch, "")
    return name.split(" ", 1)[0] if name else "UNKNOWN"


def tokenize(text: str, max_tokens: int | None = None) -> list[str]:
    """Segment text into word tokens, truncated to max_tokens from the start.

    Digits are script-neutral and extend whatever run they touch, so
    identifiers like "mp3" stay whole.
    """
    tokens: list[str] = []
    run: list[str] = []
    run_script: str | None = None

    def flush():
        nonlocal run, run_script
        if run:
            tokens.append("".join(run))
        run = []
        run_script = None

    for ch in text.casefold():
        if not ch.isalnum():
            flush()
            continue
        if ch.isdigit():
            run.append(ch)
            continue
        script = _script_of(ch)
        if script in _SINGLE_CHAR_SCRIPTS:
            flush()
            tokens.append(ch)
            continue
        if run_script is not None and script != run_script:
            flush()
        run.append(ch)
        run_script = script
    flush()
    if max_tokens is not None:
        return tokens[:max_tokens]
    return tokens


def _features_of(tokens: list[str], char_ngrams: tuple[int, ...]) -> dict[str, int]:
    counts: dict[str, int] = {}
    for tok in tokens:
        key = "w=" + tok
        counts[key] = counts.get(key, 0) + 1
    if char_ngrams:
        joined = " ".join(tokens)
        for n in char_ngrams:
            for i in range(len(joined) - n + 1):
                key = f"c{n}=" + joined[i:i + n]
                counts[key] = counts.get(key, 0) + 1
    return counts


class TfidfVectorizer:
    """TF-IDF over word unigrams plus character n-grams.

    The vocabulary and document frequencies come from the fitted documents
    only; transforming unseen text drops out-of-vocabulary features. Rows
    are L2-normalized.
    """

    def __init__(self, word_unigrams: bool = True, char_ngrams: tuple[int, ...] = (2, 3)):
        if not word_unigrams and not char_ngrams:
            raise DegenerateFeaturesError("feature spec selects no features at all")
        self.word_unigrams = word_unigrams
        self.char_ngrams = tuple(char_ngrams)
        self.vocabulary: dict[str, int] = {}
        self.idf: np.ndarray | None = None

    def _counts(self, tokens: list[str]) -> dict[str, int]:
        counts = _features_of(tokens, self.char_ngrams)
        if not self.word_unigrams:
            counts = {k: v for k, v in counts.items() if not k.startswith("w=")}
        return counts

    def fit(self, token_lists: list[list[str]]) -> "TfidfVectorizer":
        doc_freq: dict[str, int] = {}
        for tokens in token_lists:
            for key in self._counts(tokens):
                doc_freq[key] = doc_freq.get(key, 0) + 1
        if not doc_freq:
            raise DegenerateFeaturesError("training documents produced an empty vocabulary")
        self.vocabulary = {key: idx for idx, key in enumerate(sorted(doc_freq))}
        n_docs = len(token_lists)
        self.idf = np.array(
            [math.log((1 + n_docs) / (1 + doc_freq[key])) + 1.0 for key in sorted(doc_freq)],
            dtype=np.float64,
        )
        return self

    def transform(self, token_lists: list[list[str]]) -> np.ndarray:
        if self.idf is None:
            raise DegenerateFeaturesError("vectorizer is not fitted")
        X = np.zeros((len(token_lists), len(self.vocabulary)), dtype=np.float64)
        for row, tokens in enumerate(token_lists):
            for key, count in self._counts(tokens).items():
                col = self.vocabulary.get(key)
                if col is not None:
                    X[row, col] = count
        X *= self.idf
        norms = np.linalg.norm(X, axis=1, keepdims=True)
        np.divide(X, norms, out=X, where=norms > 0)
        return X

    def fit_transform(self, token_lists: list[list[str]]) -> np.ndarray:
        return self.fit(token_lists).transform(token_lists)

    def to_dict(self) -> dict:
        return {
            "word_unigrams": self.word_unigrams,
            "char_ngrams": list(self.char_ngrams),
            "vocabulary": sorted(self.vocabulary, key=self.vocabulary.get),
            "idf": self.idf.tolist() if self.idf is not None else None,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TfidfVectorizer":
        vec = cls(word_unigrams=data["word_unigrams"], char_ngrams=tuple(data["char_ngrams"]))
        vec.vocabulary = {key: idx for idx, key in enumerate(data["vocabulary"])}
        vec.idf = np.array(data["idf"], dtype=np.float64) if data["idf"] is not None else None
        return vec
