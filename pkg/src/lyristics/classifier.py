"""Built-in lyric-lyricist classifier: TF-IDF + multinomial logistic regression.

Training is full-batch gradient descent on cross-entropy with an L2 penalty,
one step per epoch, followed by a validation-loss evaluation. An epoch whose
validation loss strictly exceeds the previous epoch's counts as a stopping
event; training stops once the configured number of events is reached, and
the returned weights are those of the epoch with the lowest validation loss.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import Corpus
from .errors import ConfigError
from .features import TfidfVectorizer, tokenize
from .sampling import ExperimentDataset


@dataclass(frozen=True)
class ClassifierConfig:
    max_tokens: int = 512
    max_epochs: int = 200
    patience_events: int = 3
    patience_mode: str = "cumulative"  # "cumulative" | "consecutive"
    learning_rate: float = 0.1
    l2_penalty: float = 1e-4
    word_unigrams: bool = True
    char_ngrams: tuple[int, ...] = (2, 3)
    rng_seed: int = 0
    halve_lr_on_increase: bool = False

    def __post_init__(self):
        if self.max_tokens < 1:
            raise ConfigError(f"max_tokens must be >= 1, got {self.max_tokens}")
        if self.patience_events < 1:
            raise ConfigError(f"patience_events must be >= 1, got {self.patience_events}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.l2_penalty < 0:
            raise ConfigError(f"l2_penalty must be >= 0, got {self.l2_penalty}")
        if self.patience_mode not in ("cumulative", "consecutive"):
            raise ConfigError(f"unknown patience_mode {self.patience_mode!r}")

    def to_dict(self) -> dict:
        data = vars(self).copy()
        data["char_ngrams"] = list(self.char_ngrams)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "ClassifierConfig":
        data = dict(data)
        if "char_ngrams" in data:
            data["char_ngrams"] = tuple(data["char_ngrams"])
        return cls(**data)


class EarlyStopping:
    """Counts validation-loss-increase events and tracks the best epoch.

    An event is an epoch whose validation loss strictly exceeds the previous
    epoch's. In cumulative mode events accumulate over the whole run; in
    consecutive mode the count resets on any epoch that is not an event.
    """

    def __init__(self, patience_events: int, mode: str = "cumulative"):
        self.patience_events = patience_events
        self.mode = mode
        self.epoch = 0
        self.events = 0
        self.best_epoch = 0
        self.best_loss = float("inf")
        self._prev_loss: float | None = None

    def update(self, val_loss: float) -> bool:
        """Record one epoch's validation loss; True means stop now."""
        self.epoch += 1
        if self._prev_loss is not None and val_loss > self._prev_loss:
            self.events += 1
        elif self.mode == "consecutive":
            self.events = 0
        self._prev_loss = val_loss
        if val_loss < self.best_loss:
            self.best_loss = val_loss
            self.best_epoch = self.epoch
        return self.events >= self.patience_events


def softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def cross_entropy_loss(W, b, X, y, l2_penalty=0.0):
    """Mean cross-entropy of labels y, plus (l2/2)*||W||^2 when penalized."""
    probs = softmax(X @ W.T + b)
    m = X.shape[0]
    nll = -np.log(np.clip(probs[np.arange(m), y], 1e-300, None)).mean()
    return nll + 0.5 * l2_penalty * float((W * W).sum())


def loss_and_grad(W, b, X, y, l2_penalty=0.0):
    """Objective value and its analytic gradient in (W, b)."""
    m = X.shape[0]
    probs = softmax(X @ W.T + b)
    nll = -np.log(np.clip(probs[np.arange(m), y], 1e-300, None)).mean()
    loss = nll + 0.5 * l2_penalty * float((W * W).sum())
    delta = probs.copy()
    delta[np.arange(m), y] -= 1.0
    delta /= m
    grad_W = delta.T @ X + l2_penalty * W
    grad_b = delta.sum(axis=0)
    return loss, grad_W, grad_b


@dataclass
class TrainedModel:
    """Weights plus the fitted vocabulary and the training trace."""

    candidates: tuple[str, ...]
    vectorizer: TfidfVectorizer
    W: np.ndarray
    b: np.ndarray
    config: ClassifierConfig
    trace: list[tuple[float, float]] = field(default_factory=list)  # (train, val) loss
    stopped_epoch: int = 0
    best_epoch: int = 0

    def _vector(self, lyrics: str) -> np.ndarray:
        tokens = tokenize(lyrics, self.config.max_tokens)
        return self.vectorizer.transform([tokens])[0]

    def predict(self, lyrics: str) -> np.ndarray:
        """Probability over the candidates, length len(candidates), sums to 1."""
        x = self._vector(lyrics)
        return softmax(self.W @ x + self.b)

    def predict_batch(self, texts) -> np.ndarray:
        token_lists = [tokenize(t, self.config.max_tokens) for t in texts]
        X = self.vectorizer.transform(token_lists)
        return softmax(X @ self.W.T + self.b)

    def save(self, path) -> None:
        meta = {
            "candidates": list(self.candidates),
            "config": self.config.to_dict(),
            "vectorizer": self.vectorizer.to_dict(),
            "trace": self.trace,
            "stopped_epoch": self.stopped_epoch,
            "best_epoch": self.best_epoch,
        }
        meta_bytes = np.frombuffer(json.dumps(meta, sort_keys=True).encode("utf-8"), dtype=np.uint8)
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as fh:
            np.savez_compressed(fh, W=self.W, b=self.b, meta=meta_bytes)

    @classmethod
    def load(cls, path) -> "TrainedModel":
        with np.load(path) as data:
            meta = json.loads(bytes(data["meta"]).decode("utf-8"))
            W = data["W"]
            b = data["b"]
        return cls(
            candidates=tuple(meta["candidates"]),
            vectorizer=TfidfVectorizer.from_dict(meta["vectorizer"]),
            W=W,
            b=b,
            config=ClassifierConfig.from_dict(meta["config"]),
            trace=[tuple(t) for t in meta["trace"]],
            stopped_epoch=meta["stopped_epoch"],
            best_epoch=meta["best_epoch"],
        )


def _dataset_texts(dataset: ExperimentDataset, corpus: Corpus, part: str):
    texts: list[str] = []
    labels: list[int] = []
    for idx, lid in enumerate(dataset.candidate_lyricists):
        for song_id in getattr(dataset.splits[lid], part):
            texts.append(corpus.song(song_id).lyrics)
            labels.append(idx)
    return texts, labels


def train(dataset: ExperimentDataset, corpus: Corpus, config: ClassifierConfig | None = None) -> TrainedModel:
    """Fit the built-in classifier on one experiment dataset.

    The TF-IDF vocabulary is fitted on the training split only; validation
    text is transformed with the fitted vocabulary. Weights start at zero,
    which makes training deterministic and label-permutation equivariant.
    """
    config = config or ClassifierConfig()
    dataset.validate(corpus)
    train_texts, train_labels = _dataset_texts(dataset, corpus, "train")
    val_texts, val_labels = _dataset_texts(dataset, corpus, "val")
    return train_texts_labels(
        dataset.candidate_lyricists, train_texts, train_labels, val_texts, val_labels, config
    )


def train_texts_labels(
    candidates,
    train_texts,
    train_labels,
    val_texts,
    val_labels,
    config: ClassifierConfig | None = None,
) -> TrainedModel:
    """Fit from raw text/label pairs; labels index into candidates."""
    config = config or ClassifierConfig()

    vectorizer = TfidfVectorizer(
        word_unigrams=config.word_unigrams, char_ngrams=config.char_ngrams
    )
    train_tokens = [tokenize(t, config.max_tokens) for t in train_texts]
    X_train = vectorizer.fit_transform(train_tokens)
    X_val = vectorizer.transform([tokenize(t, config.max_tokens) for t in val_texts])
    y_train = np.asarray(train_labels)
    y_val = np.asarray(val_labels)

    n_classes = len(candidates)
    W = np.zeros((n_classes, X_train.shape[1]), dtype=np.float64)
    b = np.zeros(n_classes, dtype=np.float64)

    lr = config.learning_rate
    stopper = EarlyStopping(config.patience_events, config.patience_mode)
    trace: list[tuple[float, float]] = []
    best_W, best_b = W.copy(), b.copy()
    prev_point = None  # (W, b, grad_W, grad_b) of the previous epoch
    prev_train_loss = None
    stopped_epoch = 0

    for epoch in range(1, config.max_epochs + 1):
        loss, grad_W, grad_b = loss_and_grad(W, b, X_train, y_train, config.l2_penalty)
        if (
            config.halve_lr_on_increase
            and prev_train_loss is not None
            and loss > prev_train_loss
        ):
            # Redo the previous step with progressively smaller rates until
            # the training loss stops increasing.
            pW, pb, pgW, pgb = prev_point
            for _ in range(60):
                lr *= 0.5
                W = pW - lr * pgW
                b = pb - lr * pgb
                loss, grad_W, grad_b = loss_and_grad(W, b, X_train, y_train, config.l2_penalty)
                if loss <= prev_train_loss:
                    break
        prev_point = (W.copy(), b.copy(), grad_W, grad_b)
        prev_train_loss = loss
        W = W - lr * grad_W
        b = b - lr * grad_b
        val_loss = cross_entropy_loss(W, b, X_val, y_val)
        trace.append((loss, val_loss))
        if val_loss < stopper.best_loss:
            best_W, best_b = W.copy(), b.copy()
        stopped_epoch = epoch
        if stopper.update(val_loss):
            break

    return TrainedModel(
        candidates=tuple(candidates),
        vectorizer=vectorizer,
        W=best_W,
        b=best_b,
        config=config,
        trace=trace,
        stopped_epoch=stopped_epoch,
        best_epoch=stopper.best_epoch,
    )
