"""Lyricist-singer entropy and lyric-lyricist classification toolkit.

The package measures how widely each lyricist's songs spread across singers
(Shannon entropy of the singer distribution), groups lyricists by that
entropy, and tests how classification performance varies across the groups
via repeated 10-way lyric-lyricist classification experiments.
"""

from .classifier import ClassifierConfig, EarlyStopping, TrainedModel, train
from .corpus import Corpus, SongRecord, filter_min_songs, load_corpus, save_corpus
from .entropy import compute_stats, lyricist_singer_entropy, singer_distribution
from .errors import DataError, LyristicsError, PluginError
from .evaluation import aggregate, correlation, metrics, score_run
from .grouping import Grouping, group_kmeans, group_quantile
from .pipeline import ExperimentConfig, RunManifest, run_experiment
from .plugin import ExternalModel, PluginProcess, external_classifier
from .sampling import ExperimentDataset, plan_experiment, sample_heterogenous, sample_homogenous
from .synthesis import SynthParams, generate_corpus, generate_hypothesis_corpus

__version__ = "0.1.0"

__all__ = [
    "ClassifierConfig",
    "Corpus",
    "DataError",
    "EarlyStopping",
    "ExperimentConfig",
    "ExperimentDataset",
    "ExternalModel",
    "Grouping",
    "LyristicsError",
    "PluginError",
    "PluginProcess",
    "RunManifest",
    "SongRecord",
    "SynthParams",
    "TrainedModel",
    "aggregate",
    "compute_stats",
    "correlation",
    "external_classifier",
    "filter_min_songs",
    "generate_corpus",
    "generate_hypothesis_corpus",
    "group_kmeans",
    "group_quantile",
    "load_corpus",
    "lyricist_singer_entropy",
    "metrics",
    "plan_experiment",
    "run_experiment",
    "sample_heterogenous",
    "sample_homogenous",
    "save_corpus",
    "score_run",
    "singer_distribution",
    "train",
    "__version__",
]
