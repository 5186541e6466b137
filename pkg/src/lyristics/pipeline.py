"""End-to-end experiment orchestration.

Wires corpus -> entropy -> grouping -> sampling -> training -> scoring ->
tables into one resumable run directory:

    out/
      manifest.json           run id, config snapshot, per-dataset status
      groupings/<method>.json
      datasets/<id>.json      sampled experiment datasets
      models/<id>.npz         built-in classifier weights (plug-ins keep their own)
      scores/<id>.json        per-candidate confusion counts
      reports/                metric tables, correlation summaries, charts

Datasets may train in parallel; results are merged in sorted dataset-id
order, so the degree of parallelism never changes any output byte.
Re-invoking a finished run loads the scores instead of retraining.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import reporting
from .classifier import ClassifierConfig, TrainedModel, train
from .corpus import Corpus, filter_min_songs, load_corpus
from .entropy import compute_stats
from .errors import ConfigError, ConstantVectorError, LyristicsError
from .evaluation import aggregate, correlation, load_score, pair_metrics, save_score, score_run
from .grouping import Grouping, group_kmeans, group_quantile
from .plugin import external_classifier
from .sampling import plan_experiment, save_dataset

_STATUS_RANK = {"pending": 0, "trained": 1, "scored": 2, "failed": 2}


@dataclass(frozen=True)
class ExperimentConfig:
    grouping_methods: tuple[str, ...] = ("quantile", "kmeans")
    modes: tuple[str, ...] = ("homogenous", "heterogenous")
    homogenous_reps: int | None = None  # None: sampling module defaults
    heterogenous_reps: int | None = None
    base_seed: int = 0
    log_base: str = "natural"
    min_songs: int = 10
    classifier: str = "builtin"  # "builtin" | "plugin:<command>"
    classifier_config: ClassifierConfig = field(default_factory=ClassifierConfig)
    pooled: bool = False
    fail_fast: bool = False
    plugin_timeout: float = 600.0

    def __post_init__(self):
        for method in self.grouping_methods:
            if method not in ("quantile", "kmeans"):
                raise ConfigError(f"unknown grouping method {method!r}")
        for mode in self.modes:
            if mode not in ("homogenous", "heterogenous"):
                raise ConfigError(f"unknown sampling mode {mode!r}")
        if not self.grouping_methods or not self.modes:
            raise ConfigError("need at least one grouping method and one sampling mode")
        if self.classifier != "builtin" and not self.classifier.startswith("plugin:"):
            raise ConfigError(f"classifier must be 'builtin' or 'plugin:<cmd>', got {self.classifier!r}")

    def to_dict(self) -> dict:
        data = vars(self).copy()
        data["grouping_methods"] = list(self.grouping_methods)
        data["modes"] = list(self.modes)
        data["classifier_config"] = self.classifier_config.to_dict()
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        for name in ("grouping_methods", "modes"):
            if name in data:
                data[name] = tuple(data[name])
        if "classifier_config" in data:
            data["classifier_config"] = ClassifierConfig.from_dict(data["classifier_config"])
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(f"bad experiment config: {exc}")


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}")
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return ExperimentConfig.from_dict(data)


@dataclass
class RunManifest:
    run_id: str
    config: dict
    corpus: str
    datasets: dict = field(default_factory=dict)  # id -> {status, reason, paths}
    reports: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "config": self.config,
            "corpus": self.corpus,
            "datasets": self.datasets,
            "reports": self.reports,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunManifest":
        return cls(
            run_id=data["run_id"],
            config=data["config"],
            corpus=data["corpus"],
            datasets=data.get("datasets", {}),
            reports=data.get("reports", []),
        )

    def save(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)

    @classmethod
    def load(cls, path) -> "RunManifest":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def advance(
        self, dataset_id: str, status: str, reason: str | None = None, kind: str | None = None
    ) -> None:
        entry = self.datasets[dataset_id]
        if _STATUS_RANK[status] < _STATUS_RANK[entry["status"]]:
            raise AssertionError(f"status of {dataset_id} cannot move {entry['status']} -> {status}")
        entry["status"] = status
        entry["reason"] = reason
        entry["kind"] = kind


def _run_id(config: ExperimentConfig, corpus_path: str) -> str:
    # resolve so "corpus.jsonl" and its absolute spelling name the same run
    blob = json.dumps(
        {"config": config.to_dict(), "corpus": str(Path(corpus_path).resolve())}, sort_keys=True
    )
    return "run-" + hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]


def _build_groupings(corpus: Corpus, config: ExperimentConfig) -> dict[str, Grouping]:
    stats = compute_stats(corpus, base=config.log_base)
    quantile = group_quantile(stats)
    groupings = {}
    for method in config.grouping_methods:
        groupings[method] = quantile if method == "quantile" else group_kmeans(stats, quantile)
    return groupings


def _train_and_score(dataset, corpus, config: ExperimentConfig, paths: dict):
    """Train one dataset (or reuse artifacts) and return its RunScore."""
    score_path = paths["score"]
    if Path(score_path).exists():
        return load_score(score_path)
    if config.classifier == "builtin":
        model_path = Path(paths["model"])
        if model_path.exists():
            model = TrainedModel.load(model_path)
        else:
            model = train(dataset, corpus, config.classifier_config)
            model.save(model_path)
        score = score_run(model, dataset, corpus)
    else:
        command = config.classifier.split(":", 1)[1]
        with external_classifier(
            command, dataset, corpus, config.classifier_config, timeout=config.plugin_timeout
        ) as model:
            score = score_run(model, dataset, corpus)
            model.close()
    save_score(score, score_path)
    return score


def run_experiment(
    corpus_path,
    config: ExperimentConfig | dict | None = None,
    out_dir="experiment-out",
    jobs: int | None = None,
    retry_failed: bool = False,
    progress=None,
) -> RunManifest:
    """Execute (or resume) a full experiment run; returns the final manifest."""
    if config is None:
        config = ExperimentConfig()
    elif isinstance(config, dict):
        config = ExperimentConfig.from_dict(config)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest_path = out / "manifest.json"
    run_id = _run_id(config, corpus_path)
    if manifest_path.exists():
        manifest = RunManifest.load(manifest_path)
        if manifest.run_id != run_id:
            raise ConfigError(
                f"output dir {out} holds run {manifest.run_id}, but this config is {run_id}; "
                "use a fresh --out directory"
            )
        if retry_failed:
            for entry in manifest.datasets.values():
                if entry["status"] == "failed":
                    entry["status"] = "pending"
                    entry["reason"] = None
                    entry["kind"] = None
    else:
        manifest = RunManifest(run_id=run_id, config=config.to_dict(), corpus=str(corpus_path))

    corpus = filter_min_songs(load_corpus(corpus_path), config.min_songs)
    groupings = _build_groupings(corpus, config)
    for method, grouping in groupings.items():
        reporting.write_text(
            out / "groupings" / f"{method}.json",
            json.dumps(grouping.to_dict(), indent=2, sort_keys=True) + "\n",
        )

    reps = {"homogenous": config.homogenous_reps, "heterogenous": config.heterogenous_reps}
    combos = [(m, mode) for m in config.grouping_methods for mode in config.modes]
    planned = {}  # dataset_id -> (dataset, combo)
    for method, mode in combos:
        for dataset in plan_experiment(
            corpus, groupings[method], mode, reps[mode], config.base_seed
        ):
            planned[dataset.dataset_id] = (dataset, (method, mode))
            paths = {
                "dataset": f"datasets/{dataset.dataset_id}.json",
                "model": f"models/{dataset.dataset_id}.npz" if config.classifier == "builtin" else None,
                "score": f"scores/{dataset.dataset_id}.json",
            }
            entry = manifest.datasets.setdefault(
                dataset.dataset_id, {"status": "pending", "reason": None, "kind": None, **paths}
            )
            if entry["status"] != "failed" and not (out / entry["score"]).exists():
                entry["status"] = "pending"  # stale manifest against a wiped dir
            save_dataset(dataset, out / paths["dataset"])
    manifest.save(manifest_path)

    lock = threading.Lock()

    def work(dataset_id: str):
        dataset, _combo = planned[dataset_id]
        entry = manifest.datasets[dataset_id]
        paths = {
            "model": (out / entry["model"]) if entry.get("model") else None,
            "score": out / entry["score"],
        }
        try:
            score = _train_and_score(dataset, corpus, config, paths)
        except LyristicsError as exc:
            with lock:
                manifest.advance(dataset_id, "failed", f"{type(exc).__name__}: {exc}", kind=exc.kind)
                manifest.save(manifest_path)
            if progress:
                progress(dataset_id, "failed")
            if config.fail_fast:
                raise
            return None
        with lock:
            manifest.advance(dataset_id, "scored")
            manifest.save(manifest_path)
        if progress:
            progress(dataset_id, "scored")
        return score

    todo = [did for did in sorted(planned) if manifest.datasets[did]["status"] != "failed"]
    scores = {}
    n_jobs = jobs or os.cpu_count() or 1
    if n_jobs == 1:
        for did in todo:
            scores[did] = work(did)
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            for did, score in zip(todo, pool.map(work, todo)):
                scores[did] = score

    combo_of = {did: planned[did][1] for did in planned}
    manifest.reports = _write_reports(out, config, groupings, combo_of, scores)
    manifest.save(manifest_path)
    return manifest


def _combo_from_id(dataset_id: str) -> tuple[str, str]:
    mode, method = dataset_id.split("-", 2)[:2]
    return method, mode


def regenerate_reports(out_dir, pooled: bool | None = None) -> list[str]:
    """Rebuild the report files of a finished run from its stored scores."""
    out = Path(out_dir)
    manifest = RunManifest.load(out / "manifest.json")
    config = ExperimentConfig.from_dict(manifest.config)
    if pooled is not None and pooled != config.pooled:
        config = ExperimentConfig.from_dict({**manifest.config, "pooled": pooled})
    groupings = {}
    for method in config.grouping_methods:
        with open(out / "groupings" / f"{method}.json", encoding="utf-8") as fh:
            groupings[method] = Grouping.from_dict(json.load(fh))
    scores = {}
    combo_of = {}
    for did, entry in manifest.datasets.items():
        if entry["status"] == "scored" and (out / entry["score"]).exists():
            scores[did] = load_score(out / entry["score"])
            combo_of[did] = _combo_from_id(did)
    manifest.reports = _write_reports(out, config, groupings, combo_of, scores)
    manifest.save(out / "manifest.json")
    return manifest.reports


def _write_reports(out: Path, config, groupings, combo_of, scores) -> list[str]:
    """Aggregate per (method, mode) and emit tables; returns report paths."""
    written = []
    combos = [(m, mode) for m in config.grouping_methods for mode in config.modes]
    summary = {}
    for method, mode in combos:
        combo_scores = [
            scores[did]
            for did in sorted(scores)
            if scores[did] is not None and combo_of[did] == (method, mode)
        ]
        if not combo_scores:
            continue
        grouping = groupings[method]
        rows = aggregate(combo_scores, grouping, pooled=config.pooled)
        pairs = pair_metrics(combo_scores, grouping)
        entropies = {k: grouping.stats[k].avg_entropy for k in range(len(grouping.stats))}
        stem = f"{method}-{mode}"
        files = {
            f"reports/{stem}-metrics.csv": reporting.group_table_csv(rows, method, entropies),
            f"reports/{stem}-metrics.txt": reporting.group_table_text(rows, method, entropies),
            f"reports/{stem}-pairs.csv": reporting.pairs_csv(pairs),
            f"reports/{stem}-chart.svg": reporting.metrics_svg(
                rows, method, f"{mode} sampling, {method} grouping"
            ),
        }
        xs = [entropies[row.group] for row in rows]
        ys = [row.f1 for row in rows]
        try:
            pearson_r, spearman_rho = correlation(xs, ys)
        except ConstantVectorError:
            pearson_r = spearman_rho = None
        files[f"reports/{stem}-correlation.json"] = reporting.correlation_json(
            method, mode, [row.group for row in rows], xs, ys, pearson_r, spearman_rho
        )
        for rel, text in files.items():
            reporting.write_text(out / rel, text)
            written.append(rel)
        summary[stem] = {
            "pearson_r": pearson_r,
            "spearman_rho": spearman_rho,
            "group_f1": {str(row.group): row.f1 for row in rows},
        }
    reporting.write_text(
        out / "reports" / "summary.json", json.dumps(summary, indent=2, sort_keys=True) + "\n"
    )
    written.append("reports/summary.json")
    return sorted(written)
