"""HTTP service over the experiment toolkit.

One endpoint per pipeline stage plus a job-style experiment runner. All
endpoints are synchronous except POST /experiments, which can detach: the
run executes in a worker thread and GET /experiments/{run_id} reports its
state. Toolkit errors map to HTTP 422 (data) or 502 (plugin) with a JSON
body carrying the error kind, so thin clients can translate them back to
exit codes.
"""

from __future__ import annotations

import threading

from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .. import pipeline, synthesis
from ..classifier import ClassifierConfig, TrainedModel, train
from ..corpus import (
    apply_remap,
    filter_min_songs,
    find_name_variants,
    load_corpus,
    load_remap,
    save_corpus,
    write_name_variants,
)
from ..entropy import compute_stats, entropy_histogram
from ..errors import ConfigError, DataError, LyristicsError
from ..evaluation import metrics, save_score, score_run
from ..grouping import group_kmeans, group_quantile
from ..sampling import load_dataset, plan_experiment, save_dataset
from . import schemas

API_VERSION = "1"


def _loaded(path, format, min_songs):
    corpus = load_corpus(path, format)
    if min_songs > 1:
        corpus = filter_min_songs(corpus, min_songs)
    return corpus


def _groupings_for(corpus, method, base):
    stats = compute_stats(corpus, base=base)
    quantile = group_quantile(stats)
    if method == "quantile":
        return [quantile]
    if method == "kmeans":
        return [group_kmeans(stats, quantile)]
    if method == "both":
        return [quantile, group_kmeans(stats, quantile)]
    raise ConfigError(f"unknown grouping method {method!r}")


def create_app() -> FastAPI:
    app = FastAPI(title="lyristics", version=API_VERSION)
    runs: dict[str, dict] = {}
    runs_lock = threading.Lock()

    @app.exception_handler(LyristicsError)
    async def _toolkit_error(request, exc: LyristicsError):
        status = 502 if exc.kind == "plugin" else 422
        body = schemas.ErrorBody(kind=exc.kind, type=type(exc).__name__, error=str(exc))
        return JSONResponse(status_code=status, content=body.model_dump())

    @app.exception_handler(OSError)
    async def _os_error(request, exc: OSError):
        body = schemas.ErrorBody(kind="data", type=type(exc).__name__, error=str(exc))
        return JSONResponse(status_code=422, content=body.model_dump())

    @app.get("/health")
    def health():
        return {"status": "ok", "api": API_VERSION}

    @app.post("/ingest", response_model=schemas.IngestResponse)
    def ingest(req: schemas.IngestRequest):
        corpus = load_corpus(req.in_path, req.format)
        if req.remap:
            corpus = apply_remap(corpus, load_remap(req.remap))
        if req.min_songs > 1:
            corpus = filter_min_songs(corpus, req.min_songs)
        save_corpus(corpus, req.out_path, req.out_format)
        variant_count = None
        if req.names_out:
            pairs = find_name_variants(corpus, req.max_name_dist)
            write_name_variants(pairs, req.names_out)
            variant_count = len(pairs)
        return schemas.IngestResponse(
            out_path=req.out_path, name_variant_pairs=variant_count, **corpus.summary()
        )

    @app.post("/entropy", response_model=schemas.EntropyResponse)
    def entropy(req: schemas.EntropyRequest):
        corpus = _loaded(req.corpus, req.format, req.min_songs)
        stats = compute_stats(corpus, base=req.base)
        rows = [
            schemas.LyricistEntropy(
                lyricist_id=s.lyricist_id,
                song_count=s.song_count,
                n_singers=len(s.singer_counts),
                entropy=s.entropy,
            )
            for s in stats
        ]
        hist = entropy_histogram(stats, req.histogram_bin) if req.histogram_bin else None
        return schemas.EntropyResponse(base=req.base, stats=rows, histogram=hist)

    @app.post("/group", response_model=schemas.GroupResponse)
    def group(req: schemas.GroupRequest):
        corpus = _loaded(req.corpus, req.format, req.min_songs)
        out = []
        for grouping in _groupings_for(corpus, req.method, req.base):
            out.append(
                schemas.GroupingOut(
                    method=grouping.method,
                    groups=[list(g) for g in grouping.groups],
                    stats=[
                        schemas.GroupStatsRow(group=k, **vars(s))
                        for k, s in enumerate(grouping.stats)
                    ],
                )
            )
        return schemas.GroupResponse(groupings=out)

    @app.post("/sample", response_model=schemas.SampleResponse)
    def sample(req: schemas.SampleRequest):
        corpus = _loaded(req.corpus, req.format, req.min_songs)
        grouping = _groupings_for(corpus, req.method, req.base)[-1]
        datasets = plan_experiment(corpus, grouping, req.mode, req.repetitions, req.base_seed)
        paths = []
        for dataset in datasets:
            path = f"{req.out_dir}/{dataset.dataset_id}.json"
            save_dataset(dataset, path)
            paths.append(path)
        return schemas.SampleResponse(datasets=[d.dataset_id for d in datasets], paths=paths)

    @app.post("/train", response_model=schemas.TrainResponse)
    def train_one(req: schemas.TrainRequest):
        corpus = load_corpus(req.corpus, req.format)
        dataset = load_dataset(req.dataset)
        config = ClassifierConfig.from_dict(req.config) if req.config else ClassifierConfig()
        model = train(dataset, corpus, config)
        if req.model_out:
            model.save(req.model_out)
        return schemas.TrainResponse(
            dataset_id=dataset.dataset_id,
            model_path=req.model_out,
            epochs_run=len(model.trace),
            stopped_epoch=model.stopped_epoch,
            best_epoch=model.best_epoch,
            final_train_loss=model.trace[-1][0],
            final_val_loss=model.trace[-1][1],
        )

    @app.post("/evaluate", response_model=schemas.EvaluateResponse)
    def evaluate(req: schemas.EvaluateRequest):
        corpus = load_corpus(req.corpus, req.format)
        dataset = load_dataset(req.dataset)
        model = TrainedModel.load(req.model)
        score = score_run(model, dataset, corpus)
        if req.score_out:
            save_score(score, req.score_out)
        per = []
        for lid in dataset.candidate_lyricists:
            c = score.counts[lid]
            p, r, f1 = metrics(c.tp, c.fp, c.fn)
            per.append(
                schemas.LyricistScore(
                    lyricist_id=lid, tp=c.tp, fp=c.fp, fn=c.fn, precision=p, recall=r, f1=f1
                )
            )
        return schemas.EvaluateResponse(
            dataset_id=score.dataset_id,
            accuracy=score.accuracy,
            per_lyricist=per,
            score_path=req.score_out,
        )

    def _experiment_config(req: schemas.ExperimentRequest) -> pipeline.ExperimentConfig:
        if req.config and req.config_path:
            raise ConfigError("pass config inline or as a path, not both")
        if req.config_path:
            return pipeline.load_config(req.config_path)
        if req.config:
            return pipeline.ExperimentConfig.from_dict(req.config)
        return pipeline.ExperimentConfig()

    def _run(run_id: str, req: schemas.ExperimentRequest, config) -> None:
        try:
            manifest = pipeline.run_experiment(
                req.corpus, config, req.out_dir, jobs=req.jobs, retry_failed=req.retry_failed
            )
        except Exception as exc:  # recorded, reported via GET
            with runs_lock:
                runs[run_id].update(state="failed", error=f"{type(exc).__name__}: {exc}")
            return
        with runs_lock:
            runs[run_id].update(state="done", manifest=manifest.to_dict())

    @app.post("/experiments", response_model=schemas.ExperimentStatus)
    def start_experiment(req: schemas.ExperimentRequest):
        config = _experiment_config(req)
        run_id = pipeline._run_id(config, req.corpus)
        with runs_lock:
            entry = runs.get(run_id)
            if entry and entry["state"] == "running":
                if not req.wait:
                    return schemas.ExperimentStatus(run_id=run_id, state="running")
                thread = entry["thread"]
            else:
                runs[run_id] = {"state": "running", "error": None, "manifest": None}
                thread = threading.Thread(
                    target=_run, args=(run_id, req, config), daemon=True
                )
                runs[run_id]["thread"] = thread
                thread.start()
        if req.wait:
            thread.join()
        with runs_lock:
            entry = dict(runs[run_id])
        return schemas.ExperimentStatus(
            run_id=run_id,
            state=entry["state"],
            error=entry["error"],
            manifest=entry["manifest"],
        )

    @app.get("/experiments/{run_id}", response_model=schemas.ExperimentStatus)
    def experiment_status(run_id: str):
        with runs_lock:
            entry = runs.get(run_id)
            if entry is None:
                raise DataError(f"unknown run {run_id!r}")
            entry = dict(entry)
        return schemas.ExperimentStatus(
            run_id=run_id, state=entry["state"], error=entry["error"], manifest=entry["manifest"]
        )

    @app.post("/synth", response_model=schemas.SynthResponse)
    def synth(req: schemas.SynthRequest):
        given = [bool(req.params), bool(req.params_path), bool(req.preset)]
        if sum(given) > 1:
            raise ConfigError("pass exactly one of params, params_path, preset")
        if req.preset:
            if req.preset != "hypothesis":
                raise ConfigError(f"unknown preset {req.preset!r}")
            kwargs = {}
            if req.seed is not None:
                kwargs["seed"] = req.seed
            if req.alpha is not None:
                kwargs["alpha"] = req.alpha
            if req.beta is not None:
                kwargs["beta"] = req.beta
            params = synthesis.hypothesis_params(**kwargs)
        elif req.params_path:
            params = synthesis.load_params(req.params_path)
        elif req.params:
            params = synthesis.SynthParams.from_dict(req.params)
        else:
            raise ConfigError("pass one of params, params_path, preset")
        corpus = synthesis.generate_corpus(params)
        save_corpus(corpus, req.out_path)
        return schemas.SynthResponse(out_path=req.out_path, **corpus.summary())

    @app.post("/report", response_model=schemas.ReportResponse)
    def report(req: schemas.ReportRequest):
        reports = pipeline.regenerate_reports(req.run_dir, pooled=req.pooled)
        return schemas.ReportResponse(run_dir=req.run_dir, reports=reports)

    return app
