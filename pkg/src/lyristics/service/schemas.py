"""Request/response models for the HTTP service.

Endpoints exchange filesystem paths, not file bodies: the service is a
local daemon working against the same disk as its clients.
"""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel


class CorpusSummary(BaseModel):
    n_songs: int
    n_lyricists: int
    n_singers: int


class IngestRequest(BaseModel):
    in_path: str
    out_path: str
    format: Optional[str] = None
    out_format: Optional[str] = None
    remap: Optional[str] = None
    min_songs: int = 1
    names_out: Optional[str] = None
    max_name_dist: int = 1


class IngestResponse(CorpusSummary):
    out_path: str
    name_variant_pairs: Optional[int] = None


class EntropyRequest(BaseModel):
    corpus: str
    format: Optional[str] = None
    base: str = "natural"
    min_songs: int = 10
    histogram_bin: Optional[float] = None


class LyricistEntropy(BaseModel):
    lyricist_id: str
    song_count: int
    n_singers: int
    entropy: float


class EntropyResponse(BaseModel):
    base: str
    stats: list[LyricistEntropy]
    histogram: Optional[list[tuple[float, int]]] = None


class GroupRequest(BaseModel):
    corpus: str
    format: Optional[str] = None
    method: str = "quantile"  # "quantile" | "kmeans" | "both"
    base: str = "natural"
    min_songs: int = 10


class GroupStatsRow(BaseModel):
    group: int
    count: int
    avg_songs: float
    total_songs: int
    avg_entropy: float
    min_entropy: float
    max_entropy: float


class GroupingOut(BaseModel):
    method: str
    groups: list[list[str]]
    stats: list[GroupStatsRow]


class GroupResponse(BaseModel):
    groupings: list[GroupingOut]


class SampleRequest(BaseModel):
    corpus: str
    format: Optional[str] = None
    method: str = "quantile"
    mode: str = "homogenous"
    repetitions: Optional[int] = None
    base_seed: int = 0
    base: str = "natural"
    min_songs: int = 10
    out_dir: str


class SampleResponse(BaseModel):
    datasets: list[str]  # dataset ids, in plan order
    paths: list[str]


class TrainRequest(BaseModel):
    corpus: str
    format: Optional[str] = None
    dataset: str  # dataset JSON path
    config: Optional[dict] = None
    model_out: Optional[str] = None


class TrainResponse(BaseModel):
    dataset_id: str
    model_path: Optional[str]
    epochs_run: int
    stopped_epoch: int
    best_epoch: int
    final_train_loss: float
    final_val_loss: float


class EvaluateRequest(BaseModel):
    corpus: str
    format: Optional[str] = None
    dataset: str
    model: str  # saved model path
    score_out: Optional[str] = None


class LyricistScore(BaseModel):
    lyricist_id: str
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float


class EvaluateResponse(BaseModel):
    dataset_id: str
    accuracy: float
    per_lyricist: list[LyricistScore]
    score_path: Optional[str] = None


class ExperimentRequest(BaseModel):
    corpus: str
    out_dir: str
    config: Optional[dict] = None
    config_path: Optional[str] = None
    jobs: Optional[int] = None
    retry_failed: bool = False
    wait: bool = True


class ExperimentStatus(BaseModel):
    run_id: str
    state: str  # "running" | "done" | "failed"
    error: Optional[str] = None
    manifest: Optional[dict] = None


class SynthRequest(BaseModel):
    out_path: str
    params: Optional[dict] = None
    params_path: Optional[str] = None
    preset: Optional[str] = None  # "hypothesis"
    seed: Optional[int] = None
    alpha: Optional[float] = None
    beta: Optional[float] = None


class SynthResponse(CorpusSummary):
    out_path: str


class ReportRequest(BaseModel):
    run_dir: str
    pooled: Optional[bool] = None


class ReportResponse(BaseModel):
    run_dir: str
    reports: list[str]


class ErrorBody(BaseModel):
    kind: str  # "data" | "plugin"
    type: str
    error: str
