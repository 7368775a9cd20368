"""Request and response models for the HTTP service.

Corpus-scale inputs (datasets, index files, generation files) travel as
server-local paths; caption-scale inputs travel inline.
"""

from typing import Literal

from pydantic import BaseModel, Field


class BuildIndexRequest(BaseModel):
    dataset: str
    out: str
    split: str | None = "train"


class BuildIndexResponse(BaseModel):
    config: dict
    stats: dict
    ngrams_per_order: dict[str, int]
    build_log: list[str]


class ScoreRequest(BaseModel):
    index: str
    metric: Literal["onlystyle", "stylecider", "cider", "bleu1", "bleu4"]
    input: str
    refs: str | None = None
    style: str | None = None
    threads: int = Field(default=1, ge=1)


class ScoreRow(BaseModel):
    row: int
    caption: str
    style: str | None = None
    score: float


class ScoreResponse(BaseModel):
    config: dict
    count: int
    rows: list[ScoreRow]
    aggregate: float
    aggregation: Literal["mean", "pooled"]


class EvalGtRequest(BaseModel):
    index: str
    dataset: str
    split: str | None = None
    mode: Literal["onlystyle", "stylecider", "both"] = "both"
    comparison: Literal["all_styles", "sampled_k"] = "all_styles"
    k: int = Field(default=20, ge=1)
    seed: int = 0
    threads: int = Field(default=1, ge=1)


class RateBlock(BaseModel):
    evaluated: int
    satisfied: int
    rate: float | None
    skipped: int
    per_style: dict[str, dict]


class EvalGtResponse(BaseModel):
    config: dict
    protocol: str
    mode: str
    comparison: str
    k: int | None
    seed: int
    styles_in_index: int
    captions: int
    onlystyle: RateBlock | None = None
    stylecider: RateBlock | None = None


class EvalModelsRequest(BaseModel):
    index: str
    generations: str
    references: str
    threads: int = Field(default=1, ge=1)


class ModelRow(BaseModel):
    model: str
    rows: int
    matched: int
    unmatched: int
    bleu1: float | None
    bleu4: float | None
    cider: float | None
    stylecider: float | None
    onlystyle: float


class EvalModelsResponse(BaseModel):
    config: dict
    protocol: str
    references: int
    models: list[ModelRow]


class RankRequest(BaseModel):
    index: str
    caption: str
    target: str | None = None
    top: int | None = Field(default=None, ge=1)


class RankResponse(BaseModel):
    config: dict
    styles: int
    ranking: list[tuple[str, float]]
    target_rank: int | None = None


class CngRequest(BaseModel):
    index: str
    terms: list[str]
    styles: list[str] | None = None


class CngResponse(BaseModel):
    config: dict
    terms: list[str]
    styles: list[str]
    scores: list[list[float]]


class CorrRequest(BaseModel):
    scores: list[float]
    ranks: list[float]


class CorrResponse(BaseModel):
    config: dict
    n: int
    pearson: float | None
    spearman: float | None


class HealthResponse(BaseModel):
    status: str
    version: str


class ErrorResponse(BaseModel):
    error: str
