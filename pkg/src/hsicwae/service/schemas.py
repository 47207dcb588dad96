"""Request/response bodies for the HTTP service.

Requests embed the same RunConfig document the CLI reads from disk, so a
config file can be POSTed as-is under the "config" key. All models reject
unknown fields.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

from ..config import RunConfig


class GenDataRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    config: RunConfig = Field(default_factory=RunConfig)


class GenDataResponse(BaseModel):
    dataset_dir: str
    n_total: int
    n_train: int
    n_test: int
    counts_per_level: dict[str, int]


class TrainRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    config: RunConfig = Field(default_factory=RunConfig)


class LossRow(BaseModel):
    step: int
    recon: float
    mmd: float
    hsic_ind: float
    hsic_dep: float
    total: float


class TrainResponse(BaseModel):
    checkpoint: str
    metrics: str
    steps: int
    final: Optional[LossRow]


class EvalRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")
    config: RunConfig = Field(default_factory=RunConfig)
    checkpoint: Optional[str] = None


class AxisCorrelation(BaseModel):
    axis: int
    pearson: float
    spearman: float
    degenerate: bool


class DependenceTest(BaseModel):
    value: float
    p_value: float
    null_q95: float
    permutations: int


class RegressionStats(BaseModel):
    slope: float
    intercept: float
    r: float
    n_pairs: int
    mode: str


class PrincipalComponent(BaseModel):
    variance: float
    direction: list[float]


class KdeSkip(BaseModel):
    level: float
    reason: str


class EvalResponse(BaseModel):
    checkpoint: str
    n_test: int
    d_z: int
    dep: dict[str, float]
    ind_max_abs_spearman: float
    axes: list[AxisCorrelation]
    hsic_dep: DependenceTest
    hsic_ind: Optional[DependenceTest]
    regression: RegressionStats
    first_pc: Optional[PrincipalComponent]
    kde_skipped: list[KdeSkip]
    files: dict[str, str]


class HsicRequest(BaseModel):
    """Raw paired samples, row per observation (scalars allowed)."""

    model_config = ConfigDict(extra="forbid")
    x: list[list[float]]
    y: list[list[float]]
    kernel: Literal["rbf", "imq"] = "rbf"
    statistic: Literal["hsic", "mmd"] = "hsic"
    permutations: int = Field(200, ge=50)
    seed: int = 0


class HsicResponse(BaseModel):
    statistic: str
    kernel: str
    value: float
    p_value: Optional[float] = None
    null_q95: Optional[float] = None
    permutations: Optional[int] = None
    n: Optional[int] = None
    n_x: Optional[int] = None
    n_y: Optional[int] = None


class ErrorBody(BaseModel):
    kind: Literal["config", "io", "numeric"]
    message: str


class HealthResponse(BaseModel):
    status: str
    version: str
