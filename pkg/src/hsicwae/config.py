"""Run configuration: a single JSON document validated by pydantic.

The same RunConfig drives the CLI and the HTTP service; unknown keys are
rejected everywhere so typos fail loudly instead of silently using a
default.
"""

from __future__ import annotations

import json
import math
import os
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .model import PRESETS, TrainingConfig
from .synthdata import SyntheticSpec


class SyntheticSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    side: int = Field(16, ge=4)
    levels: int = Field(5, ge=2)
    samples_per_level: int = Field(1000, ge=1)
    radius_base: float = Field(2.0, gt=0)
    radius_per_level: float = Field(0.8, ge=0)
    ecc_min: float = Field(0.5, gt=0, le=1)
    ecc_max: float = Field(1.0, gt=0, le=1)
    rotation_max: float = Field(math.pi, gt=0)
    jitter: float = Field(1.0, ge=0)
    noise_sigma: float = Field(0.02, ge=0)
    seed: int = 0

    @model_validator(mode="after")
    def _ordered_ecc(self):
        if self.ecc_min > self.ecc_max:
            raise ValueError(f"ecc_min {self.ecc_min} > ecc_max {self.ecc_max}")
        return self

    def to_spec(self) -> SyntheticSpec:
        return SyntheticSpec(**self.model_dump())


class TrainingSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    preset: Literal["lidc", "k562", "synthetic"] = "synthetic"
    d_z: int = Field(8, ge=1)
    encoder_hidden: list[int] = [128, 64]
    decoder_hidden: list[int] = [64, 128]
    batch_size: int = Field(128, ge=4)
    steps: int = Field(3000, ge=0)
    lambda1: Optional[float] = Field(None, ge=0)
    lambda2: Optional[float] = Field(None, ge=0)
    lambda3: Optional[float] = Field(None, ge=0)
    learning_rate: float = Field(1e-3, gt=0)
    seed: Optional[int] = None
    bandwidth_policy: Literal["median", "frozen"] = "median"
    frozen_sigma2: Optional[float] = Field(None, gt=0)

    def to_config(self) -> TrainingConfig:
        """Resolve preset lambdas (explicit values win) and validate."""
        l1, l2, l3 = PRESETS[self.preset]
        cfg = TrainingConfig(
            d_z=self.d_z,
            encoder_hidden=tuple(self.encoder_hidden),
            decoder_hidden=tuple(self.decoder_hidden),
            batch_size=self.batch_size,
            steps=self.steps,
            lambda1=l1 if self.lambda1 is None else self.lambda1,
            lambda2=l2 if self.lambda2 is None else self.lambda2,
            lambda3=l3 if self.lambda3 is None else self.lambda3,
            learning_rate=self.learning_rate,
            seed=self.seed,
            bandwidth_policy=self.bandwidth_policy,
            frozen_sigma2=self.frozen_sigma2,
            preset=self.preset,
        )
        cfg.validate()
        return cfg


class EvalSection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    k_neighbors: int = Field(3, ge=1)
    n_generate: int = Field(200, ge=10)
    regression_mode: Literal["pooled", "averaged"] = "pooled"
    permutations: int = Field(200, ge=50)
    kde_points: int = Field(200, ge=16)
    svg: bool = True
    seed: int = 0


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    out_dir: str = "runs/out"
    data_dir: Optional[str] = None
    synthetic: SyntheticSection = Field(default_factory=SyntheticSection)
    training: TrainingSection = Field(default_factory=TrainingSection)
    eval: EvalSection = Field(default_factory=EvalSection)

    def dataset_dir(self) -> str:
        return self.data_dir if self.data_dir else os.path.join(self.out_dir, "dataset")


def load_config(path: Optional[str] = None, overrides: Optional[dict] = None
                ) -> RunConfig:
    """Config file (JSON) plus programmatic overrides; both optional.

    Overrides are applied as a shallow-by-section merge: {"training":
    {"seed": 1}} replaces only that key. Malformed JSON raises ValueError
    (a config problem, not an I/O one).
    """
    doc: dict = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as e:
            raise ValueError(f"{path}: invalid JSON: {e}") from None
        if not isinstance(doc, dict):
            raise ValueError(f"{path}: config root must be a JSON object")
    for key, value in (overrides or {}).items():
        if isinstance(value, dict) and isinstance(doc.get(key), dict):
            doc[key] = {**doc[key], **value}
        else:
            doc[key] = value
    return RunConfig.model_validate(doc)
