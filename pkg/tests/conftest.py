"""Shared fixtures.

The expensive artifacts -- the default blob dataset and the canonical
training run -- are session-scoped so the acceptance suite builds them
once. Unit tests that only need small data construct it inline.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import pytest

from hsicwae import model, synthdata


@pytest.fixture(scope="session")
def dataset() -> synthdata.BlobDataset:
    """The default synthetic dataset (16x16, 5 levels, 5000 samples)."""
    return synthdata.generate(synthdata.SyntheticSpec(seed=0))


@dataclass
class CanonicalRun:
    result: model.TrainResult
    latents: model.LatentPartition  # held-out encodings
    side: np.ndarray                # held-out levels
    train_seconds: float


@pytest.fixture(scope="session")
def canonical(dataset) -> CanonicalRun:
    """Default training run: synthetic preset, 3000 steps, batch 128."""
    config = model.TrainingConfig.from_preset("synthetic", seed=0)
    start = time.perf_counter()
    result = model.train(config, dataset.train_images, dataset.train_levels)
    elapsed = time.perf_counter() - start
    z = model.encode(result.encoder, dataset.test_images)
    return CanonicalRun(result, z, dataset.test_levels, elapsed)
