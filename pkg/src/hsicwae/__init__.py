"""Auto-encoder with kernel-based latent dependence control.

The package trains a deterministic auto-encoder whose latent prior is
matched by MMD while HSIC penalties steer which latent coordinates may
depend on a scalar side variable. It ships its own reverse-mode autodiff
engine, kernel statistics with permutation tests, a synthetic blob
dataset, evaluation analytics, a CLI, and an HTTP service.
"""

__version__ = "0.1.0"

from .errors import NonFiniteError, ShapeError, TrainingAborted
from .kernels import KernelSpec, gram, median_heuristic
from .model import (
    LatentPartition,
    LossBreakdown,
    TrainingConfig,
    TrainResult,
    prior_sample,
    train,
)
from .stats import hsic_b, mmd_u_sq, permutation_null

__all__ = [
    "__version__",
    "KernelSpec",
    "LatentPartition",
    "LossBreakdown",
    "NonFiniteError",
    "ShapeError",
    "TrainingAborted",
    "TrainingConfig",
    "TrainResult",
    "gram",
    "hsic_b",
    "median_heuristic",
    "mmd_u_sq",
    "permutation_null",
    "prior_sample",
    "train",
]
