"""Kernel two-sample and dependence statistics.

mmd_u_sq is the unbiased quadratic-time MMD^2 estimator (diagonal terms
excluded from the within-sample sums), so small samples can legitimately
return negative values. hsic_b is the biased V-statistic
tr(K H L H) / n^2 with H = I - (1/n) 1 1^T. Significance for HSIC comes
from a permutation null that reshuffles the rows of y only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import KernelSpec, as_points, gram


def mmd_u_sq(spec: KernelSpec, x, y) -> float:
    """Unbiased MMD^2 between samples x (m, d) and y (n, d).

    mean_{i != j} k(x_i, x_j) + mean_{i != j} k(y_i, y_j)
    - 2 mean_{i, j} k(x_i, y_j)
    """
    x, y = as_points(x), as_points(y)
    m, n = x.shape[0], y.shape[0]
    if m < 2 or n < 2:
        raise ValueError(f"mmd needs at least two points per sample, got {m} and {n}")
    if x.shape[1] != y.shape[1]:
        raise ValueError(f"dimension mismatch: {x.shape[1]} vs {y.shape[1]}")
    kxx = gram(spec, x)
    kyy = gram(spec, y)
    kxy = gram(spec, x, y)
    xx = (kxx.sum() - np.trace(kxx)) / (m * (m - 1))
    yy = (kyy.sum() - np.trace(kyy)) / (n * (n - 1))
    xy = kxy.sum() / (m * n)
    return float(xx + yy - 2.0 * xy)


def centering_matrix(n: int) -> np.ndarray:
    """H = I - (1/n) 1 1^T."""
    return np.eye(n) - np.full((n, n), 1.0 / n)


def hsic_b(kx: KernelSpec, ky: KernelSpec, x, y) -> float:
    """Biased HSIC estimate tr(K H L H) / n^2 on paired samples."""
    x, y = as_points(x), as_points(y)
    n = x.shape[0]
    if n != y.shape[0]:
        raise ValueError(f"paired samples required, got {n} and {y.shape[0]} rows")
    if n < 2:
        raise ValueError("hsic needs at least two paired samples")
    k = gram(kx, x)
    l = gram(ky, y)
    h = centering_matrix(n)
    return float(np.trace(k @ h @ l @ h)) / (n * n)


@dataclass(frozen=True)
class PermutationNull:
    """Observed statistic, its permutation-null draws (sorted), and the
    upper-tail p-value (1 + #{null >= observed}) / (B + 1)."""

    observed: float
    null: np.ndarray
    p_value: float

    def quantile(self, q: float) -> float:
        return float(np.quantile(self.null, q))


def permutation_null(
    kx: KernelSpec,
    ky: KernelSpec,
    x,
    y,
    permutations: int,
    rng: np.random.Generator,
) -> PermutationNull:
    """HSIC permutation test: reshuffle the rows of y, keep x fixed.

    Permuting L by P gives H P L P^T H = P (H L H) P^T, so each draw is a
    simultaneous row+column permutation of the precomputed centered L --
    O(n^2) per permutation. hsic = sum((H K H) * L_perm) / n^2 equals the
    trace form by cyclicity.
    """
    if permutations < 50:
        raise ValueError(f"need at least 50 permutations, got {permutations}")
    x, y = as_points(x), as_points(y)
    n = x.shape[0]
    if n != y.shape[0]:
        raise ValueError(f"paired samples required, got {n} and {y.shape[0]} rows")
    if n < 2:
        raise ValueError("hsic needs at least two paired samples")
    h = centering_matrix(n)
    kc = h @ gram(kx, x) @ h
    l = gram(ky, y)
    observed = float((kc * l).sum()) / (n * n)
    null = np.empty(permutations)
    for b in range(permutations):
        perm = rng.permutation(n)
        null[b] = (kc * l[np.ix_(perm, perm)]).sum() / (n * n)
    exceed = int((null >= observed).sum())
    p = (1.0 + exceed) / (permutations + 1.0)
    null.sort()
    return PermutationNull(observed=observed, null=null, p_value=p)
