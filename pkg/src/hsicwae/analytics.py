"""Post-training analysis tools: rank/linear correlations, a first
principal component by power iteration, 1-D kernel density curves, and a
nearest-neighbor regression that probes what the decoder's first latent
coordinate controls.

Everything here is plain numpy on arrays (no graph involvement); these
run on held-out data after training.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import nn
from .kernels import sq_distances
from .model import prior_sample


# -- correlation ---------------------------------------------------------------

def average_ranks(v: np.ndarray) -> np.ndarray:
    """1-based ranks; tied values share the mean of their rank range."""
    v = np.asarray(v, dtype=np.float64).ravel()
    order = np.argsort(v, kind="stable")
    ranks = np.empty(v.size)
    i = 0
    while i < v.size:
        j = i
        while j + 1 < v.size and v[order[j + 1]] == v[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def pearson(x, y) -> float:
    """Pearson correlation; 0.0 when either side is constant."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size or x.size < 2:
        raise ValueError(f"need two equal-length samples, got {x.size} and {y.size}")
    xc = x - x.mean()
    yc = y - y.mean()
    sx = np.sqrt((xc * xc).sum())
    sy = np.sqrt((yc * yc).sum())
    if sx == 0.0 or sy == 0.0:
        return 0.0
    return float((xc * yc).sum() / (sx * sy))


def spearman(x, y) -> float:
    """Spearman rank correlation (Pearson on average ranks)."""
    return pearson(average_ranks(x), average_ranks(y))


@dataclass(frozen=True)
class Correlation:
    pearson: float
    spearman: float
    degenerate: bool  # true when a constant input forced a 0.0


def correlations(x, y) -> Correlation:
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    degenerate = bool(np.ptp(x) == 0.0 or np.ptp(y) == 0.0)
    return Correlation(pearson(x, y), spearman(x, y), degenerate)


# -- principal direction -------------------------------------------------------

@dataclass(frozen=True)
class PcResult:
    """Leading principal direction (unit norm), the mean-centered data's
    projections onto it, and the variance it explains."""

    direction: np.ndarray
    projections: np.ndarray
    variance: float


def first_pc(x: np.ndarray, tol: float = 1e-10, max_iter: int = 1000) -> PcResult:
    """First principal component of a sample matrix, by power iteration
    on the covariance.

    The direction is a unit vector with its largest-magnitude component
    made positive (first such index on ties); an all-zero covariance
    returns the first basis vector with variance 0.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2 or x.shape[1] < 1:
        raise ValueError(f"need an (n >= 2, d >= 1) sample matrix, got {x.shape}")
    n, d = x.shape
    xc = x - x.mean(axis=0)
    cov = (xc.T @ xc) / (n - 1)
    if not cov.any():
        e1 = np.zeros(d)
        e1[0] = 1.0
        return PcResult(e1, xc @ e1, 0.0)
    v = np.full(d, 1.0 / np.sqrt(d))
    for _ in range(max_iter):
        w = cov @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            # started in the null space; restart along the strongest axis
            v = np.zeros(d)
            v[int(np.argmax(np.diag(cov)))] = 1.0
            continue
        w /= norm
        if np.linalg.norm(w - v) <= tol:
            v = w
            break
        v = w
    pivot = int(np.argmax(np.abs(v)))
    if v[pivot] < 0:
        v = -v
    return PcResult(v, xc @ v, float(v @ cov @ v))


# -- kernel density ------------------------------------------------------------

def silverman_bandwidth(values: np.ndarray) -> float:
    """1.06 * sd * n^(-1/5); 0.0 signals a degenerate (constant) sample."""
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size < 2:
        raise ValueError("bandwidth needs at least two points")
    sd = float(v.std(ddof=1))
    return 1.06 * sd * v.size ** (-0.2)


def gaussian_kde(values, grid, bandwidth: Optional[float] = None) -> np.ndarray:
    """Gaussian kernel density of one sample evaluated on `grid`.

    Bandwidth defaults to Silverman's rule; a degenerate (zero) bandwidth
    falls back to 1e-3 of the grid span so the curve stays finite.
    """
    v = np.asarray(values, dtype=np.float64).ravel()
    g = np.asarray(grid, dtype=np.float64).ravel()
    if v.size < 2:
        raise ValueError("kde needs at least two points")
    h = silverman_bandwidth(v) if bandwidth is None else float(bandwidth)
    if h <= 0.0:
        span = float(g.max() - g.min())
        h = 1e-3 * span if span > 0 else 1e-3
    u = (g[:, None] - v[None, :]) / h
    return np.exp(-0.5 * u * u).sum(axis=1) / (v.size * h * np.sqrt(2.0 * np.pi))


@dataclass(frozen=True)
class KdeCurve:
    level: float
    density: np.ndarray
    bandwidth: float


@dataclass(frozen=True)
class KdeResult:
    """Per-level density curves on a shared grid; levels that could not be
    estimated (fewer than two points) are listed with the reason."""

    grid: np.ndarray
    curves: tuple[KdeCurve, ...]
    skipped: tuple[tuple[float, str], ...]


def kde_1d(values, labels, grid) -> KdeResult:
    """One Gaussian KDE per label, each with its own Silverman bandwidth,
    all evaluated on the shared grid. Labels with fewer than two points
    are skipped and recorded instead of raising.
    """
    v = np.asarray(values, dtype=np.float64).ravel()
    lab = np.asarray(labels, dtype=np.float64).ravel()
    g = np.asarray(grid, dtype=np.float64).ravel()
    if v.size != lab.size or v.size < 1:
        raise ValueError("need matched, nonempty values and labels")
    if g.size < 2:
        raise ValueError("grid needs at least two points")
    curves: list[KdeCurve] = []
    skipped: list[tuple[float, str]] = []
    for label in sorted(set(lab.tolist())):
        pts = v[lab == label]
        if pts.size < 2:
            skipped.append((label, f"level {label:g} has {pts.size} point(s), "
                                   "need at least 2"))
            continue
        h = silverman_bandwidth(pts)
        if h <= 0.0:
            h = 1e-3 * float(g.max() - g.min())
        curves.append(KdeCurve(label, gaussian_kde(pts, g, h), h))
    return KdeResult(g, tuple(curves), tuple(skipped))


# -- generated-sample regression ------------------------------------------------

@dataclass(frozen=True)
class NnRegression:
    """OLS of reference side values on the first latent coordinate of
    generated samples, matched through nearest neighbors in data space.

    z_dep holds each draw's coordinate 0; neighbor_idx / neighbor_side are
    (n_gen, k) arrays of the matched reference rows and their side values.
    """

    slope: float
    intercept: float
    r: float
    n_pairs: int
    mode: str
    z_dep: np.ndarray
    neighbor_idx: np.ndarray
    neighbor_side: np.ndarray


def nn_regress(
    decoder: nn.MlpParams,
    ref_x: np.ndarray,
    ref_side: np.ndarray,
    n_gen: int,
    k: int,
    rng: np.random.Generator,
    mode: str = "pooled",
) -> NnRegression:
    """Decode prior draws, find each decoded sample's k nearest reference
    rows (squared Euclidean), and regress those neighbors' side values on
    the draw's coordinate 0.

    mode "pooled" regresses all k*n_gen (z0, side) pairs; "averaged"
    first averages the k neighbor side values per draw.
    """
    if mode not in ("pooled", "averaged"):
        raise ValueError(f"unknown mode {mode!r}")
    if n_gen < 10:
        raise ValueError(f"need at least 10 generated samples, got {n_gen}")
    ref_x = np.asarray(ref_x, dtype=np.float64)
    ref_side = np.asarray(ref_side, dtype=np.float64).ravel()
    if ref_x.shape[0] == 0:
        raise ValueError("reference set is empty")
    if ref_x.shape[0] != ref_side.size:
        raise ValueError("reference rows and side values must align")
    if not (1 <= k <= ref_x.shape[0]):
        raise ValueError(f"k={k} out of range for {ref_x.shape[0]} references")
    z = prior_sample(n_gen, decoder.layer_dims[0], rng)
    gen = nn.mlp_forward(decoder, z)
    dists = sq_distances(gen, ref_x)
    neighbors = np.argsort(dists, axis=1, kind="stable")[:, :k]
    side_nn = ref_side[neighbors]  # (n_gen, k)
    if mode == "pooled":
        xs = np.repeat(z[:, 0], k)
        ys = side_nn.ravel()
    else:
        xs = z[:, 0]
        ys = side_nn.mean(axis=1)
    xc = xs - xs.mean()
    yc = ys - ys.mean()
    vx = float((xc * xc).sum())
    if vx == 0.0:
        slope, intercept, r = 0.0, float(ys.mean()), 0.0
    else:
        slope = float((xc * yc).sum() / vx)
        intercept = float(ys.mean() - slope * xs.mean())
        r = pearson(xs, ys)
    return NnRegression(slope, intercept, r, xs.size, mode,
                        z[:, 0].copy(), neighbors, side_nn)
