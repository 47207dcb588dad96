"""Command implementations behind the CLI and the HTTP service.

Each cmd_* function takes a validated RunConfig, performs one stage
(dataset generation, training, evaluation, or a standalone dependence
test), writes its artifacts under the configured output directory, and
returns a JSON-ready summary dict. Errors surface as ValueError (bad
configuration), OSError (missing/unwritable files), or ArithmeticError
(numerical failure); callers translate these into exit codes or HTTP
error bodies.
"""

from __future__ import annotations

import os

import numpy as np

from . import analytics, fileio, model, synthdata
from .config import RunConfig
from .kernels import KernelSpec, as_points, median_heuristic
from .stats import hsic_b, mmd_u_sq, permutation_null

METRICS_HEADER = ["step", "recon", "mmd", "hsic_ind", "hsic_dep", "total"]


def cmd_gen_data(cfg: RunConfig) -> dict:
    spec = cfg.synthetic.to_spec()
    dataset = synthdata.generate(spec)
    out = cfg.dataset_dir()
    summary = synthdata.save_dataset(dataset, out)
    return {"dataset_dir": out, **summary}


def _require_dataset(cfg: RunConfig) -> synthdata.BlobDataset:
    data_dir = cfg.dataset_dir()
    if not os.path.isfile(os.path.join(data_dir, synthdata.MANIFEST_NAME)):
        raise FileNotFoundError(
            f"no dataset at {data_dir}; run gen-data first or set data_dir"
        )
    return synthdata.load_dataset(data_dir)


def cmd_train(cfg: RunConfig) -> dict:
    dataset = _require_dataset(cfg)
    train_cfg = cfg.training.to_config()
    result = model.train(train_cfg, dataset.train_images, dataset.train_levels)
    os.makedirs(cfg.out_dir, exist_ok=True)
    metrics_path = os.path.join(cfg.out_dir, "metrics.csv")
    fileio.write_csv(
        metrics_path,
        METRICS_HEADER,
        (
            (i + 1, b.recon, b.mmd, b.hsic_ind, b.hsic_dep, b.total)
            for i, b in enumerate(result.trace)
        ),
    )
    ckpt_path = os.path.join(cfg.out_dir, "checkpoint.txt")
    model.save_checkpoint(ckpt_path, result.encoder, result.decoder, result.config)
    final = None
    if result.trace:
        last = result.trace[-1]
        final = {
            "step": len(result.trace),
            "recon": last.recon,
            "mmd": last.mmd,
            "hsic_ind": last.hsic_ind,
            "hsic_dep": last.hsic_dep,
            "total": last.total,
        }
    return {
        "checkpoint": ckpt_path,
        "metrics": metrics_path,
        "steps": len(result.trace),
        "final": final,
    }


def _axis_table(z: np.ndarray, side: np.ndarray) -> list[dict]:
    table = []
    for j in range(z.shape[1]):
        c = analytics.correlations(z[:, j], side)
        table.append({
            "axis": j,
            "pearson": c.pearson,
            "spearman": c.spearman,
            "degenerate": c.degenerate,
        })
    return table


def _hsic_test(block: np.ndarray, side: np.ndarray, permutations: int,
               rng: np.random.Generator) -> dict:
    kx = KernelSpec.rbf(median_heuristic(block))
    ky = KernelSpec.rbf(median_heuristic(side))
    null = permutation_null(kx, ky, block, side, permutations, rng)
    return {
        "value": null.observed,
        "p_value": null.p_value,
        "null_q95": null.quantile(0.95),
        "permutations": permutations,
    }


def cmd_eval(cfg: RunConfig, checkpoint: str | None = None) -> dict:
    """Encode the held-out split and reproduce the evaluation views:
    per-axis correlations, HSIC permutation tests for both latent blocks,
    nearest-neighbor regression of generated samples against the test
    data, and the scatter of z_dep against the first PC of the
    independent block with per-level KDE curves.
    """
    ckpt_path = checkpoint or os.path.join(cfg.out_dir, "checkpoint.txt")
    if not os.path.isfile(ckpt_path):
        raise FileNotFoundError(f"no checkpoint at {ckpt_path}")
    loaded = model.load_checkpoint(ckpt_path)
    if loaded.config.d_z != cfg.training.d_z:
        raise ValueError(
            f"checkpoint has d_z={loaded.config.d_z} but the config asks for "
            f"d_z={cfg.training.d_z}"
        )
    dataset = _require_dataset(cfg)
    ev = cfg.eval
    z = model.encode(loaded.encoder, dataset.test_images)
    side = dataset.test_levels
    d_z = z.z.shape[1]

    rng_dep, rng_ind, rng_gen = (
        np.random.default_rng(s)
        for s in np.random.SeedSequence(ev.seed).spawn(3)
    )
    axes = _axis_table(z.z, side)
    dep_stats = axes[0]
    ind_max_abs_spearman = max(
        (abs(a["spearman"]) for a in axes[1:]), default=0.0)
    hsic_dep_test = _hsic_test(z.dep, side, ev.permutations, rng_dep)
    hsic_ind_test = (
        _hsic_test(z.ind, side, ev.permutations, rng_ind) if d_z >= 2 else None)
    regression = analytics.nn_regress(
        loaded.decoder, dataset.test_images, dataset.test_levels,
        ev.n_generate, ev.k_neighbors, rng_gen, ev.regression_mode,
    )
    pc = analytics.first_pc(z.ind) if d_z >= 2 else None
    pc1 = pc.projections if pc is not None else np.zeros(side.size)

    os.makedirs(cfg.out_dir, exist_ok=True)
    files: dict[str, str] = {}

    scatter_path = os.path.join(cfg.out_dir, "scatter.csv")
    fileio.write_csv(
        scatter_path,
        ["z_dep", "pc1", "level"],
        ((z.dep[i], pc1[i], side[i]) for i in range(side.size)),
    )
    files["scatter"] = scatter_path

    # shared KDE grid over z_dep, padded so every curve integrates to ~1
    lo, hi = float(z.dep.min()), float(z.dep.max())
    if lo == hi:
        lo, hi = lo - 1.0, hi + 1.0
    kde = analytics.kde_1d(
        z.dep, side,
        _kde_grid(lo, hi, z.dep, side, ev.kde_points),
    )
    kde_path = os.path.join(cfg.out_dir, "kde.csv")
    fileio.write_csv(
        kde_path,
        ["grid", "level", "density"],
        (
            (kde.grid[g], curve.level, curve.density[g])
            for curve in kde.curves
            for g in range(kde.grid.size)
        ),
    )
    files["kde"] = kde_path

    regression_path = os.path.join(cfg.out_dir, "regression.csv")
    fileio.write_csv(
        regression_path,
        ["z_dep", "neighbor_s"],
        (
            (regression.z_dep[i], s)
            for i in range(regression.z_dep.size)
            for s in regression.neighbor_side[i]
        ),
    )
    files["regression"] = regression_path

    if ev.svg:
        svg_path = os.path.join(cfg.out_dir, "scatter.svg")
        fileio.scatter_svg(
            svg_path, z.dep, pc1, side,
            title="held-out latent codes by size level",
            xlabel="z_dep (size axis)",
            ylabel="PC1 of independent block",
        )
        files["scatter_svg"] = svg_path

    summary = {
        "checkpoint": ckpt_path,
        "n_test": int(side.size),
        "d_z": d_z,
        "dep": {
            "pearson": dep_stats["pearson"],
            "spearman": dep_stats["spearman"],
        },
        "ind_max_abs_spearman": ind_max_abs_spearman,
        "axes": axes,
        "hsic_dep": hsic_dep_test,
        "hsic_ind": hsic_ind_test,
        "regression": {
            "slope": regression.slope,
            "intercept": regression.intercept,
            "r": regression.r,
            "n_pairs": regression.n_pairs,
            "mode": regression.mode,
        },
        "first_pc": None if pc is None else {
            "variance": pc.variance,
            "direction": [float(v) for v in pc.direction],
        },
        "kde_skipped": [
            {"level": level, "reason": reason} for level, reason in kde.skipped
        ],
        "files": files,
    }
    summary_path = os.path.join(cfg.out_dir, "summary.json")
    files["summary"] = summary_path
    fileio.write_json(summary_path, summary)
    return summary


def _kde_grid(lo: float, hi: float, values: np.ndarray, labels: np.ndarray,
              points: int) -> np.ndarray:
    """Grid spanning [lo, hi] padded by 4x the widest per-level bandwidth,
    wide enough that the Gaussian tails integrate inside it."""
    h_max = 0.0
    for label in set(labels.tolist()):
        pts = values[labels == label]
        if pts.size >= 2:
            h_max = max(h_max, analytics.silverman_bandwidth(pts))
    pad = max(4.0 * h_max, 0.05 * (hi - lo))
    return np.linspace(lo - pad, hi + pad, points)


def cmd_hsic(
    x: np.ndarray,
    y: np.ndarray,
    kernel: str = "rbf",
    statistic: str = "hsic",
    permutations: int = 200,
    seed: int = 0,
) -> dict:
    """Standalone dependence / two-sample statistic on raw arrays.

    hsic pairs an RBF (median bandwidth) or IMQ kernel with a permutation
    p-value; mmd reports the unbiased estimate alone (it is a signed
    two-sample statistic, not a calibrated test here).
    """
    if kernel not in ("rbf", "imq"):
        raise ValueError(f"unknown kernel {kernel!r}")
    x = as_points(x)
    y = as_points(y)

    def spec_for(data: np.ndarray) -> KernelSpec:
        if kernel == "rbf":
            return KernelSpec.rbf(median_heuristic(data))
        return KernelSpec.imq()

    if statistic == "mmd":
        # one kernel for both samples; rbf bandwidth comes from the pool
        spec = spec_for(np.vstack((x, y))) if kernel == "rbf" else KernelSpec.imq()
        return {
            "statistic": "mmd_u_sq",
            "kernel": kernel,
            "value": mmd_u_sq(spec, x, y),
            "n_x": int(x.shape[0]),
            "n_y": int(y.shape[0]),
        }
    if statistic != "hsic":
        raise ValueError(f"unknown statistic {statistic!r}")
    rng = np.random.default_rng(seed)
    null = permutation_null(spec_for(x), spec_for(y), x, y, permutations, rng)
    return {
        "statistic": "hsic_b",
        "kernel": kernel,
        "value": null.observed,
        "p_value": null.p_value,
        "null_q95": null.quantile(0.95),
        "permutations": permutations,
        "n": int(x.shape[0]),
    }
