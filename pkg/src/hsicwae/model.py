"""Auto-encoder with a latent-space distribution match and dependence
shaping.

The training objective on a batch (x, s), with z = encoder(x), is

    recon + lambda1 * MMD^2(z, z_prior)
          + lambda2 * HSIC(z[:, 1:], s)
          - lambda3 * HSIC(z[:, 0], s)

recon is the squared L2 reconstruction error per sample (summed over
input coordinates) averaged over the batch, the MMD term (inverse
multiquadratic kernel, unbiased estimator) pulls the aggregate posterior
toward a unit Gaussian prior, and the two HSIC terms (RBF kernels,
median-heuristic bandwidths) respectively suppress dependence of the
trailing latent coordinates on the side information s and reward
dependence of coordinate 0 on it. The encoder is deterministic, so the
latent code of an input is a point, not a distribution.

Kernel bandwidths are treated as constants of the batch (no gradient
flows through the median); the "frozen" policy replaces the median with a
fixed value so the loss becomes an exactly reproducible function of the
parameters, which finite-difference checks rely on.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import autodiff as ad
from . import fileio, nn
from .errors import NonFiniteError, TrainingAborted
from .kernels import KernelSpec, gram, gram_node, median_heuristic
from .stats import centering_matrix

PRESETS: dict[str, tuple[float, float, float]] = {
    # (lambda1, lambda2, lambda3)
    "lidc": (1.0, 0.002, 0.05),
    "k562": (10.0, 0.2, 0.01),
    # Tuned on the built-in blob dataset. The scale differs from the other
    # presets because recon sums over the 256 pixels of a blob image, so
    # per-term balance needs weights in the thousands.
    "synthetic": (2500.0, 25000.0, 500.0),
}

BANDWIDTH_POLICIES = ("median", "frozen")


@dataclass(frozen=True)
class TrainingConfig:
    d_z: int = 8
    encoder_hidden: tuple[int, ...] = (128, 64)
    decoder_hidden: tuple[int, ...] = (64, 128)
    batch_size: int = 128
    steps: int = 3000
    lambda1: float = 2500.0
    lambda2: float = 25000.0
    lambda3: float = 500.0
    learning_rate: float = 1e-3
    seed: int | None = None
    bandwidth_policy: str = "median"
    frozen_sigma2: float | None = None
    preset: str = "synthetic"

    @classmethod
    def from_preset(cls, name: str, **overrides) -> "TrainingConfig":
        if name not in PRESETS:
            raise ValueError(f"unknown preset {name!r}, have {sorted(PRESETS)}")
        l1, l2, l3 = PRESETS[name]
        base = cls(lambda1=l1, lambda2=l2, lambda3=l3, preset=name)
        return replace(base, **overrides) if overrides else base

    def validate(self) -> None:
        if self.d_z < 1:
            raise ValueError(f"d_z must be >= 1, got {self.d_z}")
        for name in ("lambda1", "lambda2", "lambda3"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
        if (self.lambda2 > 0 or self.lambda3 > 0) and self.d_z < 2:
            raise ValueError("dependence terms need d_z >= 2 to split the latent")
        if self.batch_size < 4:
            raise ValueError(f"batch_size must be >= 4, got {self.batch_size}")
        if self.steps < 0:
            raise ValueError(f"steps must be >= 0, got {self.steps}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.bandwidth_policy not in BANDWIDTH_POLICIES:
            raise ValueError(f"unknown bandwidth policy {self.bandwidth_policy!r}")
        if self.bandwidth_policy == "frozen":
            if self.frozen_sigma2 is None or self.frozen_sigma2 <= 0:
                raise ValueError("frozen bandwidth policy needs frozen_sigma2 > 0")
        if any(h < 1 for h in self.encoder_hidden + self.decoder_hidden):
            raise ValueError("hidden widths must be positive")


@dataclass(frozen=True)
class LossBreakdown:
    """Per-term values of one loss evaluation (gated-off terms are 0)."""

    recon: float
    mmd: float
    hsic_ind: float
    hsic_dep: float
    total: float
    lambda1: float
    lambda2: float
    lambda3: float

    def recompose(self) -> float:
        """Re-derive the total in the same floating-point order the graph
        used; equals `total` bit-for-bit."""
        return ((self.recon + self.lambda1 * self.mmd)
                + self.lambda2 * self.hsic_ind) - self.lambda3 * self.hsic_dep


@dataclass(frozen=True)
class LatentPartition:
    """Latent batch split by role: column 0 carries the side information,
    the rest are meant to be independent of it."""

    z: np.ndarray

    def __post_init__(self):
        if self.z.ndim != 2 or self.z.shape[1] < 1:
            raise ValueError(f"latent must be (n, d_z), got {self.z.shape}")

    @property
    def dep(self) -> np.ndarray:
        return self.z[:, 0]

    @property
    def ind(self) -> np.ndarray:
        return self.z[:, 1:]


def prior_sample(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """(n, d) draws from the factorized unit Gaussian via Box-Muller."""
    if n < 1 or d < 1:
        raise ValueError(f"need positive sample shape, got ({n}, {d})")
    total = n * d
    pairs = (total + 1) // 2
    u1 = 1.0 - rng.random(pairs)  # (0, 1], keeps the log finite
    u2 = rng.random(pairs)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(2.0 * np.pi * u2), r * np.sin(2.0 * np.pi * u2)])
    return z[:total].reshape(n, d)


def encode(params: nn.MlpParams, x: np.ndarray) -> LatentPartition:
    return LatentPartition(nn.mlp_forward(params, x))


def decode(params: nn.MlpParams, z: np.ndarray) -> np.ndarray:
    return nn.mlp_forward(params, z)


def encoder_dims(d_x: int, config: TrainingConfig) -> tuple[list[int], list[str]]:
    dims = [d_x, *config.encoder_hidden, config.d_z]
    acts = ["lrelu"] * len(config.encoder_hidden) + ["identity"]
    return dims, acts


def decoder_dims(d_x: int, config: TrainingConfig) -> tuple[list[int], list[str]]:
    dims = [config.d_z, *config.decoder_hidden, d_x]
    acts = ["lrelu"] * len(config.decoder_hidden) + ["sigmoid"]
    return dims, acts


@dataclass
class LossGraph:
    total: ad.Tensor
    breakdown: LossBreakdown
    enc_w: list[ad.Tensor]
    enc_b: list[ad.Tensor]
    dec_w: list[ad.Tensor]
    dec_b: list[ad.Tensor]


def _rbf_for(block: np.ndarray, config: TrainingConfig) -> KernelSpec:
    if config.bandwidth_policy == "frozen":
        return KernelSpec.rbf(config.frozen_sigma2)
    return KernelSpec.rbf(median_heuristic(block))


def _hsic_node(z_block: ad.Tensor, s: np.ndarray, config: TrainingConfig,
               tag: str) -> ad.Tensor:
    n = z_block.shape[0]
    k = gram_node(_rbf_for(z_block.value, config), z_block, z_block, tag=tag)
    h = centering_matrix(n)
    l_centered = h @ gram(_rbf_for(s, config), s) @ h
    # tr(K H L H) = sum(K * (H L H)) since both factors are symmetric
    return ad.scale(ad.sum_all(ad.mul(k, ad.constant(l_centered))), 1.0 / (n * n))


def _mmd_node(z: ad.Tensor, prior_z: np.ndarray) -> ad.Tensor:
    m = z.shape[0]
    n = prior_z.shape[0]
    p = ad.constant(prior_z)
    spec = KernelSpec.imq()
    kzz = gram_node(spec, z, z, tag="mmd:imq")
    kpp = gram_node(spec, p, p)
    kzp = gram_node(spec, z, p)
    within_z = ad.scale(ad.sub(ad.sum_all(kzz), ad.trace(kzz)), 1.0 / (m * (m - 1)))
    within_p = ad.scale(ad.sub(ad.sum_all(kpp), ad.trace(kpp)), 1.0 / (n * (n - 1)))
    cross = ad.scale(ad.sum_all(kzp), -2.0 / (m * n))
    return ad.add(ad.add(within_z, within_p), cross)


def build_loss(
    encoder: nn.MlpParams,
    decoder: nn.MlpParams,
    x: np.ndarray,
    s: np.ndarray,
    config: TrainingConfig,
    prior_z: np.ndarray,
) -> LossGraph:
    """Assemble the full objective on one batch.

    `prior_z` is the prior draw for the MMD term, passed in explicitly so
    a caller can re-evaluate the identical loss (the graph has no other
    source of randomness).
    """
    x = np.asarray(x, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64).reshape(-1, 1)
    if x.ndim != 2 or x.shape[0] != s.shape[0]:
        raise ValueError(f"batch mismatch: x {x.shape} vs s {s.shape}")
    if x.shape[0] < 2:
        raise ValueError("a batch needs at least two samples")

    enc_w, enc_b = nn.param_tensors(encoder)
    dec_w, dec_b = nn.param_tensors(decoder)
    x_in = ad.constant(x)
    z = nn.apply_layers(x_in, enc_w, enc_b, encoder.activations)
    x_hat = nn.apply_layers(z, dec_w, dec_b, decoder.activations)
    diff = ad.sub(x_hat, x_in)
    # per-sample squared L2 norm, averaged over the batch
    total = ad.scale(ad.sum_all(ad.mul(diff, diff)), 1.0 / x.shape[0])
    recon_val = total.item()

    mmd_val = hsic_ind_val = hsic_dep_val = 0.0
    if config.lambda1 > 0:
        mmd = _mmd_node(z, prior_z)
        mmd_val = mmd.item()
        total = ad.add(total, ad.scale(mmd, config.lambda1))
    if config.lambda2 > 0:
        z_ind = ad.cols(z, 1, config.d_z)
        hsic_ind = _hsic_node(z_ind, s, config, tag="hsic_ind:rbf-median")
        hsic_ind_val = hsic_ind.item()
        total = ad.add(total, ad.scale(hsic_ind, config.lambda2))
    if config.lambda3 > 0:
        z_dep = ad.cols(z, 0, 1)
        hsic_dep = _hsic_node(z_dep, s, config, tag="hsic_dep:rbf-median")
        hsic_dep_val = hsic_dep.item()
        total = ad.sub(total, ad.scale(hsic_dep, config.lambda3))

    breakdown = LossBreakdown(
        recon=recon_val, mmd=mmd_val, hsic_ind=hsic_ind_val, hsic_dep=hsic_dep_val,
        total=total.item(),
        lambda1=config.lambda1, lambda2=config.lambda2, lambda3=config.lambda3,
    )
    return LossGraph(total, breakdown, enc_w, enc_b, dec_w, dec_b)


def compute_loss(
    encoder: nn.MlpParams,
    decoder: nn.MlpParams,
    x: np.ndarray,
    s: np.ndarray,
    config: TrainingConfig,
    rng: np.random.Generator,
) -> LossBreakdown:
    """Evaluate the objective once (prior drawn from rng), no gradients."""
    prior_z = prior_sample(np.asarray(x).shape[0], config.d_z, rng)
    return build_loss(encoder, decoder, x, s, config, prior_z).breakdown


@dataclass
class TrainResult:
    encoder: nn.MlpParams
    decoder: nn.MlpParams
    trace: list[LossBreakdown]
    config: TrainingConfig


def train(config: TrainingConfig, x: np.ndarray, s: np.ndarray) -> TrainResult:
    """Joint Adam training of encoder and decoder.

    Batches are drawn by epoch-wise shuffling without replacement (the
    trailing partial batch of an epoch is dropped). All randomness --
    init, shuffling, prior draws -- derives from config.seed, so equal
    inputs give bit-identical results. A non-finite loss aborts with the
    1-based step index.
    """
    config.validate()
    if config.seed is None:
        raise ValueError("training requires an explicit seed")
    x = np.asarray(x, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64).ravel()
    if x.ndim != 2:
        raise ValueError(f"x must be (n, d), got {x.shape}")
    if x.shape[0] != s.shape[0]:
        raise ValueError(f"x has {x.shape[0]} rows but s has {s.shape[0]}")
    n, d_x = x.shape
    if n < config.batch_size:
        raise ValueError(f"dataset of {n} rows cannot fill a batch of {config.batch_size}")

    seeds = np.random.SeedSequence(config.seed).spawn(3)
    init_rng, shuffle_rng, prior_rng = (np.random.default_rng(s_) for s_ in seeds)
    enc = nn.init_params(*encoder_dims(d_x, config), init_rng)
    dec = nn.init_params(*decoder_dims(d_x, config), init_rng)
    enc_state = nn.AdamState.init(enc, alpha=config.learning_rate)
    dec_state = nn.AdamState.init(dec, alpha=config.learning_rate)

    trace: list[LossBreakdown] = []
    order = np.empty(0, dtype=np.int64)
    pos = 0
    for step in range(1, config.steps + 1):
        if pos + config.batch_size > order.size:
            order = shuffle_rng.permutation(n)
            pos = 0
        idx = order[pos:pos + config.batch_size]
        pos += config.batch_size
        prior_z = prior_sample(config.batch_size, config.d_z, prior_rng)
        try:
            graph = build_loss(enc, dec, x[idx], s[idx], config, prior_z)
            if not math.isfinite(graph.breakdown.total):
                raise NonFiniteError("loss is not finite")
            graph.total.backward()
        except NonFiniteError as e:
            raise TrainingAborted(step, f"step {step}: {e}") from e
        enc, enc_state = nn.adam_step(
            enc, nn.collect_grads(graph.enc_w, graph.enc_b), enc_state)
        dec, dec_state = nn.adam_step(
            dec, nn.collect_grads(graph.dec_w, graph.dec_b), dec_state)
        trace.append(graph.breakdown)
    return TrainResult(enc, dec, trace, config)


# -- checkpoint serialization -------------------------------------------------
#
# Text format: a key=value header (config echo plus layer shapes), a blank
# line, then for each parameter tensor a "param=<name>,<rows>,<cols>" line
# followed by one CSV line of its row-major values at full precision.

CHECKPOINT_MAGIC = "hsicwae-checkpoint v1"


def _params_items(prefix: str, params: nn.MlpParams):
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        yield f"{prefix}.w{i}", w
        yield f"{prefix}.b{i}", b.reshape(1, -1)


def save_checkpoint(path, encoder: nn.MlpParams, decoder: nn.MlpParams,
                    config: TrainingConfig) -> None:
    lines = [CHECKPOINT_MAGIC]
    header = {
        "d_z": config.d_z,
        "encoder_dims": ",".join(str(d) for d in encoder.layer_dims),
        "encoder_acts": ",".join(encoder.activations),
        "decoder_dims": ",".join(str(d) for d in decoder.layer_dims),
        "decoder_acts": ",".join(decoder.activations),
        "lambda1": fileio.fmt(config.lambda1),
        "lambda2": fileio.fmt(config.lambda2),
        "lambda3": fileio.fmt(config.lambda3),
        "learning_rate": fileio.fmt(config.learning_rate),
        "batch_size": config.batch_size,
        "steps": config.steps,
        "seed": "" if config.seed is None else config.seed,
        "bandwidth_policy": config.bandwidth_policy,
        "frozen_sigma2": "" if config.frozen_sigma2 is None
                         else fileio.fmt(config.frozen_sigma2),
        "preset": config.preset,
    }
    for key, value in header.items():
        lines.append(f"{key}={value}")
    lines.append("")
    for name, arr in list(_params_items("encoder", encoder)) + list(
            _params_items("decoder", decoder)):
        lines.append(f"param={name},{arr.shape[0]},{arr.shape[1]}")
        lines.append(",".join(fileio.fmt(v) for v in arr.ravel()))
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines))
        f.write("\n")


def load_checkpoint(path) -> TrainResult:
    """Rebuild encoder, decoder, and config; the trace is not persisted."""
    with open(path, "r", encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines or lines[0] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a recognizable checkpoint file")
    header: dict[str, str] = {}
    i = 1
    while i < len(lines) and lines[i] != "":
        key, _, value = lines[i].partition("=")
        header[key] = value
        i += 1
    i += 1  # blank separator
    arrays: dict[str, np.ndarray] = {}
    while i < len(lines):
        if not lines[i].startswith("param="):
            raise ValueError(f"{path}: line {i + 1}: expected a param block")
        name, rows_s, cols_s = lines[i][len("param="):].split(",")
        rows_n, cols_n = int(rows_s), int(cols_s)
        values = np.array([float(v) for v in lines[i + 1].split(",")])
        if values.size != rows_n * cols_n:
            raise ValueError(
                f"{path}: param {name} has {values.size} values, "
                f"expected {rows_n * cols_n}"
            )
        arrays[name] = values.reshape(rows_n, cols_n)
        i += 2

    def rebuild(prefix: str, acts: list[str]) -> nn.MlpParams:
        ws, bs = [], []
        for j in range(len(acts)):
            try:
                ws.append(arrays[f"{prefix}.w{j}"])
                bs.append(arrays[f"{prefix}.b{j}"].ravel())
            except KeyError as e:
                raise ValueError(f"{path}: missing parameter block {e}") from None
        return nn.MlpParams(ws, bs, acts)

    try:
        config = TrainingConfig(
            d_z=int(header["d_z"]),
            encoder_hidden=tuple(
                int(d) for d in header["encoder_dims"].split(",")[1:-1]),
            decoder_hidden=tuple(
                int(d) for d in header["decoder_dims"].split(",")[1:-1]),
            batch_size=int(header["batch_size"]),
            steps=int(header["steps"]),
            lambda1=float(header["lambda1"]),
            lambda2=float(header["lambda2"]),
            lambda3=float(header["lambda3"]),
            learning_rate=float(header["learning_rate"]),
            seed=int(header["seed"]) if header["seed"] else None,
            bandwidth_policy=header["bandwidth_policy"],
            frozen_sigma2=float(header["frozen_sigma2"])
                          if header["frozen_sigma2"] else None,
            preset=header["preset"],
        )
    except KeyError as e:
        raise ValueError(f"{path}: checkpoint header is missing {e}") from None
    encoder = rebuild("encoder", header["encoder_acts"].split(","))
    decoder = rebuild("decoder", header["decoder_acts"].split(","))
    return TrainResult(encoder, decoder, [], config)
