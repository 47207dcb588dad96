"""Synthetic grayscale blob images with a size factor as side information.

Each image is one anti-aliased ellipse on a black background. Every
sample draws a level uniformly from the scores {1, ..., levels}; the
ellipse major radius grows linearly with that score, which doubles as the
scalar side information the model is trained to isolate. Rotation,
eccentricity, and a small center jitter vary freely per sample so that
size is the only factor tied to the level.

Generation is reproducible sample by sample: image i draws from its own
generator seeded with (seed + i), so regenerating any subset gives
byte-identical pixels. The train/test split has its own generator seeded
with (seed + n).

Datasets persist as a manifest.csv (filename, level, split) plus one 8-bit
binary PGM per image; quantization to 8 bits is the only lossy step, and
loading a saved dataset reproduces the quantized pixels exactly.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from . import fileio

SUBDIV = 4  # anti-aliasing resolution: SUBDIV^2 coverage samples per pixel
TRAIN_FRACTION = 0.8


@dataclass(frozen=True)
class SyntheticSpec:
    side: int = 16
    levels: int = 5
    samples_per_level: int = 1000
    radius_base: float = 2.0
    radius_per_level: float = 0.8
    ecc_min: float = 0.5
    ecc_max: float = 1.0
    rotation_max: float = math.pi
    jitter: float = 1.0
    noise_sigma: float = 0.02
    seed: int = 0

    def __post_init__(self):
        if self.side < 4:
            raise ValueError(f"image side must be >= 4, got {self.side}")
        if self.levels < 2:
            raise ValueError(f"need >= 2 levels, got {self.levels}")
        if self.samples_per_level < 1:
            raise ValueError("need >= 1 sample per level")
        if self.radius_base <= 0 or self.radius_per_level < 0:
            raise ValueError("radii must be positive")
        if not (0 < self.ecc_min <= self.ecc_max <= 1):
            raise ValueError(
                f"eccentricity range must satisfy 0 < min <= max <= 1, "
                f"got [{self.ecc_min}, {self.ecc_max}]"
            )
        if self.rotation_max < 0:
            raise ValueError(f"rotation_max must be >= 0, got {self.rotation_max}")
        if self.jitter < 0:
            raise ValueError(f"jitter must be >= 0, got {self.jitter}")
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        max_radius = self.radius_base + self.radius_per_level * self.levels
        if max_radius + self.jitter > self.side / 2:
            raise ValueError(
                f"level {self.levels}: radius {max_radius} does not fit a "
                f"{self.side}px image"
            )

    @property
    def n_total(self) -> int:
        return self.levels * self.samples_per_level


@dataclass
class BlobDataset:
    """Flattened images (n, side^2) in [0, 1], per-sample level score, and
    index arrays for the train/test split."""

    images: np.ndarray
    levels: np.ndarray
    side: int
    train_idx: np.ndarray
    test_idx: np.ndarray

    @property
    def train_images(self) -> np.ndarray:
        return self.images[self.train_idx]

    @property
    def test_images(self) -> np.ndarray:
        return self.images[self.test_idx]

    @property
    def train_levels(self) -> np.ndarray:
        return self.levels[self.train_idx]

    @property
    def test_levels(self) -> np.ndarray:
        return self.levels[self.test_idx]

    def image_grid(self, index: int) -> np.ndarray:
        return self.images[index].reshape(self.side, self.side)


def render_blob(
    side: int,
    center: tuple[float, float],
    radius: float,
    ratio: float,
    theta: float,
) -> np.ndarray:
    """Coverage-rendered ellipse: each pixel holds the fraction of its
    SUBDIV x SUBDIV sample points inside the ellipse.

    center is (row, col) in pixel units; radius is the semi-major axis and
    ratio in (0, 1] scales the semi-minor axis; theta rotates the major
    axis counterclockwise.
    """
    fine = side * SUBDIV
    coords = (np.arange(fine) + 0.5) / SUBDIV  # subpixel centers, pixel units
    rr = coords[:, None] - center[0]
    cc = coords[None, :] - center[1]
    ct, st = math.cos(theta), math.sin(theta)
    u = ct * cc + st * rr
    v = -st * cc + ct * rr
    inside = (u / radius) ** 2 + (v / (ratio * radius)) ** 2 <= 1.0
    return inside.reshape(side, SUBDIV, side, SUBDIV).mean(axis=(1, 3))


def generate(spec: SyntheticSpec) -> BlobDataset:
    n = spec.n_total
    d = spec.side * spec.side
    images = np.empty((n, d))
    levels = np.empty(n)
    half = spec.side / 2.0
    for i in range(n):
        rng = np.random.default_rng(spec.seed + i)
        level = int(rng.integers(1, spec.levels + 1))
        theta = rng.uniform(0.0, spec.rotation_max)
        ratio = rng.uniform(spec.ecc_min, spec.ecc_max)
        jitter = rng.uniform(-spec.jitter, spec.jitter, size=2)
        radius = spec.radius_base + spec.radius_per_level * level
        img = render_blob(spec.side, (half + jitter[0], half + jitter[1]),
                          radius, ratio, theta)
        if spec.noise_sigma > 0:
            img = img + rng.normal(0.0, spec.noise_sigma, size=img.shape)
        np.clip(img, 0.0, 1.0, out=img)
        images[i] = img.ravel()
        levels[i] = float(level)
    split_rng = np.random.default_rng(spec.seed + n)
    perm = split_rng.permutation(n)
    n_train = int(round(TRAIN_FRACTION * n))
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    return BlobDataset(images, levels, spec.side, train_idx, test_idx)


MANIFEST_NAME = "manifest.csv"


def save_dataset(dataset: BlobDataset, out_dir: str) -> dict:
    """Write one PGM per image plus manifest.csv (filename, level, split);
    returns a summary with per-level counts."""
    os.makedirs(out_dir, exist_ok=True)
    n = len(dataset.levels)
    width = max(5, len(str(n - 1)))
    in_train = np.zeros(n, dtype=bool)
    in_train[dataset.train_idx] = True
    names = [f"img_{i:0{width}d}.pgm" for i in range(n)]
    for i, name in enumerate(names):
        fileio.write_pgm(os.path.join(out_dir, name), dataset.image_grid(i))
    fileio.write_csv(
        os.path.join(out_dir, MANIFEST_NAME),
        ["filename", "level", "split"],
        (
            (names[i], int(dataset.levels[i]), "train" if in_train[i] else "test")
            for i in range(n)
        ),
    )
    counts: dict[str, int] = {}
    for lv in dataset.levels:
        counts[str(int(lv))] = counts.get(str(int(lv)), 0) + 1
    return {
        "n_total": n,
        "n_train": int(len(dataset.train_idx)),
        "n_test": int(len(dataset.test_idx)),
        "counts_per_level": dict(sorted(counts.items(), key=lambda kv: int(kv[0]))),
    }


def load_dataset(data_dir: str) -> BlobDataset:
    """Inverse of save_dataset up to the 8-bit pixel quantization."""
    _, rows = fileio.read_csv_rows(os.path.join(data_dir, MANIFEST_NAME))
    if not rows:
        raise ValueError(f"{data_dir}: manifest lists no images")
    images = None
    side = 0
    levels = np.empty(len(rows))
    train, test = [], []
    for i, (name, level, split) in enumerate(rows):
        grid = fileio.read_pgm(os.path.join(data_dir, name))
        if images is None:
            side = grid.shape[0]
            images = np.empty((len(rows), side * side))
        if grid.shape != (side, side):
            raise ValueError(
                f"{data_dir}: {name} is {grid.shape[0]}x{grid.shape[1]}, "
                f"expected {side}x{side}"
            )
        images[i] = grid.ravel() / 255.0
        levels[i] = float(level)
        if split == "train":
            train.append(i)
        elif split == "test":
            test.append(i)
        else:
            raise ValueError(f"{data_dir}: unknown split {split!r} for {name}")
    return BlobDataset(images, levels, side,
                       np.array(train, dtype=np.int64),
                       np.array(test, dtype=np.int64))
