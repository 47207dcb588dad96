"""Artifact readers and writers: RFC-4180 CSV, binary PGM (P5), JSON
summaries, and a dependency-free SVG scatter plot.

All floats are serialized with %.17g so that a write/read round trip
reproduces the exact double, and text outputs use UTF-8 with LF line
endings regardless of platform.
"""

from __future__ import annotations

import csv
import html
import json
import math
from typing import Iterable, Optional, Sequence

import numpy as np


def fmt(x: float) -> str:
    """Shortest decimal form that round-trips a float64."""
    return "%.17g" % x


def _cell(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return fmt(float(v))


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(list(header))
        for row in rows:
            w.writerow([_cell(v) for v in row])


def read_csv_rows(path) -> tuple[list[str], list[list[str]]]:
    with open(path, "r", encoding="utf-8", newline="") as f:
        r = csv.reader(f)
        try:
            header = next(r)
        except StopIteration:
            raise ValueError(f"{path}: empty CSV, expected a header row") from None
        return header, [row for row in r]


def write_matrix_csv(path, header: Sequence[str], matrix: np.ndarray) -> None:
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or len(header) != matrix.shape[1]:
        raise ValueError(
            f"matrix {matrix.shape} does not match header of {len(header)} columns"
        )
    write_csv(path, header, matrix)


def read_matrix_csv(path) -> np.ndarray:
    """Numeric CSV body as a float64 matrix (header row skipped)."""
    header, rows = read_csv_rows(path)
    width = len(header)
    out = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ValueError(
                f"{path}: line {i + 2} has {len(row)} fields, expected {width}"
            )
        try:
            out[i] = [float(v) for v in row]
        except ValueError:
            raise ValueError(f"{path}: line {i + 2} has a non-numeric field") from None
    return out


def write_pgm(path, image: np.ndarray) -> None:
    """Binary PGM (P5, maxval 255). Float images are taken as [0, 1] gray
    levels and quantized; integer images must already be uint8 range."""
    img = np.asarray(image)
    if img.ndim != 2:
        raise ValueError(f"PGM needs a 2-D image, got shape {img.shape}")
    if img.dtype.kind == "f":
        img = np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)
    else:
        img = img.astype(np.uint8)
    h, w = img.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(img.tobytes())


def read_pgm(path) -> np.ndarray:
    """Read a binary PGM, tolerating comments and mixed whitespace."""
    with open(path, "rb") as f:
        data = f.read()
    # header = magic, width, height, maxval; '#' starts a comment to EOL
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4 and pos < len(data):
        c = data[pos:pos + 1]
        if c.isspace():
            pos += 1
        elif c == b"#":
            nl = data.find(b"\n", pos)
            pos = len(data) if nl < 0 else nl + 1
        else:
            end = pos
            while end < len(data) and not data[end:end + 1].isspace():
                end += 1
            tokens.append(data[pos:end])
            pos = end
    if len(tokens) < 4 or tokens[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM (P5) file")
    w, h, maxval = (int(t) for t in tokens[1:4])
    if maxval != 255:
        raise ValueError(f"{path}: unsupported maxval {maxval}")
    pos += 1  # single whitespace byte after maxval
    raster = data[pos:pos + w * h]
    if len(raster) != w * h:
        raise ValueError(f"{path}: truncated raster, expected {w * h} bytes")
    return np.frombuffer(raster, dtype=np.uint8).reshape(h, w)


def write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")


_PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
    "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
)


def _axis_range(v: np.ndarray) -> tuple[float, float]:
    lo, hi = float(v.min()), float(v.max())
    if not math.isfinite(lo) or not math.isfinite(hi):
        raise ValueError("scatter data contains non-finite values")
    if lo == hi:
        lo, hi = lo - 1.0, hi + 1.0
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def scatter_svg(
    path,
    x,
    y,
    labels=None,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
) -> None:
    """Hand-assembled SVG 1.1 scatter plot, one color per distinct label."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.size != y.size or x.size == 0:
        raise ValueError(f"scatter needs matched nonempty x/y, got {x.size}, {y.size}")
    if labels is None:
        labels = np.zeros(x.size)
    labels = np.asarray(labels).ravel()
    if labels.size != x.size:
        raise ValueError("labels must align with the points")
    distinct = sorted(set(labels.tolist()))
    color = {lab: _PALETTE[i % len(_PALETTE)] for i, lab in enumerate(distinct)}

    width, height = 640, 480
    left, right, top, bottom = 60, width - 170, 40, height - 50
    x0, x1 = _axis_range(x)
    y0, y1 = _axis_range(y)
    sx = lambda v: left + (v - x0) / (x1 - x0) * (right - left)
    sy = lambda v: bottom - (v - y0) / (y1 - y0) * (bottom - top)

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{right - left}" height="{bottom - top}" '
        'fill="none" stroke="#333" stroke-width="1"/>',
    ]
    if title:
        parts.append(
            f'<text x="{(left + right) / 2:.1f}" y="24" text-anchor="middle" '
            f'font-size="16" font-family="sans-serif">{html.escape(title)}</text>'
        )
    if xlabel:
        parts.append(
            f'<text x="{(left + right) / 2:.1f}" y="{height - 12}" text-anchor="middle" '
            f'font-size="13" font-family="sans-serif">{html.escape(xlabel)}</text>'
        )
    if ylabel:
        parts.append(
            f'<text x="16" y="{(top + bottom) / 2:.1f}" text-anchor="middle" '
            f'font-size="13" font-family="sans-serif" '
            f'transform="rotate(-90 16 {(top + bottom) / 2:.1f})">'
            f'{html.escape(ylabel)}</text>'
        )
    # min/max tick labels on each axis
    for v, px in ((x0, left), (x1, right)):
        parts.append(
            f'<text x="{px}" y="{bottom + 18}" text-anchor="middle" font-size="11" '
            f'font-family="sans-serif">{v:.3g}</text>'
        )
    for v, py in ((y0, bottom), (y1, top)):
        parts.append(
            f'<text x="{left - 8}" y="{py + 4}" text-anchor="end" font-size="11" '
            f'font-family="sans-serif">{v:.3g}</text>'
        )
    for xi, yi, lab in zip(x, y, labels.tolist()):
        parts.append(
            f'<circle cx="{sx(xi):.2f}" cy="{sy(yi):.2f}" r="3" '
            f'fill="{color[lab]}" fill-opacity="0.7"/>'
        )
    for i, lab in enumerate(distinct):
        ly = top + 14 + 20 * i
        text = f"{lab:g}" if isinstance(lab, float) else str(lab)
        parts.append(f'<circle cx="{right + 18}" cy="{ly}" r="4" fill="{color[lab]}"/>')
        parts.append(
            f'<text x="{right + 30}" y="{ly + 4}" font-size="12" '
            f'font-family="sans-serif">{html.escape(text)}</text>'
        )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(parts))
        f.write("\n")
