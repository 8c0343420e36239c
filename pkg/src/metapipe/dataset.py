"""Dataset ingestion and generation.

Images arrive as a directory of ``<id>.png`` files plus a labels CSV with
two columns ``id,label`` (header optional). Flattening scans each image
row-major with interleaved R,G,B channels, so a pixel at (r, c) occupies
feature indices (r*W + c)*3 .. +2 and the transform is exactly invertible.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .core import Rng, as_labels, as_matrix


@dataclass
class LabeledImageSet:
    ids: list[str]
    pixels: np.ndarray  # (N, H, W, 3) uint8
    labels: np.ndarray  # (N,) int64 in {0, 1}
    height: int
    width: int

    def __post_init__(self):
        n = len(self.ids)
        if self.pixels.shape != (n, self.height, self.width, 3):
            raise ValueError(
                f"pixels shape {self.pixels.shape} does not match "
                f"{n} images of {self.height}x{self.width}x3"
            )
        if self.pixels.dtype != np.uint8:
            raise ValueError(f"pixels must be uint8, got {self.pixels.dtype}")
        self.labels = as_labels(self.labels)
        if len(self.labels) != n:
            raise ValueError(f"{n} images but {len(self.labels)} labels")


def _is_numeric(field: str) -> bool:
    try:
        float(field)
        return True
    except ValueError:
        return False


def _read_labels_csv(labels_csv: Path) -> list[tuple[str, int]]:
    with open(labels_csv, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if rows and len(rows[0]) == 2 and not _is_numeric(rows[0][1]):
        rows = rows[1:]  # header row
    if not rows:
        raise ValueError(f"no samples in labels CSV {labels_csv}")
    parsed = []
    for i, row in enumerate(rows):
        if len(row) != 2:
            raise ValueError(f"labels CSV row {i}: expected 2 columns, got {len(row)}")
        image_id, label_text = row[0].strip(), row[1].strip()
        if label_text not in ("0", "1"):
            raise ValueError(
                f"labels CSV row {i} (id {image_id!r}): label must be 0 or 1, "
                f"got {label_text!r}"
            )
        parsed.append((image_id, int(label_text)))
    return parsed


def load_labeled_images(image_dir, labels_csv) -> LabeledImageSet:
    """Load ``<id>.png`` files in CSV row order into a LabeledImageSet."""
    image_dir = Path(image_dir)
    entries = _read_labels_csv(Path(labels_csv))

    ids, labels, frames = [], [], []
    height = width = None
    for image_id, label in entries:
        path = image_dir / f"{image_id}.png"
        if not path.is_file():
            raise ValueError(f"missing image for id {image_id!r}: {path}")
        try:
            with Image.open(path) as img:
                mode = img.mode
                if mode != "RGB":
                    raise ValueError(
                        f"image for id {image_id!r} has mode {mode}; "
                        "only 8-bit RGB is accepted (alpha/palette are rejected)"
                    )
                frame = np.asarray(img, dtype=np.uint8)
        except ValueError:
            raise
        except Exception as exc:
            raise ValueError(f"unreadable image for id {image_id!r}: {exc}") from exc
        h, w = frame.shape[0], frame.shape[1]
        if height is None:
            height, width = h, w
        elif (h, w) != (height, width):
            raise ValueError(
                f"image for id {image_id!r} is {h}x{w}, expected {height}x{width}"
            )
        ids.append(image_id)
        labels.append(label)
        frames.append(frame)

    return LabeledImageSet(
        ids=ids,
        pixels=np.stack(frames),
        labels=np.array(labels, dtype=np.int64),
        height=height,
        width=width,
    )


def flatten(image_set: LabeledImageSet) -> np.ndarray:
    """Flatten every image to one row: row-major pixels, R,G,B interleaved."""
    n = len(image_set.ids)
    if n == 0:
        raise ValueError("cannot flatten an empty image set")
    d = image_set.height * image_set.width * 3
    return image_set.pixels.reshape(n, d).astype(np.float64)


def unflatten(X, height: int, width: int) -> np.ndarray:
    """Invert flatten(): rows back to (N, H, W, 3) uint8 images."""
    X = as_matrix(X, "X")
    if X.shape[1] != height * width * 3:
        raise ValueError(
            f"{X.shape[1]} features do not reshape to {height}x{width}x3"
        )
    if np.any((X < 0) | (X > 255)) or not np.array_equal(X, np.round(X)):
        raise ValueError("matrix entries are not 8-bit pixel values")
    return X.reshape(X.shape[0], height, width, 3).astype(np.uint8)


def subsample(X, y, size: int, rng: Rng):
    """Uniform size-subset of the rows, without replacement."""
    X = as_matrix(X, "X")
    y = as_labels(y, "y")
    n = X.shape[0]
    if len(y) != n:
        raise ValueError(f"X has {n} rows but y has {len(y)} labels")
    if not (1 <= size <= n):
        raise ValueError(f"subsample size must be in [1, {n}], got {size}")
    idx = np.arange(n)
    # partial Fisher-Yates: first `size` slots end up a uniform subset
    for i in range(size):
        j = i + rng.next_range(n - i)
        idx[i], idx[j] = idx[j], idx[i]
    chosen = idx[:size]
    return X[chosen], y[chosen]


def _standard_normals(count: int, rng: Rng) -> np.ndarray:
    # Box-Muller; both values of each pair are consumed.
    out = np.empty(count)
    i = 0
    while i < count:
        u1 = 1.0 - rng.next_f64()  # (0, 1]: keeps log finite
        u2 = rng.next_f64()
        r = math.sqrt(-2.0 * math.log(u1))
        out[i] = r * math.cos(2.0 * math.pi * u2)
        i += 1
        if i < count:
            out[i] = r * math.sin(2.0 * math.pi * u2)
            i += 1
    return out


def synth_two_cluster(n: int, d: int, separation: float, noise: float, rng: Rng):
    """Two Gaussian clusters at +/- separation/2 on every axis.

    The first ceil(n/2) rows sit at +separation/2 with label 1, the rest at
    -separation/2 with label 0. Returns (X, y).
    """
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if d < 1:
        raise ValueError(f"need d >= 1, got {d}")
    if not noise > 0:
        raise ValueError(f"noise must be > 0, got {noise}")
    n_pos = math.ceil(n / 2)
    z = _standard_normals(n * d, rng).reshape(n, d)
    centers = np.where(np.arange(n) < n_pos, separation / 2.0, -separation / 2.0)
    X = centers[:, None] + noise * z
    y = (np.arange(n) < n_pos).astype(np.int64)
    return X, y
