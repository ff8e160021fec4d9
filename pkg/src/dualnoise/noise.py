"""Synthetic datasets and the two noise families (label flips, image corruptions).

Datasets keep the ground truth next to the observed labels so detectors can be
scored afterwards; the trainer only ever reads ``features`` and
``observed_labels``.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, replace
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

import numpy as np

from .errors import ConfigError, ShapeError

X_KINDS = ("gaussian_blur", "contrast")
TEMPLATE_SEED = 20220  # templates are a fixed property of (side, classes), not of the sample seed


@dataclass(frozen=True)
class Sample:
    features: np.ndarray
    observed_label: int
    true_label: int
    y_noisy: bool
    x_noisy: bool


@dataclass
class Dataset:
    features: np.ndarray  # (N, d)
    observed_labels: np.ndarray  # (N,) int
    true_labels: np.ndarray
    y_noisy: np.ndarray  # (N,) bool
    x_noisy: np.ndarray
    n_classes: int
    split: str = "train"
    image_shape: tuple[int, int] | None = None

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        n = self.features.shape[0]
        self.observed_labels = np.asarray(self.observed_labels, dtype=np.int64)
        self.true_labels = np.asarray(self.true_labels, dtype=np.int64)
        self.y_noisy = np.asarray(self.y_noisy, dtype=bool)
        self.x_noisy = np.asarray(self.x_noisy, dtype=bool)
        if self.features.ndim != 2:
            raise ShapeError("features must be 2-D (N, d)")
        for name in ("observed_labels", "true_labels", "y_noisy", "x_noisy"):
            if getattr(self, name).shape != (n,):
                raise ShapeError(f"{name} must have shape ({n},)")
        if n and (self.observed_labels.max() >= self.n_classes or self.true_labels.max() >= self.n_classes):
            raise ConfigError("label exceeds class count")
        if self.split not in ("train", "val"):
            raise ConfigError(f"unknown split {self.split!r}")
        if self.image_shape is not None:
            self.image_shape = tuple(self.image_shape)
            if self.image_shape[0] * self.image_shape[1] != self.feature_dim:
                raise ShapeError(f"image shape {self.image_shape} does not match feature dim {self.feature_dim}")

    def __len__(self):
        return self.features.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    def sample(self, i: int) -> Sample:
        return Sample(
            self.features[i].copy(),
            int(self.observed_labels[i]),
            int(self.true_labels[i]),
            bool(self.y_noisy[i]),
            bool(self.x_noisy[i]),
        )

    @property
    def samples(self) -> list[Sample]:
        return [self.sample(i) for i in range(len(self))]

    def copy(self) -> "Dataset":
        return replace(
            self,
            features=self.features.copy(),
            observed_labels=self.observed_labels.copy(),
            true_labels=self.true_labels.copy(),
            y_noisy=self.y_noisy.copy(),
            x_noisy=self.x_noisy.copy(),
        )


@dataclass
class NoiseSpec:
    y_rate: float = 0.0
    x_rate: float = 0.0
    x_kinds: tuple[str, ...] = X_KINDS
    blur_sigma: float = 1.5
    contrast_factor: float = 0.3
    rng_seed: int = 0

    def __post_init__(self):
        self.x_kinds = tuple(self.x_kinds)
        errs = []
        for name in ("y_rate", "x_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                errs.append(f"{name} must be in [0, 1], got {getattr(self, name)}")
        bad = [k for k in self.x_kinds if k not in X_KINDS]
        if bad:
            errs.append(f"unknown x_kinds {bad}; choose from {list(X_KINDS)}")
        if self.x_rate > 0 and not self.x_kinds:
            errs.append("x_kinds must be non-empty when x_rate > 0")
        if not self.blur_sigma > 0:
            errs.append("blur_sigma must be positive")
        if not 0.0 < self.contrast_factor < 1.0:
            errs.append("contrast_factor must be in (0, 1)")
        if errs:
            raise ConfigError(errs)


def round_half_up(x) -> int:
    """Nearest integer, halves rounded up; decimal arithmetic avoids 0.1*N drift."""
    return int(Decimal(str(x)).quantize(Decimal(1), rounding=ROUND_HALF_UP))


def noisy_count(rate: float, n: int) -> int:
    return round_half_up(Decimal(str(rate)) * n)


# -- generators ----------------------------------------------------------------


def make_blobs(classes: int, per_class: int, dim: int, spread: float = 1.0, seed=0,
               separation: float = 1.0, split: str = "train") -> Dataset:
    """Isotropic Gaussian clusters; class means are drawn from a fixed stream.

    Means depend only on ``(classes, dim, separation)`` so train and validation
    sets built with different seeds share the same clusters.
    """
    if classes < 2 or per_class < 1:
        raise ConfigError("make_blobs needs classes >= 2 and per_class >= 1")
    means = np.random.default_rng([TEMPLATE_SEED, classes, dim]).normal(0.0, separation, size=(classes, dim))
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(classes), per_class)
    feats = means[labels] + spread * rng.standard_normal((labels.size, dim))
    n = labels.size
    return Dataset(feats, labels, labels.copy(), np.zeros(n, bool), np.zeros(n, bool), classes, split)


def glyph_templates(side: int, classes: int) -> np.ndarray:
    """One fixed stroke glyph per class, shape ``(classes, side, side)``, values in {0, 1}.

    Each glyph is the union of three random straight strokes; glyphs are
    redrawn until pairwise distinct.
    """
    rng = np.random.default_rng([TEMPLATE_SEED, side, classes])
    out = np.zeros((classes, side, side))
    seen = set()
    c = 0
    while c < classes:
        img = np.zeros((side, side))
        for _ in range(3):
            r0, c0 = rng.integers(0, side, size=2)
            dr, dc = [(0, 1), (1, 0), (1, 1), (1, -1)][rng.integers(4)]
            length = rng.integers(side // 2, side + 1)
            for t in range(length):
                r, cc = r0 + t * dr, c0 + t * dc
                if 0 <= r < side and 0 <= cc < side:
                    img[r, cc] = 1.0
        key = img.tobytes()
        if key in seen:
            continue
        seen.add(key)
        out[c] = img
        c += 1
    return out


def make_grid_digits(side: int, classes: int, per_class: int, seed=0, jitter: float = 0.2,
                     split: str = "train") -> Dataset:
    """Grayscale glyph images: class template plus clipped Gaussian pixel jitter."""
    if side < 8:
        raise ShapeError("make_grid_digits needs side >= 8")
    if classes < 2 or per_class < 1:
        raise ConfigError("make_grid_digits needs classes >= 2 and per_class >= 1")
    templates = glyph_templates(side, classes).reshape(classes, -1)
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(classes), per_class)
    feats = templates[labels]
    if jitter > 0:
        feats = feats + jitter * rng.standard_normal(feats.shape)
    feats = np.clip(feats, 0.0, 1.0)
    n = labels.size
    return Dataset(feats, labels, labels.copy(), np.zeros(n, bool), np.zeros(n, bool), classes, split,
                   image_shape=(side, side))


# -- corruptions ----------------------------------------------------------------


def gaussian_kernel1d(sigma: float) -> np.ndarray:
    radius = math.ceil(3 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def _blur_axis(img: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    radius = kernel.size // 2
    pad = [(0, 0), (0, 0)]
    pad[axis] = (radius, radius)
    # "symmetric" duplicates the edge pixel: the resulting operator is symmetric, so the mean is kept
    padded = np.pad(img, pad, mode="symmetric")
    n = img.shape[axis]
    out = np.zeros_like(img)
    for k, w in enumerate(kernel):
        out += w * (padded[k:k + n, :] if axis == 0 else padded[:, k:k + n])
    return out


def gaussian_blur(image: np.ndarray, sigma: float) -> np.ndarray:
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2 or min(image.shape) < 2:
        raise ShapeError(f"gaussian_blur needs a 2-D image with sides >= 2, got {image.shape}")
    if not sigma > 0:
        raise ConfigError("sigma must be positive")
    kernel = gaussian_kernel1d(sigma)
    out = _blur_axis(_blur_axis(image, kernel, 0), kernel, 1)
    return np.clip(out, 0.0, 1.0)


def contrast(image: np.ndarray, factor: float) -> np.ndarray:
    image = np.asarray(image, dtype=np.float64)
    m = image.mean()
    return np.clip(m + factor * (image - m), 0.0, 1.0)


def corrupt(image: np.ndarray, kind: str, spec: NoiseSpec) -> np.ndarray:
    if kind == "gaussian_blur":
        return gaussian_blur(image, spec.blur_sigma)
    if kind == "contrast":
        return contrast(image, spec.contrast_factor)
    raise ConfigError(f"unknown corruption {kind!r}")


# -- injection -------------------------------------------------------------------


def inject_label_noise(ds: Dataset, y_rate: float, seed) -> Dataset:
    """Symmetric label noise: flip round(y_rate*N) labels to a uniformly drawn other class."""
    if not 0.0 <= y_rate <= 1.0:
        raise ConfigError(f"y_rate must be in [0, 1], got {y_rate}")
    if ds.split != "train":
        raise ConfigError("label noise is only injected into the train split")
    out = ds.copy()
    n, k = len(ds), noisy_count(y_rate, len(ds))
    rng = np.random.default_rng(seed)
    idx = rng.choice(n, size=k, replace=False)
    offsets = rng.integers(1, ds.n_classes, size=k)
    out.observed_labels[idx] = (out.true_labels[idx] + offsets) % ds.n_classes
    out.y_noisy = out.observed_labels != out.true_labels
    return out


def inject_x_noise(ds: Dataset, spec: NoiseSpec, seed=None) -> Dataset:
    """Corrupt round(x_rate*N) images, each with one kind drawn uniformly from ``spec.x_kinds``."""
    if ds.split != "train":
        raise ConfigError("image noise is only injected into the train split")
    if spec.x_rate > 0 and ds.image_shape is None:
        raise ShapeError("inject_x_noise needs image-shaped features")
    out = ds.copy()
    k = noisy_count(spec.x_rate, len(ds))
    rng = np.random.default_rng(spec.rng_seed if seed is None else seed)
    idx = rng.choice(len(ds), size=k, replace=False)
    kinds = rng.integers(0, len(spec.x_kinds), size=k) if k else np.zeros(0, int)
    for i, kind in zip(idx, kinds):
        img = out.features[i].reshape(ds.image_shape)
        out.features[i] = corrupt(img, spec.x_kinds[kind], spec).ravel()
        out.x_noisy[i] = True
    return out


def apply_noise(ds: Dataset, spec: NoiseSpec) -> Dataset:
    """Label noise then image noise, from independent streams derived from ``spec.rng_seed``."""
    y_seed, x_seed = np.random.SeedSequence(spec.rng_seed).spawn(2)
    out = inject_label_noise(ds, spec.y_rate, y_seed)
    if spec.x_rate > 0:
        out = inject_x_noise(out, spec, seed=x_seed)
    return out


# -- text format -------------------------------------------------------------------


def dumps_dataset(ds: Dataset) -> str:
    buf = io.StringIO()
    buf.write(f"{ds.n_classes} {ds.feature_dim} {len(ds)}\n")
    for i in range(len(ds)):
        head = f"{ds.observed_labels[i]} {ds.true_labels[i]} {int(ds.y_noisy[i])} {int(ds.x_noisy[i])}"
        feats = " ".join(f"{v:.9g}" for v in ds.features[i])
        buf.write(f"{head} {feats}\n")
    return buf.getvalue()


def loads_dataset(text: str, split: str = "train", image_shape=None) -> Dataset:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ShapeError("empty dataset file")
    try:
        c, d, n = (int(t) for t in lines[0].split())
    except ValueError as exc:
        raise ShapeError(f"bad header {lines[0]!r}") from exc
    if len(lines) - 1 != n:
        raise ShapeError(f"header says {n} samples, found {len(lines) - 1}")
    rows = [ln.split() for ln in lines[1:]]
    if any(len(r) != d + 4 for r in rows):
        raise ShapeError(f"every sample line needs {d + 4} fields")
    ints = np.array([[int(t) for t in r[:4]] for r in rows], dtype=np.int64).reshape(n, 4)
    feats = np.array([[float(t) for t in r[4:]] for r in rows], dtype=np.float64).reshape(n, d)
    if image_shape is None:
        side = math.isqrt(d)
        image_shape = (side, side) if side * side == d and side >= 2 else None
    return Dataset(feats, ints[:, 0], ints[:, 1], ints[:, 2].astype(bool), ints[:, 3].astype(bool), c, split,
                   image_shape)


def save_dataset(ds: Dataset, path) -> None:
    Path(path).write_text(dumps_dataset(ds))


def load_dataset(path, split: str = "train") -> Dataset:
    return loads_dataset(Path(path).read_text(), split=split)
