"""Dataset ingestion, class means, cross-validation splits and the PCA pre-step.

Vector data is stored column-per-sample (``features`` is ``m x n``), the
layout every projection method in this package works in. Labels are always
dense integers ``1..p``.
"""
from __future__ import annotations

import csv
import json
import logging
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DataFormatError,
    DecodeError,
    DegenerateDataError,
    EmptyInputError,
    ParseError,
    ProtocolError,
    ShapeError,
)

logger = logging.getLogger(__name__)

# eigenvalues at or below this fraction of the largest count as zero
PCA_NULL_TOL = 1e-10


def _frozen(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


def dense_labels(raw: Sequence) -> np.ndarray:
    """Re-index arbitrary labels to ``1..p`` in first-occurrence order."""
    mapping: dict = {}
    out = np.empty(len(raw), dtype=np.int64)
    for i, lab in enumerate(raw):
        if lab not in mapping:
            mapping[lab] = len(mapping) + 1
        out[i] = mapping[lab]
    return out


def _squeeze_labels(labels: np.ndarray) -> np.ndarray:
    # monotone remap onto 1..p'; identity when no class is missing
    return np.searchsorted(np.unique(labels), labels) + 1


@dataclass(frozen=True)
class LabeledDataset:
    """Feature matrix (``m x n``, one column per sample) with labels in ``1..p``."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        X = _frozen(self.features)
        y = _frozen(self.labels, dtype=np.int64)
        if X.ndim != 2:
            raise ShapeError(f"features must be 2-D, got shape {X.shape}")
        if y.ndim != 1 or y.shape[0] != X.shape[1]:
            raise ShapeError(
                f"{X.shape[1]} feature columns but {y.shape[0]} labels")
        if not np.all(np.isfinite(X)):
            raise DataFormatError("features contain non-finite entries")
        if y.size:
            present = np.unique(y)
            p = int(present.max())
            if present.min() < 1 or present.size != p:
                raise DataFormatError(
                    f"labels must cover 1..{p} with no gaps, got {present.tolist()}")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    @property
    def m(self) -> int:
        return self.features.shape[0]

    @property
    def n(self) -> int:
        return self.features.shape[1]

    @property
    def p(self) -> int:
        return int(self.labels.max()) if self.labels.size else 0

    def class_indices(self) -> list[np.ndarray]:
        """Sample indices of each class, in label order."""
        return [np.flatnonzero(self.labels == c) for c in range(1, self.p + 1)]

    def subset(self, idx) -> "LabeledDataset":
        """Columns ``idx``; labels keep their order, absent classes are squeezed out."""
        idx = np.asarray(idx, dtype=np.int64)
        return LabeledDataset(self.features[:, idx], _squeeze_labels(self.labels[idx]))


@dataclass(frozen=True)
class ImageDataset:
    """Stack of ``N`` equally sized grayscale images (``N x h x w``) with labels."""

    images: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        imgs = _frozen(self.images)
        y = _frozen(self.labels, dtype=np.int64)
        if imgs.ndim != 3:
            raise ShapeError(f"images must be an (N, h, w) array, got shape {imgs.shape}")
        if y.shape != (imgs.shape[0],):
            raise ShapeError(f"{imgs.shape[0]} images but {y.shape[0]} labels")
        if not np.all(np.isfinite(imgs)):
            raise DataFormatError("images contain non-finite entries")
        object.__setattr__(self, "images", imgs)
        object.__setattr__(self, "labels", y)

    @property
    def shape(self) -> tuple[int, int]:
        return self.images.shape[1], self.images.shape[2]

    @property
    def n(self) -> int:
        return self.images.shape[0]

    @property
    def p(self) -> int:
        return int(self.labels.max()) if self.labels.size else 0

    def class_indices(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.labels == c) for c in range(1, self.p + 1)]

    def subset(self, idx) -> "ImageDataset":
        idx = np.asarray(idx, dtype=np.int64)
        return ImageDataset(self.images[idx], _squeeze_labels(self.labels[idx]))


# --------------------------------------------------------------------------- io

def load_csv_dataset(path) -> LabeledDataset:
    """Read ``label,f1,...,fm`` rows into a column-per-sample dataset."""
    rows = []
    raw_labels = []
    width = None
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if width is None:
                width = len(row)
                if width < 2:
                    raise DataFormatError(f"row {lineno}: need a label and at least one feature")
            elif len(row) != width:
                raise DataFormatError(
                    f"row {lineno}: expected {width} fields, found {len(row)}")
            raw_labels.append(row[0].strip())
            try:
                rows.append([float(cell) for cell in row[1:]])
            except ValueError as exc:
                raise ParseError(f"row {lineno}: {exc}") from None
    if not rows:
        raise EmptyInputError(f"{path}: no samples")
    return LabeledDataset(np.array(rows).T, dense_labels(raw_labels))


def read_pgm(path) -> np.ndarray:
    """Decode an 8-bit P2/P5 PGM into floats in ``[0, 1]``."""
    with open(path, "rb") as fh:
        data = fh.read()
    name = os.fspath(path)

    tokens = []
    pos = 0
    # magic, width, height, maxval; '#' comments allowed between tokens
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise DecodeError(f"{name}: truncated PGM header")
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
        if len(tokens) == 1 and tokens[0] not in (b"P2", b"P5"):
            raise DecodeError(f"{name}: not a P2/P5 PGM file")
    try:
        w, h, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise DecodeError(f"{name}: corrupt PGM header") from None
    if w <= 0 or h <= 0 or not 0 < maxval <= 255:
        raise DecodeError(f"{name}: unsupported PGM geometry/maxval {w}x{h}/{maxval}")

    if tokens[0] == b"P5":
        body = data[pos + 1:pos + 1 + w * h]
        if len(body) != w * h:
            raise DecodeError(f"{name}: expected {w * h} pixel bytes, found {len(body)}")
        pix = np.frombuffer(body, dtype=np.uint8).astype(float)
    else:
        try:
            pix = np.array(data[pos:].split(), dtype=float)
        except ValueError:
            raise DecodeError(f"{name}: non-numeric pixel data") from None
        if pix.size != w * h:
            raise DecodeError(f"{name}: expected {w * h} pixels, found {pix.size}")
    if pix.max(initial=0) > maxval:
        raise DecodeError(f"{name}: pixel value exceeds maxval {maxval}")
    return pix.reshape(h, w) / maxval


def write_pgm(path, image: np.ndarray) -> None:
    """Write a ``[0, 1]`` float image as binary P5."""
    img = np.clip(np.rint(np.asarray(image) * 255), 0, 255).astype(np.uint8)
    h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


def resize_bilinear(image: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    """Bilinear resize with corner-aligned sampling (corners map onto corners)."""
    H, W = image.shape
    h, w = shape

    def axis(n_out, n_in):
        if n_out == 1 or n_in == 1:
            pos = np.zeros(n_out)
        else:
            pos = np.arange(n_out) * (n_in - 1) / (n_out - 1)
        i0 = np.minimum(np.floor(pos).astype(int), max(n_in - 2, 0))
        i1 = np.minimum(i0 + 1, n_in - 1)
        return i0, i1, pos - i0

    r0, r1, fr = axis(h, H)
    c0, c1, fc = axis(w, W)
    fr = fr[:, None]
    fc = fc[None, :]
    top = image[np.ix_(r0, c0)] * (1 - fc) + image[np.ix_(r0, c1)] * fc
    bot = image[np.ix_(r1, c0)] * (1 - fc) + image[np.ix_(r1, c1)] * fc
    return top * (1 - fr) + bot * fr


def load_image_tree(root, resize: tuple[int, int] | None = None) -> ImageDataset:
    """Load ``root/<class>/<image>.pgm`` into an :class:`ImageDataset`.

    Classes are numbered by sorted subdirectory name, files within a class are
    read in sorted order.
    """
    classes = sorted(e.name for e in os.scandir(root) if e.is_dir())
    images, labels = [], []
    for label, cls in enumerate(classes, start=1):
        cdir = os.path.join(root, cls)
        for fname in sorted(os.listdir(cdir)):
            fpath = os.path.join(cdir, fname)
            if not os.path.isfile(fpath):
                continue
            img = read_pgm(fpath)
            if resize is not None:
                img = resize_bilinear(img, tuple(resize))
            images.append(img)
            labels.append(label)
    if not images:
        raise EmptyInputError(f"{root}: no images found")
    shapes = {im.shape for im in images}
    if len(shapes) > 1:
        raise ShapeError(f"{root}: mixed image sizes {sorted(shapes)}; pass a resize")
    return ImageDataset(np.stack(images), np.array(labels))


def vectorize(images: ImageDataset) -> LabeledDataset:
    """Flatten each image column-major into one feature column."""
    imgs = np.asarray(images.images)
    if imgs.ndim != 3:
        raise ShapeError("all images must share one shape")
    n, h, w = imgs.shape
    # column-major flatten of each image == row-major flatten of its transpose
    X = imgs.transpose(0, 2, 1).reshape(n, h * w).T
    return LabeledDataset(X, images.labels)


def unvectorize(column: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    return np.asarray(column).reshape(shape, order="F")


def class_means(data: LabeledDataset) -> np.ndarray:
    """``m x p`` matrix whose column ``c-1`` is the mean of class ``c``."""
    X = data.features
    return np.column_stack([X[:, idx].mean(axis=1) for idx in data.class_indices()])


# ----------------------------------------------------------------------- splits

@dataclass(frozen=True)
class SplitPlan:
    scheme: str
    seed: int
    folds: tuple[tuple[np.ndarray, np.ndarray], ...]
    k: int | None = None
    n: int | None = None
    dropped: int = 0

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "seed": self.seed,
            "folds": [{"train": tr.tolist(), "test": te.tolist()} for tr, te in self.folds],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))


SCHEMES = ("leave-one-out", "k-fold", "two-fold", "single-sample", "first-n-train")


def make_splits(labels, scheme: str, seed: int = 0, *, k: int | None = None,
                n: int | None = None) -> SplitPlan:
    """Build a deterministic cross-validation plan.

    ``scheme`` is one of ``leave-one-out``, ``k-fold`` (needs ``k``),
    ``two-fold``, ``single-sample`` and ``first-n-train`` (needs ``n``).
    Indices are zero-based and sorted within each fold.
    """
    labels = np.asarray(labels)
    classes = [np.flatnonzero(labels == c) for c in np.unique(labels)]
    counts = {int(labels[idx[0]]): len(idx) for idx in classes}

    if scheme == "two-fold":
        scheme, k = "k-fold", 2
        plan_name = "two-fold"
    else:
        plan_name = scheme

    folds = []
    dropped = 0
    if scheme == "leave-one-out":
        bad = sorted(c for c, cnt in counts.items() if cnt < 2)
        if bad:
            raise ProtocolError(f"leave-one-out needs >= 2 samples per class; offending classes {bad}")
        for i in range(labels.size):
            folds.append((np.delete(np.arange(labels.size), i), np.array([i])))
    elif scheme == "k-fold":
        if k is None or k < 2:
            raise ProtocolError("k-fold needs k >= 2")
        bad = sorted(c for c, cnt in counts.items() if cnt < 2)
        if bad:
            raise ProtocolError(f"k-fold needs >= 2 samples per class; offending classes {bad}")
        rng = np.random.default_rng(seed)
        assign = np.empty(labels.size, dtype=np.int64)
        for idx in classes:
            perm = rng.permutation(idx)
            assign[perm] = np.arange(perm.size) % k
        for f in range(k):
            test = np.flatnonzero(assign == f)
            if test.size:
                folds.append((np.flatnonzero(assign != f), test))
    elif scheme in ("single-sample", "first-n-train"):
        n_train = 1 if scheme == "single-sample" else n
        if n_train is None or n_train < 1:
            raise ProtocolError("first-n-train needs n >= 1")
        kept = [idx for idx in classes if idx.size >= n_train + 1]
        dropped = int(sum(idx.size for idx in classes if idx.size < n_train + 1))
        if dropped:
            logger.warning("%s: dropped %d samples from classes with <= %d samples",
                           plan_name, dropped, n_train)
        if not kept:
            raise ProtocolError(f"{plan_name}: no class has more than {n_train} samples")
        if scheme == "single-sample":
            n_folds = min(idx.size for idx in kept)
            for j in range(n_folds):
                train = np.sort(np.array([idx[j] for idx in kept]))
                test = np.sort(np.concatenate([np.delete(idx, j) for idx in kept]))
                folds.append((train, test))
        else:
            train = np.sort(np.concatenate([idx[:n_train] for idx in kept]))
            test = np.sort(np.concatenate([idx[n_train:] for idx in kept]))
            folds.append((train, test))
    else:
        raise ProtocolError(f"unknown split scheme {scheme!r}; expected one of {SCHEMES}")

    folds = tuple((np.asarray(tr, dtype=np.int64), np.asarray(te, dtype=np.int64))
                  for tr, te in folds)
    return SplitPlan(plan_name, int(seed), folds, k=k, n=n, dropped=dropped)


# -------------------------------------------------------------------------- pca

@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    basis: np.ndarray
    eigenvalues: np.ndarray
    ratio: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "mean", _frozen(self.mean))
        object.__setattr__(self, "basis", _frozen(self.basis))
        object.__setattr__(self, "eigenvalues", _frozen(self.eigenvalues))

    @property
    def r(self) -> int:
        return self.basis.shape[1]

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.shape[0] != self.mean.shape[0]:
            raise ShapeError(f"expected {self.mean.shape[0]} rows, got {X.shape[0]}")
        return self.basis.T @ (X - self.mean[:, None])

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "basis": self.basis.tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
            "ratio": self.ratio,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PcaModel":
        return cls(np.array(d["mean"]), np.array(d["basis"]), np.array(d["eigenvalues"]),
                   d.get("ratio", 1.0))


def _centered_spectrum(X: np.ndarray):
    mean = X.mean(axis=1)
    Xc = X - mean[:, None]
    U, s, _ = np.linalg.svd(Xc, full_matrices=False)
    evals = s ** 2 / (X.shape[1] - 1)
    return mean, U, evals


def fit_pca_model(X: np.ndarray, ratio: float = 1.0) -> PcaModel:
    X = np.asarray(X, dtype=float)
    if not 0 < ratio <= 1:
        raise ValueError(f"ratio must lie in (0, 1], got {ratio}")
    if X.shape[1] < 2:
        raise DegenerateDataError("PCA needs at least two samples")
    mean, U, evals = _centered_spectrum(X)
    if evals.size == 0 or evals[0] <= 0:
        raise DegenerateDataError("all samples are identical; no nonzero eigenvalue")
    nonzero = int(np.count_nonzero(evals > PCA_NULL_TOL * evals[0]))
    total = evals.sum()
    # relative slack so ratio=1 is not defeated by the round-off in cumsum
    r = int(np.searchsorted(np.cumsum(evals), ratio * total * (1 - 1e-12))) + 1
    r = min(r, nonzero)
    basis = U[:, :r]
    # sign convention: largest-magnitude entry of each component is positive
    flip = np.sign(basis[np.argmax(np.abs(basis), axis=0), np.arange(r)])
    return PcaModel(mean, basis * flip, evals[:r], ratio)


def pca_preprocess(data: LabeledDataset, ratio: float = 1.0) -> tuple[PcaModel, LabeledDataset]:
    """Center the data and keep the leading principal directions.

    With ``ratio=1`` every direction with a nonzero eigenvalue is kept, so
    the reduced dimension is the rank of the centered data.
    """
    model = fit_pca_model(data.features, ratio)
    return model, LabeledDataset(model.transform(data.features), data.labels)
