"""Adjacency weights, degree matrices and graph Laplacians.

Three weighting schemes are supported: clamped dot-product (cosine) weights,
heat-kernel weights and 0-1 k-nearest-neighbour weights. Graphs are dense;
the sample counts this package targets are a few hundred to a few thousand.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .dataset import LabeledDataset, _frozen
from .errors import DomainError, ShapeError

KINDS = ("dot-product", "heat-kernel", "binary")


@dataclass(frozen=True)
class WeightScheme:
    """How pairwise closeness is turned into an edge weight.

    ``t`` is the heat-kernel width; ``None`` means the mean squared pairwise
    distance of whatever sample set the graph is built on. ``k`` is the
    neighbour count for the binary scheme.
    """

    kind: str = "dot-product"
    t: float | None = None
    k: int = 5

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown weighting {self.kind!r}; expected one of {KINDS}")
        if self.t is not None and not self.t > 0:
            raise ValueError(f"heat-kernel t must be positive, got {self.t}")
        if self.k < 1:
            raise ValueError(f"binary k must be >= 1, got {self.k}")

    @classmethod
    def parse(cls, text: str) -> "WeightScheme":
        """``dot-product``, ``heat-kernel``, ``heat-kernel:0.5``, ``binary:7``."""
        kind, _, arg = text.strip().partition(":")
        if kind == "heat-kernel" and arg:
            return cls(kind, t=float(arg))
        if kind == "binary" and arg:
            return cls(kind, k=int(arg))
        return cls(kind)

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "heat-kernel" and self.t is not None:
            d["t"] = self.t
        if self.kind == "binary":
            d["k"] = self.k
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "WeightScheme":
        return cls(d["kind"], t=d.get("t"), k=d.get("k", 5))


DOT = WeightScheme("dot-product")


@dataclass(frozen=True)
class WeightGraph:
    S: np.ndarray
    scheme: WeightScheme

    def __post_init__(self):
        object.__setattr__(self, "S", _frozen(self.S))

    @property
    def size(self) -> int:
        return self.S.shape[0]


@dataclass(frozen=True)
class LaplacianPair:
    degree: np.ndarray
    L: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "degree", _frozen(self.degree))
        object.__setattr__(self, "L", _frozen(self.L))

    @property
    def D(self) -> np.ndarray:
        return np.diag(self.degree)


def pair_weight(a, b, scheme: WeightScheme) -> float:
    """Weight of one edge under ``scheme``.

    Binary connectivity is decided at graph level (k-NN), so a pairwise call
    just reports the edge weight 1. The heat kernel needs an explicit ``t``.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise ShapeError(f"vector lengths differ: {a.size} vs {b.size}")
    if scheme.kind == "dot-product":
        return max(float(a @ b), 0.0)
    if scheme.kind == "heat-kernel":
        if scheme.t is None:
            raise ValueError("pair_weight needs an explicit heat-kernel t")
        return float(np.exp(-np.sum((a - b) ** 2) / scheme.t))
    return 1.0


def unit_columns(X: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(X, axis=0)
    return X / np.where(norms > 0, norms, 1.0)


def heat_width(X: np.ndarray) -> float:
    """Mean squared distance over distinct column pairs (1.0 when undefined)."""
    n = X.shape[1]
    if n < 2:
        return 1.0
    d2 = cdist(X.T, X.T, "sqeuclidean")
    t = d2.sum() / (n * (n - 1))
    return float(t) if t > 0 else 1.0


def _knn_mask(X: np.ndarray, k: int) -> np.ndarray:
    n = X.shape[1]
    d2 = cdist(X.T, X.T, "sqeuclidean")
    np.fill_diagonal(d2, np.inf)
    mask = np.zeros((n, n), dtype=bool)
    kk = min(k, n - 1)
    if kk > 0:
        nbrs = np.argsort(d2, axis=1, kind="stable")[:, :kk]
        mask[np.repeat(np.arange(n), kk), nbrs.ravel()] = True
    return mask | mask.T


def weight_matrix(X: np.ndarray, scheme: WeightScheme, t: float | None = None,
                  full: bool = False) -> np.ndarray:
    """All-pairs weights between the columns of ``X``.

    Dot-product weights are computed on unit-normalised columns and clamped
    at zero. ``t`` overrides the heat-kernel width (used when the width comes
    from a larger sample set than ``X``). ``full`` connects every pair under
    the binary scheme instead of using k-NN. The result is exactly symmetric
    with a zero diagonal.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[1]
    if scheme.kind == "dot-product":
        Xn = unit_columns(X)
        S = np.maximum(Xn.T @ Xn, 0.0)
    elif scheme.kind == "heat-kernel":
        if t is None:
            t = scheme.t if scheme.t is not None else heat_width(X)
        S = np.exp(-cdist(X.T, X.T, "sqeuclidean") / t)
    elif full:
        S = np.ones((n, n))
    else:
        S = _knn_mask(X, scheme.k).astype(float) if n > 1 else np.zeros((n, n))
    S = (S + S.T) / 2
    np.fill_diagonal(S, 0.0)
    return S


def all_pairs_graph(X: np.ndarray, scheme: WeightScheme) -> WeightGraph:
    """Graph over every column pair of ``X`` (unsupervised LPP, class means)."""
    return WeightGraph(weight_matrix(X, scheme), scheme)


def within_class_graph(data: LabeledDataset, scheme: WeightScheme):
    """Supervised graph connecting only samples that share a label.

    Returns the global ``n x n`` matrix (block-diagonal once samples are
    ordered by class) and, per class in label order, the sample indices with
    the class block. The heat-kernel width, when automatic, is shared by all
    classes and taken over the whole dataset.
    """
    X = data.features
    t = None
    if scheme.kind == "heat-kernel":
        t = scheme.t if scheme.t is not None else heat_width(X)
    S = np.zeros((data.n, data.n))
    blocks = []
    for idx in data.class_indices():
        H = weight_matrix(X[:, idx], scheme, t=t)
        S[np.ix_(idx, idx)] = H
        blocks.append((idx, WeightGraph(H, scheme)))
    return WeightGraph(S, scheme), blocks


def mean_graph(means: np.ndarray, scheme: WeightScheme) -> WeightGraph:
    """Fully connected graph over the class-mean columns (binary included)."""
    return WeightGraph(weight_matrix(means, scheme, full=True), scheme)


def laplacian(g: WeightGraph | np.ndarray) -> LaplacianPair:
    S = g.S if isinstance(g, WeightGraph) else np.asarray(g, dtype=float)
    deg = S.sum(axis=1)
    return LaplacianPair(deg, np.diag(deg) - S)


def kronecker_lift(L: np.ndarray, m: int) -> np.ndarray:
    """``L ⊗ I_m``: block ``(i, j)`` is ``L[i, j] * I_m``."""
    L = np.asarray(L, dtype=float)
    if m < 1:
        raise DomainError(f"identity size must be >= 1, got {m}")
    if L.ndim != 2 or L.shape[0] != L.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {L.shape}")
    return np.kron(L, np.eye(m))
