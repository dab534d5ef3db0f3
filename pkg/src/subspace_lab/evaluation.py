"""Classifiers, cross-validation runs, beta sweeps and scatter export."""
from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial.distance import cdist

from .dataset import ImageDataset, LabeledDataset, SplitPlan, class_means, pca_preprocess
from .errors import ProtocolError, ShapeError, SubspaceLabError
from .graph import DOT, WeightScheme
from .projections import DEFAULT_BETA, METHODS, ProjectionModel, embed, fit_method
from .twod import Projection2DModel, embed_2d, fit_2d_glpp

logger = logging.getLogger(__name__)

TWO_D_METHODS = ("glpp2d", "lpp2d")
DEFAULT_BETAS = (0.01, 0.1, 1.0, 10.0, 100.0, 1000.0, 10000.0, 100000.0)
LRC_RCOND = 1e-10


class FoldError(ProtocolError):
    def __init__(self, fold: int, cause: Exception):
        super().__init__(f"fold {fold}: {type(cause).__name__}: {cause}")
        self.fold = fold
        self.cause = cause


@dataclass(frozen=True)
class MethodConfig:
    name: str = "glpp"
    scheme: WeightScheme = DOT
    beta: float = DEFAULT_BETA
    supervised: bool = True
    pca_ratio: float = 1.0
    classifier: str | None = None

    def __post_init__(self):
        if self.name not in METHODS + TWO_D_METHODS:
            raise ValueError(f"unknown method {self.name!r}")
        if self.classifier not in (None, "nn", "lrc"):
            raise ValueError(f"unknown classifier {self.classifier!r}")

    @property
    def two_d(self) -> bool:
        return self.name in TWO_D_METHODS

    @property
    def resolved_classifier(self) -> str:
        if self.classifier is not None:
            return self.classifier
        return "lrc" if self.two_d else "nn"


# ------------------------------------------------------------------ classifiers

def nn_classify(train, train_labels, test) -> np.ndarray:
    """1-NN in Euclidean space; ties go to the lowest training index."""
    train = np.asarray(train, dtype=float)
    test = np.asarray(test, dtype=float)
    train_labels = np.asarray(train_labels)
    if train.ndim == 1:
        train = train[None, :]
    if test.ndim == 1:
        test = test[:, None] if train.shape[0] == test.shape[0] else test[None, :]
    if train.shape[1] == 0:
        raise ProtocolError("empty training set")
    if train.shape[0] != test.shape[0]:
        raise ShapeError(f"train has {train.shape[0]} features, test has {test.shape[0]}")
    d2 = cdist(test.T, train.T, "sqeuclidean")
    return train_labels[np.argmin(d2, axis=1)]


def lrc_classify_2d(train_features, test) -> int:
    """Linear regression classification over per-class feature lists.

    ``train_features[c]`` holds the training feature matrices of class
    ``c + 1``. The test feature is regressed onto each class span by
    pseudoinverse least squares; the class with the smallest residual wins.
    """
    y = np.asarray(test, dtype=float).ravel(order="F")
    best_label, best_res = None, np.inf
    for c, feats in enumerate(train_features, start=1):
        Xc = np.column_stack([np.asarray(f, dtype=float).ravel(order="F") for f in feats])
        coef = np.linalg.pinv(Xc, rcond=LRC_RCOND) @ y
        res = float(np.linalg.norm(y - Xc @ coef))
        if res < best_res:
            best_label, best_res = c, res
    if best_label is None:
        raise ProtocolError("no training classes")
    return best_label


# --------------------------------------------------------------------- protocol

@dataclass
class EvalReport:
    """Cross-validated accuracies over a grid of kept dimensions.

    ``fold_accuracy[f, k]`` is fold ``f`` at ``dims[k]``. ``best_dim`` is the
    smallest grid dimension with the highest pooled rate (correct test
    samples over all test samples); per-fold accuracies, ARA and STD are
    reported at that dimension.
    """

    method: str
    scheme: WeightScheme | None
    beta: float | None
    dims: list[int]
    correct: np.ndarray
    totals: np.ndarray
    wall_time_s: dict = field(default_factory=dict)
    models: list | None = None

    @property
    def fold_accuracy(self) -> np.ndarray:
        return self.correct / self.totals[:, None]

    @property
    def pooled(self) -> np.ndarray:
        return self.correct.sum(axis=0) / self.totals.sum()

    @property
    def best_index(self) -> int:
        return int(np.argmax(self.pooled))

    @property
    def best_dim(self) -> int:
        return self.dims[self.best_index]

    @property
    def per_fold_accuracy(self) -> list[float]:
        return self.fold_accuracy[:, self.best_index].tolist()

    def at_dim(self, dim: int) -> tuple[float, float, float]:
        """``(ara, std, pooled rate)`` at one grid dimension."""
        k = self.dims.index(dim)
        acc = self.fold_accuracy[:, k]
        std = float(np.std(acc, ddof=1)) if acc.size > 1 else 0.0
        return float(np.mean(acc)), std, float(self.pooled[k])

    @property
    def ara(self) -> float:
        return self.at_dim(self.best_dim)[0]

    @property
    def std(self) -> float:
        return self.at_dim(self.best_dim)[1]

    @property
    def top_rate(self) -> float:
        return float(self.pooled[self.best_index])

    @property
    def curves(self) -> list[tuple[int, float]]:
        return [(d, float(a)) for d, a in zip(self.dims, self.fold_accuracy.mean(axis=0))]

    def to_dict(self) -> dict:
        d = {"method": self.method,
             "scheme": self.scheme.to_dict() if self.scheme is not None else None}
        if self.beta is not None:
            d["beta"] = self.beta
        d.update({
            "folds": self.per_fold_accuracy,
            "ara": self.ara,
            "std": self.std,
            "top_rate": self.top_rate,
            "best_dim": self.best_dim,
            "curves": [[x, a] for x, a in self.curves],
        })
        return d


def fit_pipeline(train: LabeledDataset | ImageDataset, config: MethodConfig, d: int):
    """Fit one model on training data only.

    1D methods run the PCA pre-step first and carry it as the model's
    pre-chain; 2D methods work on the raw images.
    """
    if config.two_d:
        if not isinstance(train, ImageDataset):
            raise ProtocolError(f"{config.name} needs image data")
        return fit_2d_glpp(train, d, config.scheme, config.beta,
                           globality=config.name == "glpp2d")
    if not isinstance(train, LabeledDataset):
        raise ProtocolError(f"{config.name} needs vector data")
    pca, reduced = pca_preprocess(train, config.pca_ratio)
    model = fit_method(reduced, config.name, d, config.scheme, config.beta, config.supervised)
    return replace(model, pre_chain=pca)


def _classify_fold(data, config, model, train, test, dims) -> np.ndarray:
    labels = data.labels
    y_test = labels[test]
    correct = np.zeros(len(dims), dtype=np.int64)
    if config.two_d:
        F_train = embed_2d(model, data.images[train])
        F_test = embed_2d(model, data.images[test])
        classes = np.unique(labels[train])
        for j, k in enumerate(dims):
            if config.resolved_classifier == "lrc":
                per_class = [list(F_train[labels[train] == c][:, :, :k]) for c in classes]
                pred = np.array([classes[lrc_classify_2d(per_class, f[:, :k]) - 1]
                                 for f in F_test])
            else:
                Ytr = F_train[:, :, :k].reshape(len(train), -1).T
                Yte = F_test[:, :, :k].reshape(len(test), -1).T
                pred = nn_classify(Ytr, labels[train], Yte)
            correct[j] = np.count_nonzero(pred == y_test)
    else:
        X = data.features
        Ytr = embed(model, X[:, train])
        Yte = embed(model, X[:, test])
        for j, k in enumerate(dims):
            if config.resolved_classifier == "lrc":
                classes = np.unique(labels[train])
                per_class = [[Ytr[:k, i][:, None] for i in np.flatnonzero(labels[train] == c)]
                             for c in classes]
                pred = np.array([classes[lrc_classify_2d(per_class, Yte[:k, i]) - 1]
                                 for i in range(len(test))])
            else:
                pred = nn_classify(Ytr[:k], labels[train], Yte[:k])
            correct[j] = np.count_nonzero(pred == y_test)
    return correct


def _run_fold(data, config, fold, train, test, dims):
    try:
        t0 = time.perf_counter()
        model = fit_pipeline(data.subset(train), config, max(dims))
        t1 = time.perf_counter()
        correct = _classify_fold(data, config, model, train, test, dims)
        t2 = time.perf_counter()
    except SubspaceLabError as exc:
        raise FoldError(fold, exc) from exc
    return correct, model, t1 - t0, t2 - t1


def _normalise_dims(dims) -> list[int]:
    dims = sorted({int(k) for k in dims})
    if not dims:
        raise ProtocolError("dimension grid is empty")
    if dims[0] < 1:
        raise ProtocolError(f"dimensions must be >= 1, got {dims[0]}")
    return dims


def run_protocol(data, config: MethodConfig, splits: SplitPlan, dims, *,
                 threads: int = 1, keep_models: bool = False) -> EvalReport:
    """Fit on each fold's training part and classify its test part at every grid dimension.

    One fit at ``max(dims)`` serves the whole grid: the leading ``k``
    projections are nested, so truncating ``W`` is the same as refitting.
    """
    dims = _normalise_dims(dims)
    if not splits.folds:
        raise ProtocolError("split plan has no folds")
    for f, (train, test) in enumerate(splits.folds):
        missing = np.setdiff1d(data.labels[test], data.labels[train])
        if missing.size:
            raise ProtocolError(f"fold {f}: classes {missing.tolist()} have no training sample")
    t_start = time.perf_counter()
    jobs = [(f, tr, te) for f, (tr, te) in enumerate(splits.folds)]

    def work(job):
        f, tr, te = job
        return _run_fold(data, config, f, tr, te, dims)

    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, jobs))
    else:
        results = [work(j) for j in jobs]

    correct = np.array([r[0] for r in results])
    totals = np.array([len(te) for _, _, te in jobs], dtype=np.int64)
    timings = {
        "fit": float(sum(r[2] for r in results)),
        "classify": float(sum(r[3] for r in results)),
        "total": time.perf_counter() - t_start,
    }
    uses_beta = config.name in ("glpp", "glpp2d", "lpp2d")
    uses_scheme = config.name not in ("pca", "lda")
    return EvalReport(
        method=config.name,
        scheme=config.scheme if uses_scheme else None,
        beta=float(config.beta) if uses_beta else None,
        dims=dims,
        correct=correct,
        totals=totals,
        wall_time_s=timings,
        models=[r[1] for r in results] if keep_models else None,
    )


def sweep_beta(data, config: MethodConfig, splits: SplitPlan, betas=DEFAULT_BETAS, dims=(1,),
               *, threads: int = 1) -> list[tuple[float, EvalReport]]:
    """One full protocol run per beta, in grid order."""
    if config.name not in ("glpp", "glpp2d", "lpp2d"):
        raise ProtocolError(f"beta sweep needs a GLPP method, got {config.name}")
    out = []
    for beta in betas:
        if not beta > 0:
            raise ProtocolError(f"beta must be positive, got {beta}")
        out.append((float(beta), run_protocol(data, replace(config, beta=float(beta)),
                                              splits, dims, threads=threads)))
    return out


def export_scatter(model: ProjectionModel | Projection2DModel, data, *, points: str = "means"):
    """First two embedding coordinates as ``(x, y, label)`` rows.

    ``points="means"`` embeds the class means (one row per class),
    ``"samples"`` embeds every sample.
    """
    if model.d < 2:
        raise ShapeError(f"scatter export needs >= 2 projections, model has {model.d}")
    if isinstance(model, Projection2DModel):
        raise ShapeError("scatter export is defined for vector projections")
    if points == "means":
        P = class_means(data)
        labels = np.arange(1, P.shape[1] + 1)
    elif points == "samples":
        P, labels = data.features, data.labels
    else:
        raise ValueError(f"points must be 'means' or 'samples', got {points!r}")
    Y = embed(model, P)[:2]
    return [(float(x), float(y), int(c)) for x, y, c in zip(Y[0], Y[1], labels)]
