"""Linear projection methods: PCA, LDA, LPP, DLPP and GLPP.

Every method reduces to a dense symmetric eigenproblem, either standard
(``A w = λ w``) or generalized (``P w = λ Q w``). Projection matrices are
``m x d`` with one projection per column; :func:`embed` maps column-per-sample
data through an optional PCA pre-chain and then ``W^T``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy import linalg

from .dataset import LabeledDataset, PcaModel, _frozen, class_means, fit_pca_model
from .errors import (
    DegenerateConstraintError,
    DegenerateDataError,
    InsufficientRankError,
    ProtocolError,
    ShapeError,
)
from .graph import (
    DOT,
    WeightScheme,
    all_pairs_graph,
    laplacian,
    mean_graph,
    within_class_graph,
)

METHODS = ("pca", "lda", "lpp", "dlpp", "glpp")

GLPP_NULL_TOL = 1e-9
DEFAULT_BETA = 10000.0
RIDGE_EPS = 1e-10
# squared Cholesky pivot ratio below which Q is treated as singular
_PIVOT_RATIO_TOL = 1e-13
# generalized LDA eigenvalues are dimensionless variance ratios
_LDA_NULL = 1e-10


def _sign_fix(V: np.ndarray) -> np.ndarray:
    """Flip columns so the largest-magnitude entry of each is positive."""
    if V.size == 0:
        return V
    rows = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[rows, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def _symmetric(A, name="matrix", tol=1e-10) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeError(f"{name} must be square, got shape {A.shape}")
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    if A.size and np.max(np.abs(A - A.T)) > tol * scale:
        raise ValueError(f"{name} is not symmetric")
    return (A + A.T) / 2


def _congruence(X: np.ndarray, L: np.ndarray) -> np.ndarray:
    """``X L X^T`` with a fixed memory layout so equal inputs give equal bits."""
    X = np.ascontiguousarray(X, dtype=float)
    return (X @ np.ascontiguousarray(L, dtype=float)) @ X.T


def eig_smallest_sym(A, d: int, null_tol: float = GLPP_NULL_TOL, floor: float = 0.0):
    """The ``d`` smallest eigenpairs of ``A`` lying above the null threshold.

    An eigenvalue counts as nonzero when it exceeds both
    ``null_tol * max|λ|`` and the absolute ``floor`` (callers use the floor to
    reject operators that are zero up to round-off). Returned eigenvectors are
    orthonormal with the largest-magnitude entry of each positive.
    """
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    A = _symmetric(A, "A")
    vals, vecs = linalg.eigh(A)
    top = float(np.max(np.abs(vals))) if vals.size else 0.0
    keep = vals > max(null_tol * top, floor)
    if top == 0.0:
        keep[:] = False
    available = int(keep.sum())
    if available < d:
        raise InsufficientRankError(
            f"requested {d} nonzero eigenpairs but only {available} are available",
            available=available)
    return vals[keep][:d], _sign_fix(vecs[:, keep][:, :d])


def _cholesky_factor(Q: np.ndarray) -> np.ndarray:
    m = Q.shape[0]
    try:
        C = linalg.cholesky(Q, lower=True)
        piv = np.diag(C)
        if (piv.min() / piv.max()) ** 2 >= _PIVOT_RATIO_TOL:
            return C
    except linalg.LinAlgError:
        pass
    ridge = RIDGE_EPS * np.trace(Q) / m
    try:
        return linalg.cholesky(Q + ridge * np.eye(m), lower=True)
    except linalg.LinAlgError:
        raise DegenerateConstraintError(
            "constraint matrix is not positive semi-definite enough for a ridge repair") from None


def eig_generalized(P, Q, d: int, side: str = "smallest"):
    """Solve ``P w = λ Q w`` by Cholesky reduction and return ``d`` pairs.

    ``side`` picks the smallest (ascending) or largest (descending) end of
    the spectrum. A singular ``Q`` gets a ridge of ``1e-10 * trace(Q) / m``.
    Each returned vector is scaled so that ``w^T Q w = 1``.
    """
    if side not in ("smallest", "largest"):
        raise ValueError(f"side must be 'smallest' or 'largest', got {side!r}")
    P = _symmetric(P, "P")
    Q = _symmetric(Q, "Q")
    if P.shape != Q.shape:
        raise ShapeError(f"P is {P.shape} but Q is {Q.shape}")
    m = P.shape[0]
    if not 1 <= d <= m:
        raise InsufficientRankError(f"requested {d} eigenpairs from a {m}-dim problem",
                                    available=m)
    if not np.any(Q):
        raise DegenerateConstraintError("constraint matrix is identically zero")

    C = _cholesky_factor(Q)
    # M = C^-1 P C^-T
    tmp = linalg.solve_triangular(C, P, lower=True)
    M = linalg.solve_triangular(C, tmp.T, lower=True)
    M = (M + M.T) / 2
    vals, V = linalg.eigh(M)
    if side == "smallest":
        sel = np.arange(d)
    else:
        sel = np.arange(m - 1, m - 1 - d, -1)
    vals = vals[sel]
    W = linalg.solve_triangular(C, V[:, sel], lower=True, trans="T")
    q = np.einsum("ij,ij->j", W, Q @ W)
    W = W / np.sqrt(np.where(q > 0, q, 1.0))
    return vals, _sign_fix(W)


# ----------------------------------------------------------------------- models

@dataclass(frozen=True)
class ProjectionModel:
    """A fitted linear projection.

    ``W`` holds one projection per column. ``eigenvalues`` follow the column
    order: ascending for the minimisation methods (LPP, DLPP, GLPP),
    descending for PCA and LDA where the leading direction has the largest
    eigenvalue.
    """

    W: np.ndarray
    eigenvalues: np.ndarray
    method: str
    pre_chain: PcaModel | None = None
    beta: float | None = None
    scheme: WeightScheme | None = None

    def __post_init__(self):
        object.__setattr__(self, "W", _frozen(self.W))
        object.__setattr__(self, "eigenvalues", _frozen(self.eigenvalues))

    @property
    def d(self) -> int:
        return self.W.shape[1]

    @property
    def input_dim(self) -> int:
        return self.pre_chain.mean.shape[0] if self.pre_chain is not None else self.W.shape[0]

    def truncate(self, k: int) -> "ProjectionModel":
        if not 1 <= k <= self.d:
            raise ShapeError(f"cannot keep {k} of {self.d} projections")
        return replace(self, W=self.W[:, :k], eigenvalues=self.eigenvalues[:k])

    def to_dict(self) -> dict:
        d = {"method": self.method}
        if self.beta is not None:
            d["beta"] = self.beta
        if self.scheme is not None:
            d["scheme"] = self.scheme.to_dict()
        d["eigenvalues"] = self.eigenvalues.tolist()
        d["W"] = self.W.tolist()
        if self.pre_chain is not None:
            d["pre_chain"] = self.pre_chain.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ProjectionModel":
        return cls(
            W=np.array(d["W"], dtype=float).reshape(len(d["W"]), -1),
            eigenvalues=np.array(d["eigenvalues"], dtype=float),
            method=d["method"],
            pre_chain=PcaModel.from_dict(d["pre_chain"]) if d.get("pre_chain") else None,
            beta=d.get("beta"),
            scheme=WeightScheme.from_dict(d["scheme"]) if d.get("scheme") else None,
        )


def embed(model: ProjectionModel, X) -> np.ndarray:
    """Project column-per-sample ``X`` (``m x n``) to ``d x n``."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] != model.input_dim:
        raise ShapeError(f"model expects {model.input_dim}-dim input, got {X.shape[0]}")
    if model.pre_chain is not None:
        X = model.pre_chain.transform(X)
    return model.W.T @ X


# ---------------------------------------------------------------------- methods

def fit_pca(data: LabeledDataset, d: int) -> ProjectionModel:
    """Top-``d`` principal directions (sample covariance, ``n - 1`` normalisation)."""
    pca = fit_pca_model(data.features, 1.0)
    if d > pca.r:
        raise InsufficientRankError(f"PCA rank is {pca.r}, cannot keep {d} components",
                                    available=pca.r)
    return ProjectionModel(pca.basis[:, :d], pca.eigenvalues[:d], "pca")


def scatter_matrices(X: np.ndarray, labels: np.ndarray):
    """Within-class and between-class scatter ``(S_w, S_b)``."""
    mu = X.mean(axis=1, keepdims=True)
    m = X.shape[0]
    Sw = np.zeros((m, m))
    Sb = np.zeros((m, m))
    for c in np.unique(labels):
        Xc = X[:, labels == c]
        uc = Xc.mean(axis=1, keepdims=True)
        Z = Xc - uc
        Sw += Z @ Z.T
        Sb += Xc.shape[1] * (uc - mu) @ (uc - mu).T
    return (Sw + Sw.T) / 2, (Sb + Sb.T) / 2


def _full_rank(S: np.ndarray) -> bool:
    ev = linalg.eigvalsh(S)
    return ev[-1] > 0 and ev[0] > 1e-10 * ev[-1]


def fit_lda(data: LabeledDataset, d: int) -> ProjectionModel:
    """Fisher LDA: the ``d`` largest solutions of ``S_b w = λ S_w w``.

    When ``S_w`` is singular the data is first reduced by PCA to at most
    ``n - p`` dimensions (the Fisherface guard); the returned ``W`` already
    includes that reduction, so it acts on the original input space.
    """
    p = data.p
    if p < 2:
        raise ProtocolError("LDA needs at least two classes")
    if d > p - 1:
        raise InsufficientRankError(f"LDA yields at most p-1 = {p - 1} projections, asked {d}",
                                    available=p - 1)
    X, y = data.features, data.labels
    Sw, Sb = scatter_matrices(X, y)
    guard = None
    if not _full_rank(Sw):
        pca = fit_pca_model(X, 1.0)
        keep = min(pca.r, data.n - p)
        if keep < 1:
            raise DegenerateDataError("no within-class variation survives the PCA guard")
        guard = pca.basis[:, :keep]
        Xr = guard.T @ (X - pca.mean[:, None])
        Sw, Sb = scatter_matrices(Xr, y)
        if not _full_rank(Sw):
            raise DegenerateDataError("within-class scatter is singular even after PCA")
    vals, V = eig_generalized(Sb, Sw, d, side="largest")
    available = int(np.count_nonzero(vals > _LDA_NULL))
    if available < d:
        raise InsufficientRankError(
            f"between-class scatter supports only {available} of {d} projections",
            available=available)
    W = V if guard is None else guard @ V
    return ProjectionModel(W, vals, "lda")


def lpp_matrices(data: LabeledDataset, scheme: WeightScheme = DOT, supervised: bool = True):
    """``(X L X^T, X D X^T)`` for the within-class or all-pairs graph."""
    if supervised:
        g, _ = within_class_graph(data, scheme)
    else:
        g = all_pairs_graph(data.features, scheme)
    lap = laplacian(g)
    X = data.features
    P = _congruence(X, lap.L)
    Q = (X * lap.degree) @ X.T
    return (P + P.T) / 2, (Q + Q.T) / 2


def fit_lpp(data: LabeledDataset, d: int, scheme: WeightScheme = DOT,
            supervised: bool = True) -> ProjectionModel:
    """Locality preserving projections under ``w^T X D X^T w = 1``."""
    P, Q = lpp_matrices(data, scheme, supervised)
    vals, W = eig_generalized(P, Q, d, side="smallest")
    return ProjectionModel(W, vals, "lpp", scheme=scheme)


def mean_laplacian_form(data: LabeledDataset, scheme: WeightScheme = DOT) -> np.ndarray:
    """``U K U^T``: class means ``U`` against the Laplacian of their graph."""
    U = class_means(data)
    K = laplacian(mean_graph(U, scheme)).L
    return _congruence(U, K)


def fit_dlpp(data: LabeledDataset, d: int, scheme: WeightScheme = DOT) -> ProjectionModel:
    """Discriminant LPP: minimise ``w^T X L X^T w / w^T U K U^T w``."""
    if data.p < 2:
        raise ProtocolError("DLPP needs at least two classes (the mean-graph term is zero)")
    P, _ = lpp_matrices(data, scheme, supervised=True)
    Q = mean_laplacian_form(data, scheme)
    vals, W = eig_generalized(P, (Q + Q.T) / 2, d, side="smallest")
    return ProjectionModel(W, vals, "dlpp", scheme=scheme)


@dataclass(frozen=True)
class GlppOperator:
    """``A = 2 (global_part + beta * local_part)``."""

    A: np.ndarray
    global_part: np.ndarray
    local_part: np.ndarray
    beta: float


def assemble_glpp_operator(data: LabeledDataset, scheme: WeightScheme = DOT,
                           beta: float = DEFAULT_BETA) -> GlppOperator:
    """Build the GLPP quadratic form.

    The global part is the mean-sample graph term ``U K U^T``; the local part
    sums ``X_c L_c X_c^T`` over the per-class within-class graphs.
    """
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    U = class_means(data)
    K = laplacian(mean_graph(U, scheme)).L
    global_part = _congruence(U, K)

    _, blocks = within_class_graph(data, scheme)
    X = data.features
    local_part = np.zeros((data.m, data.m))
    for idx, H in blocks:
        local_part += _congruence(X[:, idx], laplacian(H).L)

    A = 2 * (global_part + beta * local_part)
    return GlppOperator((A + A.T) / 2, global_part, local_part, float(beta))


def _check_beta(beta: float) -> None:
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    if beta <= 1000:
        warnings.warn(f"beta <= 1000 ({beta}); the globality term may dominate the within-class term",
                      UserWarning, stacklevel=3)


def operator_floor(scale_sq: float, beta: float) -> float:
    """Absolute eigenvalue floor for operators built from data of squared norm ``scale_sq``."""
    return 1e-12 * 2 * (1 + beta) * scale_sq


def fit_glpp(data: LabeledDataset, d: int, scheme: WeightScheme = DOT,
             beta: float = DEFAULT_BETA) -> ProjectionModel:
    """GLPP: the ``d`` smallest nonzero eigenpairs of the operator ``A``."""
    _check_beta(beta)
    op = assemble_glpp_operator(data, scheme, beta)
    floor = operator_floor(float(np.sum(data.features ** 2)), beta)
    vals, W = eig_smallest_sym(op.A, d, GLPP_NULL_TOL, floor=floor)
    return ProjectionModel(W, vals, "glpp", beta=float(beta), scheme=scheme)


def fit_method(data: LabeledDataset, method: str, d: int, scheme: WeightScheme = DOT,
               beta: float = DEFAULT_BETA, supervised: bool = True) -> ProjectionModel:
    """Dispatch on a method name from :data:`METHODS`."""
    if method == "pca":
        return fit_pca(data, d)
    if method == "lda":
        return fit_lda(data, d)
    if method == "lpp":
        return fit_lpp(data, d, scheme, supervised)
    if method == "dlpp":
        return fit_dlpp(data, d, scheme)
    if method == "glpp":
        return fit_glpp(data, d, scheme, beta)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
