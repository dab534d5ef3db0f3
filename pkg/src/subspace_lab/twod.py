"""Two-dimensional GLPP on raw image matrices.

Images ``g_i`` (``h x w``) are projected from the right, ``y_i = g_i W``, so
the operator lives in ``R^{w x w}``. Graph Laplacians over images are lifted
with ``L ⊗ I_h`` and applied to vertically stacked image matrices.

The stacked form ``G^T (L ⊗ I_h) G`` is the conformable reading of the
quadratic form: it equals ``sum_ij L_ij g_i^T g_j`` and therefore
``w^T G^T (L ⊗ I_h) G w = 1/2 sum_ij S_ij ||g_i w - g_j w||^2``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import ImageDataset, _frozen, class_means, unvectorize, vectorize
from .errors import ShapeError
from .graph import DOT, WeightScheme, kronecker_lift, laplacian, mean_graph, within_class_graph
from .projections import (
    DEFAULT_BETA,
    GLPP_NULL_TOL,
    _check_beta,
    _congruence,
    eig_smallest_sym,
    operator_floor,
)

__all__ = [
    "ImageDataset",
    "ImageStack",
    "Projection2DModel",
    "stack_by_class",
    "assemble_2d_glpp_operator",
    "fit_2d_glpp",
    "embed_2d",
]


@dataclass(frozen=True)
class ImageStack:
    """Per-class vertical stacks ``G_c`` and the stacked class-mean images ``M``."""

    stacks: tuple[np.ndarray, ...]
    M: np.ndarray
    h: int


def stack_by_class(data: ImageDataset) -> ImageStack:
    h, w = data.shape
    stacks = tuple(np.vstack(data.images[idx]) for idx in data.class_indices())
    U = class_means(vectorize(data))
    M = np.vstack([unvectorize(U[:, c], (h, w)) for c in range(U.shape[1])])
    return ImageStack(stacks, M, h)


@dataclass(frozen=True)
class Projection2DModel:
    W: np.ndarray
    eigenvalues: np.ndarray
    beta: float
    scheme: WeightScheme
    h: int
    w: int
    globality: bool = True

    def __post_init__(self):
        object.__setattr__(self, "W", _frozen(self.W))
        object.__setattr__(self, "eigenvalues", _frozen(self.eigenvalues))

    @property
    def d(self) -> int:
        return self.W.shape[1]

    def truncate(self, k: int) -> "Projection2DModel":
        if not 1 <= k <= self.d:
            raise ShapeError(f"cannot keep {k} of {self.d} projections")
        return Projection2DModel(self.W[:, :k], self.eigenvalues[:k], self.beta,
                                 self.scheme, self.h, self.w, self.globality)

    def to_dict(self) -> dict:
        return {
            "method": "glpp2d" if self.globality else "lpp2d",
            "two_d": True,
            "h": self.h,
            "w": self.w,
            "beta": self.beta,
            "scheme": self.scheme.to_dict(),
            "eigenvalues": self.eigenvalues.tolist(),
            "W": self.W.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Projection2DModel":
        return cls(np.array(d["W"], dtype=float).reshape(d["w"], -1),
                   np.array(d["eigenvalues"], dtype=float), d["beta"],
                   WeightScheme.from_dict(d["scheme"]), d["h"], d["w"],
                   d["method"] == "glpp2d")


def _operator_parts(data: ImageDataset, scheme: WeightScheme):
    h, w = data.shape
    vec = vectorize(data)
    stack = stack_by_class(data)

    U = class_means(vec)
    Z = kronecker_lift(laplacian(mean_graph(U, scheme)).L, h)
    global_part = _congruence(stack.M.T, Z)

    _, blocks = within_class_graph(vec, scheme)
    local_part = np.zeros((w, w))
    for G_c, (_, H) in zip(stack.stacks, blocks):
        T_c = kronecker_lift(laplacian(H).L, h)
        local_part += _congruence(G_c.T, T_c)
    return global_part, local_part


def assemble_2d_glpp_operator(data: ImageDataset, scheme: WeightScheme = DOT,
                              beta: float = DEFAULT_BETA, globality: bool = True) -> np.ndarray:
    """``2 (M^T (K ⊗ I_h) M + beta * sum_c G_c^T (L_c ⊗ I_h) G_c)``, a ``w x w`` matrix.

    ``globality=False`` drops the class-mean term, which gives 2D-LPP.
    """
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    global_part, local_part = _operator_parts(data, scheme)
    if globality:
        A = 2 * (global_part + beta * local_part)
    else:
        A = 2 * (beta * local_part)
    return (A + A.T) / 2


def fit_2d_glpp(data: ImageDataset, d: int, scheme: WeightScheme = DOT,
                beta: float = DEFAULT_BETA, globality: bool = True) -> Projection2DModel:
    h, w = data.shape
    if d > w:
        raise ShapeError(f"cannot extract {d} projections from {w}-column images")
    if globality:
        _check_beta(beta)
    A = assemble_2d_glpp_operator(data, scheme, beta, globality)
    floor = operator_floor(float(np.sum(data.images ** 2)), beta)
    vals, W = eig_smallest_sym(A, d, GLPP_NULL_TOL, floor=floor)
    return Projection2DModel(W, vals, float(beta), scheme, h, w, globality)


def embed_2d(model: Projection2DModel, image) -> np.ndarray:
    """``image @ W``; also accepts an ``(N, h, w)`` stack."""
    image = np.asarray(image, dtype=float)
    if image.shape[-1] != model.w:
        raise ShapeError(f"image width {image.shape[-1]} does not match model width {model.w}")
    return image @ model.W
