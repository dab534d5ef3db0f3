"""Seeded toy datasets that need no external downloads."""
from __future__ import annotations

import numpy as np
from scipy.spatial.distance import pdist

from .dataset import ImageDataset, LabeledDataset


def make_blobs(n_classes: int = 8, per_class: int = 20, dim: int = 16,
               separation: float = 50.0, spread: float = 1.0, seed: int = 0) -> LabeledDataset:
    """Isotropic Gaussian clouds whose closest centres are ``separation * spread`` apart.

    Samples are stored class by class.
    """
    rng = np.random.default_rng(seed)
    centers = rng.standard_normal((dim, n_classes))
    if n_classes > 1:
        centers *= separation * spread / pdist(centers.T).min()
    X = np.repeat(centers, per_class, axis=1) + spread * rng.standard_normal((dim, n_classes * per_class))
    labels = np.repeat(np.arange(1, n_classes + 1), per_class)
    return LabeledDataset(X, labels)


def make_image_blobs(n_classes: int = 5, per_class: int = 6, shape: tuple[int, int] = (12, 10),
                     noise: float = 0.03, seed: int = 0) -> ImageDataset:
    """Noisy copies of random prototype images, clipped to ``[0, 1]``."""
    rng = np.random.default_rng(seed)
    protos = rng.uniform(0.15, 0.85, size=(n_classes,) + tuple(shape))
    imgs = np.repeat(protos, per_class, axis=0)
    imgs = np.clip(imgs + noise * rng.standard_normal(imgs.shape), 0.0, 1.0)
    labels = np.repeat(np.arange(1, n_classes + 1), per_class)
    return ImageDataset(imgs, labels)
