"""Globality-locality preserving projections and LPP-family subspace baselines."""

__version__ = "0.1.0"

from .dataset import (  # noqa: E402
    ImageDataset,
    LabeledDataset,
    PcaModel,
    SplitPlan,
    class_means,
    load_csv_dataset,
    load_image_tree,
    make_splits,
    pca_preprocess,
    vectorize,
)
from .graph import WeightScheme, laplacian, mean_graph, within_class_graph  # noqa: E402
from .projections import (  # noqa: E402
    ProjectionModel,
    assemble_glpp_operator,
    embed,
    fit_dlpp,
    fit_glpp,
    fit_lda,
    fit_lpp,
    fit_pca,
)
from .twod import assemble_2d_glpp_operator, embed_2d, fit_2d_glpp  # noqa: E402
from .evaluation import MethodConfig, run_protocol, sweep_beta  # noqa: E402

__all__ = [
    "ImageDataset", "LabeledDataset", "PcaModel", "SplitPlan", "class_means",
    "load_csv_dataset", "load_image_tree", "make_splits", "pca_preprocess", "vectorize",
    "WeightScheme", "laplacian", "mean_graph", "within_class_graph",
    "ProjectionModel", "assemble_glpp_operator", "embed", "fit_dlpp", "fit_glpp",
    "fit_lda", "fit_lpp", "fit_pca",
    "assemble_2d_glpp_operator", "embed_2d", "fit_2d_glpp",
    "MethodConfig", "run_protocol", "sweep_beta",
]
