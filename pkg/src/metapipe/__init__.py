"""Image classification pipeline: from-scratch PCA, GA feature selection,
and three classic classifiers, all reproducible under a single seed."""

__version__ = "0.1.0"

from .core import Rng, accuracy, train_test_split
from .dataset import flatten, load_labeled_images, subsample, synth_two_cluster, unflatten
from .genetic import GaConfig, apply_mask, evolve
from .knn import KnnModel, euclidean_distance, knn_predict, knn_suggest_k
from .logreg import LogRegHyperparams, logreg_fit, logreg_predict, sigmoid
from .pca import (
    PcaModel,
    component_to_image,
    covariance_matrix,
    eig_symmetric,
    explained_variance_ratio,
    pca_fit,
    pca_transform,
    standardize_apply,
    standardize_fit,
)
from .tree import TreeHyperparams, impurity, information_gain, tree_fit, tree_predict

__all__ = [
    "Rng",
    "accuracy",
    "train_test_split",
    "flatten",
    "unflatten",
    "load_labeled_images",
    "subsample",
    "synth_two_cluster",
    "GaConfig",
    "apply_mask",
    "evolve",
    "KnnModel",
    "euclidean_distance",
    "knn_predict",
    "knn_suggest_k",
    "LogRegHyperparams",
    "logreg_fit",
    "logreg_predict",
    "sigmoid",
    "PcaModel",
    "component_to_image",
    "covariance_matrix",
    "eig_symmetric",
    "explained_variance_ratio",
    "pca_fit",
    "pca_transform",
    "standardize_apply",
    "standardize_fit",
    "TreeHyperparams",
    "impurity",
    "information_gain",
    "tree_fit",
    "tree_predict",
]
