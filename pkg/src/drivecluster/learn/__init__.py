"""Clustering, projection and partition-comparison primitives."""

from .kmeans import Clustering, kmeans
from .pca import PcaProjection, pca_project
from .vmeasure import contingency_table, homogeneity_completeness_v, v_measure

__all__ = [
    "Clustering",
    "PcaProjection",
    "contingency_table",
    "homogeneity_completeness_v",
    "kmeans",
    "pca_project",
    "v_measure",
]
