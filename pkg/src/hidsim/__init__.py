"""Hybrid intrusion detection for clustered sensor networks.

Library + simulator: distributed SVM training by support-vector exchange,
signature-based misuse checking, cooperative voting, energy-aware IDS
rotation, and an evaluation harness over KDD-format traffic corpora.
"""

__version__ = "0.1.0"

from .config import ExperimentConfig
from .svm import KernelParams, Sample, SvmModel, decide, rbf_kernel, train

__all__ = [
    "ExperimentConfig",
    "KernelParams",
    "Sample",
    "SvmModel",
    "decide",
    "rbf_kernel",
    "train",
]
