"""Bayesian bagged clustering with entropy-based choice of the number of clusters."""

from .bootstrap import BootstrapConfig, Replica, efron_weights, proper_bayesian_replica, rubin_weights
from .data import BENCHMARKS, DataMatrix, DatasetSpec, generate_dataset, load_csv
from .ensemble import BBCResult, MembershipMatrix, align_labels, bagclust1, bbc
from .kmeans import ClusteringResult, KMeansConfig, assign_nearest, kmeans, wss
from .prior import GaussianMixturePrior, elicit_prior, sample_prior
from .rng import SeededRng
from .selection import (
    EntropyReport,
    KSelectionReport,
    entropy_report,
    gap_statistic,
    pairwise_entropy,
    select_k,
    shannon_entropy,
    silhouette,
)

__version__ = "0.1.0"
