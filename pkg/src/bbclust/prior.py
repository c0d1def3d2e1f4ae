"""Gaussian-mixture prior guess built from an initial hard clustering."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import SeededRng, as_rng

#: Ridge added to every cluster covariance, relative to the mean data variance.
RIDGE = 1e-6
#: Isotropic variance given to single-point clusters, relative to the mean data variance.
SINGLETON_SCALE = 1e-2


@dataclass(frozen=True, eq=False)
class GaussianMixturePrior:
    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    s: float = 1.0

    @property
    def K(self) -> int:
        return self.weights.shape[0]

    @property
    def dimension(self) -> int:
        return self.means.shape[1]

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "s": self.s,
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "covariances": self.covariances.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GaussianMixturePrior":
        return cls(
            np.asarray(d["weights"], dtype=float),
            np.asarray(d["means"], dtype=float),
            np.asarray(d["covariances"], dtype=float),
            float(d["s"]),
        )

    def __eq__(self, other):
        if not isinstance(other, GaussianMixturePrior):
            return NotImplemented
        return (
            self.s == other.s
            and np.array_equal(self.weights, other.weights)
            and np.array_equal(self.means, other.means)
            and np.array_equal(self.covariances, other.covariances)
        )

    __hash__ = None


def elicit_prior(data, result, s: float = 1.0) -> GaussianMixturePrior:
    """Turn a hard clustering into a mixture prior.

    Component ``j`` gets weight ``n_j / n``, the clustering's centroid ``j``
    as mean, and ``s`` times the (``n_j - 1``)-normalised covariance of its
    points, plus a small ridge so that every covariance is positive definite.
    """
    if not s > 0:
        raise ValueError(f"variance scale s must be positive, got {s}")
    X = np.asarray(getattr(data, "values", data), dtype=float)
    labels = np.asarray(result.labels)
    K = result.centroids.shape[0]
    n, p = X.shape
    counts = np.bincount(labels, minlength=K)
    if counts.shape[0] != K or np.any(counts == 0):
        raise ValueError("clustering labels must cover every cluster 0..K-1")

    if n > 1:
        scale = float(np.trace(np.atleast_2d(np.cov(X, rowvar=False)))) / p
    else:
        scale = 0.0
    if scale <= 0:
        # constant data: any positive floor keeps the covariances SPD
        scale = 1.0
    covs = np.empty((K, p, p))
    for j in range(K):
        pts = X[labels == j]
        if pts.shape[0] > 1:
            cov = np.atleast_2d(np.cov(pts, rowvar=False)) + RIDGE * scale * np.eye(p)
        else:
            cov = SINGLETON_SCALE * scale * np.eye(p)
        covs[j] = s * cov
    return GaussianMixturePrior(counts / n, np.array(result.centroids, dtype=float), covs, float(s))


def sample_prior(prior: GaussianMixturePrior, count: int, rng: SeededRng | int | np.random.Generator):
    """Draw ``count`` points from the mixture.

    Returns the ``count x p`` sample and the component index of every draw.
    """
    gen = rng if isinstance(rng, np.random.Generator) else as_rng(rng).generator()
    p = prior.dimension
    if count <= 0:
        return np.empty((0, p)), np.empty(0, dtype=int)
    comp = gen.choice(prior.K, size=count, p=prior.weights)
    out = np.empty((count, p))
    for j in range(prior.K):
        idx = np.flatnonzero(comp == j)
        if idx.size:
            chol = np.linalg.cholesky(prior.covariances[j])
            out[idx] = prior.means[j] + gen.standard_normal((idx.size, p)) @ chol.T
    return out, comp
