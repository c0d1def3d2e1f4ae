"""Resampling weights and proper Bayesian bootstrap replicas.

Three schemes are provided:

* Efron: multinomial counts divided by ``n``.
* Rubin: flat Dirichlet weights on the observed points.
* Proper Bayesian: ``m`` i.i.d. draws from the mixture
  ``(k F0 + n Fn) / (k + n)`` of a prior guess ``F0`` and the empirical
  distribution ``Fn``, with symmetric Dirichlet weights of concentration
  ``(n + k) / m`` per point.

The prior confidence is given as ``omega = k / (k + n)`` in ``[0, 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .prior import GaussianMixturePrior, sample_prior
from .rng import SeededRng, as_rng

#: Marker in :attr:`Replica.source` for points drawn from the prior.
SYNTHETIC = -1

SCHEMES = ("efron", "rubin", "proper")


@dataclass(frozen=True)
class BootstrapConfig:
    B: int = 100
    m: int | None = None
    omega: float = 0.5
    scheme: str = "proper"

    def __post_init__(self):
        if self.B < 1:
            raise ValueError(f"B must be >= 1, got {self.B}")
        if self.m is not None and self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if not 0.0 <= self.omega < 1.0:
            raise ValueError(f"omega must lie in [0, 1), got {self.omega}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")

    def prior_mass(self, n: int) -> float:
        """The Dirichlet-process concentration ``k`` implied by ``omega``."""
        return self.omega * n / (1.0 - self.omega)


@dataclass(frozen=True, eq=False)
class Replica:
    """One resample: points, where each came from, and its weight.

    ``source[i]`` is the row id of the original observation copied into
    position ``i`` or :data:`SYNTHETIC`.
    """

    points: np.ndarray
    source: np.ndarray
    weights: np.ndarray

    @property
    def is_original(self) -> np.ndarray:
        return self.source != SYNTHETIC

    @property
    def n_synthetic(self) -> int:
        return int(np.count_nonzero(self.source == SYNTHETIC))


def _gen(rng) -> np.random.Generator:
    return rng if isinstance(rng, np.random.Generator) else as_rng(rng).generator()


def efron_weights(n: int, rng) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be >= 1")
    return _gen(rng).multinomial(n, np.full(n, 1.0 / n)) / n


def rubin_weights(n: int, rng) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        return np.ones(1)
    return _gen(rng).dirichlet(np.ones(n))


def proper_bayesian_replica(data, prior: GaussianMixturePrior, cfg: BootstrapConfig, rng) -> Replica:
    """Draw one replica from the posterior Dirichlet-process parameter.

    Each of the ``m`` points independently comes from the prior with
    probability ``omega`` and otherwise is a uniformly chosen data row.
    """
    X = np.asarray(getattr(data, "values", data), dtype=float)
    row_ids = getattr(data, "row_ids", None)
    if row_ids is None:
        row_ids = np.arange(X.shape[0])
    n, p = X.shape
    if prior.dimension != p:
        raise ValueError(f"prior dimension {prior.dimension} does not match data dimension {p}")
    m = cfg.m or n
    gen = _gen(rng)
    synthetic = gen.random(m) < cfg.omega
    rows = gen.integers(0, n, size=m)
    n_syn = int(synthetic.sum())
    points = X[rows]
    source = np.asarray(row_ids)[rows].astype(np.int64)
    if n_syn:
        drawn, _ = sample_prior(prior, n_syn, gen)
        points[synthetic] = drawn
        source[synthetic] = SYNTHETIC
    alpha = (n + cfg.prior_mass(n)) / m
    weights = np.ones(1) if m == 1 else gen.dirichlet(np.full(m, alpha))
    return Replica(points, source, weights)
