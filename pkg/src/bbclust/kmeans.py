"""Weighted Lloyd k-means with restarts and empty-cluster repair."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import SeededRng, as_rng


class KMeansError(ValueError):
    pass


@dataclass(frozen=True)
class KMeansConfig:
    """Settings for :func:`kmeans`.

    ``init`` is ``"kmeanspp"`` (weighted D^2 seeding), ``"random_points"``
    (K distinct data rows drawn at random) or an explicit ``K x p`` array of
    starting centroids, in which case every restart starts from it.
    """

    K: int
    n_restarts: int = 10
    max_iter: int = 100
    tol: float = 1e-8
    init: object = "kmeanspp"

    def __post_init__(self):
        if self.K < 1:
            raise KMeansError(f"K must be >= 1, got {self.K}")
        if self.n_restarts < 1:
            raise KMeansError(f"n_restarts must be >= 1, got {self.n_restarts}")
        if self.max_iter < 1:
            raise KMeansError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.tol < 0:
            raise KMeansError(f"tol must be non-negative, got {self.tol}")
        if isinstance(self.init, str) and self.init not in ("kmeanspp", "random_points"):
            raise KMeansError(f"unknown init {self.init!r}")

    def with_k(self, K: int) -> "KMeansConfig":
        return KMeansConfig(K, self.n_restarts, self.max_iter, self.tol, self.init)


@dataclass(frozen=True, eq=False)
class ClusteringResult:
    labels: np.ndarray
    centroids: np.ndarray
    wss: float
    n_iter: int
    converged: bool

    @property
    def K(self) -> int:
        return self.centroids.shape[0]

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.K)

    def to_dict(self) -> dict:
        return {
            "labels": self.labels.tolist(),
            "centroids": self.centroids.tolist(),
            "wss": self.wss,
            "n_iter": self.n_iter,
            "converged": self.converged,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClusteringResult":
        return cls(
            np.asarray(d["labels"], dtype=int),
            np.asarray(d["centroids"], dtype=float),
            float(d["wss"]),
            int(d["n_iter"]),
            bool(d["converged"]),
        )

    def __eq__(self, other):
        if not isinstance(other, ClusteringResult):
            return NotImplemented
        return (
            np.array_equal(self.labels, other.labels)
            and np.array_equal(self.centroids, other.centroids)
            and self.wss == other.wss
            and self.n_iter == other.n_iter
            and self.converged == other.converged
        )

    __hash__ = None


def _values(data) -> np.ndarray:
    return np.asarray(getattr(data, "values", data), dtype=float)


def _sq_dists(X: np.ndarray, C: np.ndarray) -> np.ndarray:
    # explicit differences (not the expanded dot-product form) keep exact ties exact
    diff = X[:, None, :] - C[None, :, :]
    return np.einsum("nkp,nkp->nk", diff, diff)


def assign_nearest(data, centroids) -> np.ndarray:
    """Index of the nearest centroid (squared L2) for every row.

    Ties go to the lowest centroid index.
    """
    C = np.atleast_2d(np.asarray(centroids, dtype=float))
    if C.shape[0] == 0:
        raise KMeansError("no centroids given")
    return np.argmin(_sq_dists(_values(data), C), axis=1)


def wss(data, labels, centroids, weights=None) -> float:
    """Weighted total within-cluster sum of squares."""
    X = _values(data)
    C = np.atleast_2d(np.asarray(centroids, dtype=float))
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() >= C.shape[0]):
        raise KMeansError(f"label out of range 0..{C.shape[0] - 1}")
    d2 = np.sum((X - C[labels]) ** 2, axis=1)
    if weights is None:
        return float(d2.sum())
    return float(np.dot(np.asarray(weights, dtype=float), d2))


def _check_weights(weights, n):
    if weights is None:
        return np.ones(n)
    w = np.asarray(weights, dtype=float)
    if w.shape != (n,):
        raise KMeansError(f"expected {n} weights, got shape {w.shape}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise KMeansError("weights must be finite and non-negative")
    if w.sum() <= 0:
        raise KMeansError("weights sum to zero")
    return w


def _kmeanspp(X, w, K, gen):
    n = X.shape[0]
    centers = np.empty((K, X.shape[1]))
    first = gen.choice(n, p=w / w.sum())
    centers[0] = X[first]
    closest = np.sum((X - centers[0]) ** 2, axis=1)
    for k in range(1, K):
        mass = w * closest
        total = mass.sum()
        if total <= 0:
            # every weighted point already coincides with a center
            idx = gen.choice(n, p=w / w.sum())
        else:
            idx = gen.choice(n, p=mass / total)
        centers[k] = X[idx]
        np.minimum(closest, np.sum((X - centers[k]) ** 2, axis=1), out=closest)
    return centers


def _random_points(X, w, K, gen):
    _, first_idx = np.unique(X[w > 0], axis=0, return_index=True)
    candidates = np.flatnonzero(w > 0)[first_idx]
    if candidates.size < K:
        candidates = np.unique(X, axis=0, return_index=True)[1]
    pick = gen.choice(candidates, size=K, replace=False)
    return X[np.sort(pick)]


def _update(X, w, labels, K, centroids):
    mass = np.bincount(labels, weights=w, minlength=K)
    sums = np.empty_like(centroids)
    for d in range(X.shape[1]):
        sums[:, d] = np.bincount(labels, weights=w * X[:, d], minlength=K)
    new = centroids.copy()
    ok = mass > 0
    new[ok] = sums[ok] / mass[ok, None]
    return new, ok


def _repair(X, w, labels, centroids, d2):
    """Give every cluster without weighted mass a point of its own.

    The point contributing most to the weighted WSS (among points whose
    cluster would stay non-empty) becomes the new centroid of the empty one.
    """
    K = centroids.shape[0]
    for _ in range(K):
        mass = np.bincount(labels, weights=w, minlength=K)
        counts = np.bincount(labels, minlength=K)
        empty = np.flatnonzero(mass <= 0)
        if empty.size == 0:
            return labels, centroids
        k = empty[0]
        contrib = w * d2[np.arange(len(labels)), labels]
        movable = counts[labels] > 1
        movable &= w > 0
        if not movable.any():
            return labels, centroids
        contrib = np.where(movable, contrib, -1.0)
        i = int(np.argmax(contrib))
        labels = labels.copy()
        labels[i] = k
        centroids = centroids.copy()
        centroids[k] = X[i]
        d2 = _sq_dists(X, centroids)
    return labels, centroids


def _assign(X, w, C):
    d2 = _sq_dists(X, C)
    labels = np.argmin(d2, axis=1)
    if np.bincount(labels, weights=w, minlength=C.shape[0]).min() <= 0:
        labels, C = _repair(X, w, labels, C, d2)
        d2 = _sq_dists(X, C)
    cost = float(np.dot(w, d2[np.arange(X.shape[0]), labels]))
    return labels, C, cost


def lloyd(X, w, init_centroids, max_iter=100, tol=1e-8, history=None) -> ClusteringResult:
    """Run weighted Lloyd iterations from fixed starting centroids.

    If ``history`` is a list, the WSS after every assignment step is appended.
    """
    C = np.array(init_centroids, dtype=float)
    K = C.shape[0]
    labels, C, cur = _assign(X, w, C)
    if history is not None:
        history.append(cur)
    converged = False
    same = False
    it = 0
    for it in range(1, max_iter + 1):
        C, _ = _update(X, w, labels, K, C)
        new_labels, C, new = _assign(X, w, C)
        if history is not None:
            history.append(new)
        same = np.array_equal(new_labels, labels)
        small = (cur - new) <= tol * cur
        labels, cur = new_labels, new
        if same or small:
            converged = True
            break
    if converged and not same:
        # finish on a consistent (labels, centroid = cluster mean) pair
        C2, ok = _update(X, w, labels, K, C)
        if ok.all():
            cand = np.argmin(_sq_dists(X, C2), axis=1)
            if np.array_equal(cand, labels):
                C = C2
                cur = wss(X, labels, C, w)
    return ClusteringResult(labels, C, cur, it, converged)


def kmeans(data, cfg: KMeansConfig, weights=None, rng: SeededRng | int | None = 0) -> ClusteringResult:
    """Best-of-restarts weighted k-means.

    Restart ``r`` draws its initial centroids from ``rng.child("restart", r)``.
    The lowest-WSS run wins; ties go to the earliest restart.

    Raises
    ------
    KMeansError
        If K exceeds the number of distinct rows or all weights are zero.
    """
    X = _values(data)
    n = X.shape[0]
    w = _check_weights(weights, n)
    K = cfg.K
    if K > n:
        raise KMeansError(f"K={K} exceeds the number of rows n={n}")
    explicit = not isinstance(cfg.init, str)
    if explicit:
        init = np.atleast_2d(np.asarray(cfg.init, dtype=float))
        if init.shape != (K, X.shape[1]):
            raise KMeansError(f"init centroids have shape {init.shape}, expected {(K, X.shape[1])}")
    else:
        n_distinct = np.unique(X[w > 0], axis=0).shape[0]
        if K > n_distinct:
            raise KMeansError(f"K={K} exceeds the number of distinct weighted rows ({n_distinct})")
    rng = as_rng(rng)
    best = None
    for r in range(1 if explicit else cfg.n_restarts):
        if explicit:
            start = init
        else:
            gen = rng.child("restart", r).generator()
            if cfg.init == "kmeanspp":
                start = _kmeanspp(X, w, K, gen)
            else:
                start = _random_points(X, w, K, gen)
        res = lloyd(X, w, start, cfg.max_iter, cfg.tol)
        if best is None or res.wss < best.wss:
            best = res
    return best
