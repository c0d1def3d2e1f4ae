"""Bagged clustering: label alignment, vote aggregation, BagClust1 and BBC."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .bootstrap import BootstrapConfig, efron_weights, proper_bayesian_replica
from .data import as_data
from .kmeans import ClusteringResult, KMeansConfig, kmeans
from .prior import GaussianMixturePrior, elicit_prior
from .rng import SeededRng, as_rng


@dataclass(frozen=True, eq=False)
class LabelAlignment:
    """``perm[a]`` is the reference label that new label ``a`` maps to."""

    perm: np.ndarray
    overlap: float

    def apply(self, labels) -> np.ndarray:
        return self.perm[np.asarray(labels)]


def cooccurrence(ref_labels, new_labels, K: int, weights=None) -> np.ndarray:
    """``C[a, r]`` = (weighted) number of points with new label a and reference label r."""
    ref = np.asarray(ref_labels)
    new = np.asarray(new_labels)
    if ref.shape != new.shape:
        raise ValueError(f"label lists differ in length: {ref.shape[0]} vs {new.shape[0]}")
    flat = np.bincount(new * K + ref, weights=weights, minlength=K * K)
    return flat.reshape(K, K)


def _best_completion(C, rows, cols) -> float:
    if not rows:
        return 0.0
    sub = C[np.ix_(rows, cols)]
    r, c = linear_sum_assignment(sub, maximize=True)
    return float(sub[r, c].sum())


def align_labels(ref_labels, new_labels, K: int, weights=None) -> LabelAlignment:
    """Relabel ``new_labels`` for maximum agreement with ``ref_labels``.

    Solves the maximum-weight assignment on the K x K co-occurrence matrix.
    Among optimal permutations the lexicographically smallest
    ``(perm[0], ..., perm[K-1])`` is returned.
    """
    C = cooccurrence(ref_labels, new_labels, K, weights).astype(float)
    best = _best_completion(C, list(range(K)), list(range(K)))
    slack = 1e-9 * max(1.0, abs(best))
    perm = np.empty(K, dtype=int)
    free = list(range(K))
    fixed = 0.0
    for a in range(K):
        rest = list(range(a + 1, K))
        for r in free:
            others = [c for c in free if c != r]
            if fixed + C[a, r] + _best_completion(C, rest, others) >= best - slack:
                perm[a] = r
                fixed += C[a, r]
                free.remove(r)
                break
    return LabelAlignment(perm, float(C[np.arange(K), perm].sum()))


@dataclass(frozen=True, eq=False)
class MembershipMatrix:
    """Per-point vote proportions over K clusters.

    Rows with ``support_counts == 0`` (never resampled) are all zero and
    carry label ``-1``.
    """

    u: np.ndarray
    support_counts: np.ndarray
    final_labels: np.ndarray = field(default=None)
    ties: np.ndarray = field(default=None)

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        if u.ndim != 2:
            u = u.reshape(-1, 1) if u.ndim == 1 else u
        support = np.asarray(self.support_counts, dtype=np.int64)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "support_counts", support)
        if self.final_labels is None or self.ties is None:
            labels, ties = _argmax_labels(u, support)
            object.__setattr__(self, "final_labels", labels)
            object.__setattr__(self, "ties", ties)
        else:
            object.__setattr__(self, "final_labels", np.asarray(self.final_labels, dtype=int))
            object.__setattr__(self, "ties", np.asarray(self.ties, dtype=bool))

    @classmethod
    def from_votes(cls, votes: np.ndarray, support: np.ndarray) -> "MembershipMatrix":
        votes = np.asarray(votes, dtype=float)
        support = np.asarray(support)
        u = np.zeros_like(votes)
        ok = support > 0
        u[ok] = votes[ok] / support[ok, None]
        return cls(u, support)

    @property
    def n(self) -> int:
        return self.u.shape[0]

    @property
    def K(self) -> int:
        return self.u.shape[1]

    @property
    def supported(self) -> np.ndarray:
        return self.support_counts > 0

    def to_dict(self) -> dict:
        return {
            "u": self.u.tolist(),
            "support_counts": self.support_counts.tolist(),
            "final_labels": self.final_labels.tolist(),
            "ties": self.ties.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MembershipMatrix":
        K = len(d["u"][0]) if d["u"] else int(d.get("K", 0))
        u = np.asarray(d["u"], dtype=float).reshape(-1, K)
        return cls(u, d["support_counts"], d["final_labels"], d["ties"])

    def __eq__(self, other):
        if not isinstance(other, MembershipMatrix):
            return NotImplemented
        return (
            self.u.shape == other.u.shape
            and np.array_equal(self.u, other.u)
            and np.array_equal(self.support_counts, other.support_counts)
            and np.array_equal(self.final_labels, other.final_labels)
            and np.array_equal(self.ties, other.ties)
        )

    __hash__ = None


def _argmax_labels(u, support):
    if u.shape[0] == 0:
        return np.empty(0, dtype=int), np.empty(0, dtype=bool)
    labels = np.argmax(u, axis=1)
    top = u[np.arange(u.shape[0]), labels]
    ties = np.count_nonzero(u == top[:, None], axis=1) > 1
    labels = np.where(support > 0, labels, -1)
    ties &= support > 0
    return labels, ties


def _tally(rows, labels, n, K):
    """One replica's votes as ``(row, label)`` pairs, one vote per row."""
    key = np.unique(np.asarray(rows) * K + np.asarray(labels))
    return key // K, key % K


def aggregate_votes(tallies, n: int, K: int) -> MembershipMatrix:
    """Merge per-replica ``(rows, labels)`` tallies into memberships.

    Each row must carry a single label within a replica (duplicates of an
    observation are one vote).  The merge is a sum, so replica order does
    not matter.
    """
    votes = np.zeros((n, K), dtype=np.int64)
    for rows, labels in tallies:
        if len(np.unique(rows)) != len(rows):
            raise ValueError("a replica voted twice for the same row with different labels")
        np.add.at(votes, (rows, labels), 1)
    return MembershipMatrix.from_votes(votes, votes.sum(axis=1))


@dataclass(frozen=True)
class ReplicaDiagnostic:
    index: int
    n_original: int
    n_synthetic: int
    overlap: float
    wss: float
    skipped: bool

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "n_original": self.n_original,
            "n_synthetic": self.n_synthetic,
            "overlap": self.overlap,
            "wss": self.wss,
            "skipped": self.skipped,
        }


def _map(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]


def bagclust1(data, B: int, K: int, kmeans_cfg: KMeansConfig | None = None, rng=0, threads: int = 1):
    """Bagged k-means over Efron resamples.

    Each resample is clustered (multiplicities as integer weights), its
    labels are aligned to a reference clustering of the full data, and every
    row present in the resample receives one vote.

    Returns the :class:`MembershipMatrix` and the reference clustering.
    """
    data = as_data(data)
    cfg = (kmeans_cfg or KMeansConfig(K)).with_k(K)
    rng = as_rng(rng)
    canon = data.canonical_order()
    X = data.values[canon]
    n = X.shape[0]
    reference = kmeans(X, cfg, rng=rng.child("reference"))

    def one(b):
        sub = rng.child("replica", b)
        counts = np.rint(efron_weights(n, sub.child("resample").generator()) * n).astype(int)
        rows = np.flatnonzero(counts)
        res = kmeans(X[rows], cfg, weights=counts[rows], rng=sub.child("kmeans"))
        al = align_labels(reference.labels[rows], res.labels, K, weights=counts[rows])
        return rows, al.apply(res.labels)

    tallies = _map(one, range(B), threads)
    membership = aggregate_votes(tallies, n, K)
    return _restore_order(membership, canon), _restore_result(reference, canon)


@dataclass(frozen=True, eq=False)
class BBCResult:
    membership: MembershipMatrix
    prior: GaussianMixturePrior
    reference: ClusteringResult
    diagnostics: list = field(default_factory=list)
    #: per-replica ``(row_ids, labels)`` votes, ``None`` for skipped replicas
    votes: list = field(default_factory=list, repr=False)

    @property
    def n_skipped(self) -> int:
        return sum(d.skipped for d in self.diagnostics)

    @property
    def n_synthetic(self) -> int:
        return sum(d.n_synthetic for d in self.diagnostics)

    def to_dict(self) -> dict:
        return {
            "membership": self.membership.to_dict(),
            "prior": self.prior.to_dict(),
            "reference": self.reference.to_dict(),
            "replicas": [d.to_dict() for d in self.diagnostics],
            "n_skipped": self.n_skipped,
            "n_synthetic": self.n_synthetic,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BBCResult":
        return cls(
            MembershipMatrix.from_dict(d["membership"]),
            GaussianMixturePrior.from_dict(d["prior"]),
            ClusteringResult.from_dict(d["reference"]),
            [ReplicaDiagnostic(**r) for r in d["replicas"]],
        )

    def __eq__(self, other):
        if not isinstance(other, BBCResult):
            return NotImplemented
        return (
            self.membership == other.membership
            and self.prior == other.prior
            and self.reference == other.reference
            and self.diagnostics == other.diagnostics
        )

    __hash__ = None


def bbc(
    data,
    K: int,
    kmeans_cfg: KMeansConfig | None = None,
    s: float = 1.0,
    omega: float = 0.5,
    B: int = 100,
    rng: SeededRng | int | None = 0,
    weighted: bool = True,
    threads: int = 1,
    on_replica=None,
) -> BBCResult:
    """Bayesian bagged clustering.

    1. k-means on the data gives reference labels;
    2. a Gaussian-mixture prior is elicited from them with variance scale ``s``;
    3. ``B`` proper Bayesian bootstrap replicas of size ``n`` are drawn with
       prior confidence ``omega``;
    4. each replica is clustered by k-means, using its Dirichlet weights as
       point masses unless ``weighted`` is False;
    5. replica labels are aligned to the reference on the original points only;
    6. each original row in a replica gets one vote; memberships are vote
       shares over the replicas containing the row.

    Rows are processed in row-id order and replica ``b`` uses substream
    ``rng.child("replica", b)``, so the result does not depend on the input
    row order, on ``threads`` or on ``B`` beyond the replicas it adds.
    ``on_replica(b, replica)`` is called for every replica when given.
    """
    data = as_data(data)
    if not 0.0 <= omega < 1.0:
        raise ValueError(f"omega must lie in [0, 1), got {omega}")
    if not s > 0:
        raise ValueError(f"s must be positive, got {s}")
    cfg = (kmeans_cfg or KMeansConfig(K)).with_k(K)
    boot = BootstrapConfig(B=B, omega=omega, scheme="proper")
    rng = as_rng(rng)
    canon = data.canonical_order()
    cdata = data.take(canon)
    n = cdata.n

    reference = kmeans(cdata, cfg, rng=rng.child("reference"))
    prior = elicit_prior(cdata, reference, s)

    def one(b):
        sub = rng.child("replica", b)
        rep = proper_bayesian_replica(cdata, prior, boot, sub.child("resample").generator())
        if on_replica is not None:
            on_replica(b, rep)
        res = kmeans(rep.points, cfg, weights=rep.weights if weighted else None, rng=sub.child("kmeans"))
        orig = rep.is_original
        rows = rep.source[orig]
        if rows.size == 0:
            diag = ReplicaDiagnostic(b, 0, rep.n_synthetic, 0.0, res.wss, True)
            return diag, None
        al = align_labels(reference.labels[rows], res.labels[orig], K)
        diag = ReplicaDiagnostic(b, int(rows.size), rep.n_synthetic, al.overlap, res.wss, False)
        return diag, _tally(rows, al.apply(res.labels[orig]), n, K)

    outcomes = _map(one, range(B), threads)
    membership = aggregate_votes([t for _, t in outcomes if t is not None], n, K)
    return BBCResult(
        _restore_order(membership, canon),
        prior,
        _restore_result(reference, canon),
        [d for d, _ in outcomes],
        [t for _, t in outcomes],
    )


def _restore_order(m: MembershipMatrix, canon: np.ndarray) -> MembershipMatrix:
    # canonical position i holds input position canon[i]
    inv = np.empty_like(canon)
    inv[canon] = np.arange(canon.size)
    return MembershipMatrix(m.u[inv], m.support_counts[inv], m.final_labels[inv], m.ties[inv])


def _restore_result(r: ClusteringResult, canon: np.ndarray) -> ClusteringResult:
    inv = np.empty_like(canon)
    inv[canon] = np.arange(canon.size)
    return ClusteringResult(r.labels[inv], r.centroids, r.wss, r.n_iter, r.converged)
