"""Entropy of fuzzy memberships and choosing the number of clusters.

For a membership vector ``u`` over K clusters the total indecision is its
Shannon entropy in bits, and the indecision between clusters ``l`` and ``m``
is the binary entropy of ``u_l / (u_l + u_m)``.  Averaged over the data,
the best K minimises either the mean total entropy or the worst (largest)
mean pairwise entropy.  Silhouette and gap statistic curves are provided as
classical baselines.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .data import as_data
from .ensemble import MembershipMatrix, _map, bbc
from .kmeans import KMeansConfig, kmeans
from .rng import SeededRng, as_rng

log = logging.getLogger(__name__)


def _xlog2x(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = u[pos] * np.log2(u[pos])
    return out


def shannon_entropy(u) -> float:
    """Entropy in bits of a probability vector (``0 log 0 = 0``)."""
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise ValueError("probability vector has a negative entry")
    if abs(u.sum() - 1.0) > 1e-6:
        raise ValueError(f"probability vector sums to {u.sum():.8g}, not 1")
    return float(max(0.0, -_xlog2x(u).sum()))


def pairwise_entropy(u, l: int, m: int) -> float:
    """Binary entropy of the renormalised pair ``(u[l], u[m])``; 0 if both are 0."""
    if l == m:
        raise ValueError("pairwise entropy needs two distinct clusters")
    a, b = float(u[l]), float(u[m])
    total = a + b
    if total <= 0:
        return 0.0
    q = np.array([a / total, b / total])
    return float(max(0.0, -_xlog2x(q).sum()))


def _pairwise_matrix(U: np.ndarray) -> np.ndarray:
    """Mean over rows of the pairwise entropy for every cluster pair."""
    n, K = U.shape
    out = np.zeros((K, K))
    for l in range(K):
        for m in range(l + 1, K):
            total = U[:, l] + U[:, m]
            safe = np.where(total > 0, total, 1.0)
            ql, qm = U[:, l] / safe, U[:, m] / safe
            h = -(_xlog2x(ql) + _xlog2x(qm))
            h[total <= 0] = 0.0
            out[l, m] = out[m, l] = max(0.0, h.mean()) if n else 0.0
    return out


@dataclass(frozen=True, eq=False)
class EntropyReport:
    """Entropy summary of one membership matrix.

    ``per_point`` is NaN for rows that were never resampled; those rows are
    excluded from ``mean_entropy`` and ``pairwise_mean``.
    """

    per_point: np.ndarray
    mean_entropy: float
    pairwise_mean: np.ndarray
    worst_pair: tuple[int, int, float]
    n_unsupported: int = 0

    def to_dict(self) -> dict:
        return {
            "per_point": [None if np.isnan(v) else float(v) for v in self.per_point],
            "mean_entropy": self.mean_entropy,
            "pairwise_mean": self.pairwise_mean.tolist(),
            "worst_pair": list(self.worst_pair),
            "n_unsupported": self.n_unsupported,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EntropyReport":
        l, m, v = d["worst_pair"]
        return cls(
            np.array([np.nan if v is None else v for v in d["per_point"]], dtype=float),
            float(d["mean_entropy"]),
            np.asarray(d["pairwise_mean"], dtype=float),
            (int(l), int(m), float(v)),
            int(d.get("n_unsupported", 0)),
        )

    def __eq__(self, other):
        if not isinstance(other, EntropyReport):
            return NotImplemented
        return (
            np.array_equal(self.per_point, other.per_point, equal_nan=True)
            and self.mean_entropy == other.mean_entropy
            and np.array_equal(self.pairwise_mean, other.pairwise_mean)
            and tuple(self.worst_pair) == tuple(other.worst_pair)
            and self.n_unsupported == other.n_unsupported
        )

    __hash__ = None


def entropy_report(membership: MembershipMatrix) -> EntropyReport:
    U = membership.u
    ok = membership.supported
    K = U.shape[1]
    per_point = np.full(U.shape[0], np.nan)
    per_point[ok] = np.maximum(0.0, -_xlog2x(U[ok]).sum(axis=1))
    mean = float(per_point[ok].mean()) if ok.any() else 0.0
    pair = _pairwise_matrix(U[ok])
    if K > 1:
        iu = np.triu_indices(K, 1)
        j = int(np.argmax(pair[iu]))
        worst = (int(iu[0][j]), int(iu[1][j]), float(pair[iu][j]))
    else:
        worst = (0, 0, 0.0)
    return EntropyReport(per_point, mean, pair, worst, int((~ok).sum()))


def silhouette(data, labels) -> float:
    """Mean silhouette width with Euclidean distances; singletons score 0."""
    X = np.asarray(getattr(data, "values", data), dtype=float)
    labels = np.asarray(labels)
    ks, inv = np.unique(labels, return_inverse=True)
    K = ks.size
    if K < 2:
        raise ValueError("silhouette needs at least two clusters")
    D = cdist(X, X)
    n = X.shape[0]
    sums = np.zeros((n, K))
    for c in range(K):
        sums[:, c] = D[:, inv == c].sum(axis=1)
    sizes = np.bincount(inv, minlength=K)
    own = sizes[inv]
    a = np.where(own > 1, sums[np.arange(n), inv] / np.maximum(own - 1, 1), 0.0)
    mean_other = sums / sizes
    mean_other[np.arange(n), inv] = np.inf
    b = mean_other.min(axis=1)
    denom = np.maximum(a, b)
    s = np.where((own > 1) & (denom > 0), (b - a) / np.where(denom > 0, denom, 1.0), 0.0)
    return float(s.mean())


@dataclass(frozen=True, eq=False)
class Curve:
    """A criterion evaluated over candidate K values; NaN marks excluded K."""

    ks: list
    values: np.ndarray
    best_k: int | None

    def to_dict(self) -> dict:
        return {
            "K": list(self.ks),
            "values": [None if np.isnan(v) else float(v) for v in self.values],
            "best_K": self.best_k,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Curve":
        vals = np.array([np.nan if v is None else v for v in d["values"]], dtype=float)
        return cls(list(d["K"]), vals, d["best_K"])

    def __eq__(self, other):
        if not isinstance(other, Curve):
            return NotImplemented
        return (
            list(self.ks) == list(other.ks)
            and np.array_equal(self.values, other.values, equal_nan=True)
            and self.best_k == other.best_k
        )

    __hash__ = None


def _pick(ks, values, largest: bool):
    vals = np.asarray(values, dtype=float)
    ok = ~np.isnan(vals)
    if not ok.any():
        return None
    masked = np.where(ok, vals, -np.inf if largest else np.inf)
    i = int(np.argmax(masked) if largest else np.argmin(masked))
    return int(ks[i])


def silhouette_curve(data, K_range, kmeans_cfg: KMeansConfig | None = None, rng=0) -> Curve:
    """Silhouette of best-of-restarts k-means for each K; best = argmax."""
    data = as_data(data)
    rng = as_rng(rng)
    cfg = kmeans_cfg or KMeansConfig(2)
    ks = [int(k) for k in K_range]
    vals = np.array([
        silhouette(data, kmeans(data, cfg.with_k(k), rng=rng.child("silhouette", k)).labels)
        for k in ks
    ])
    return Curve(ks, vals, _pick(ks, vals, largest=True))


def gap_statistic(data, K_range, B_ref: int = 50, kmeans_cfg: KMeansConfig | None = None, rng=0) -> Curve:
    """Gap(K) = mean log W_K over uniform box references - log W_K on the data.

    References are uniform over the per-feature bounding box of the data and
    shared across K.  K values where W_K is zero are NaN and never chosen;
    the best K is the argmax of the curve.
    """
    if B_ref < 1:
        raise ValueError("B_ref must be >= 1")
    data = as_data(data)
    X = data.values
    rng = as_rng(rng)
    cfg = kmeans_cfg or KMeansConfig(2)
    lo, hi = X.min(axis=0), X.max(axis=0)
    ref_gen = rng.child("gap", "reference").generator()
    refs = [lo + (hi - lo) * ref_gen.random(X.shape) for _ in range(B_ref)]
    return _gap_with_refs(X, refs, K_range, cfg, rng)


def _gap_with_refs(X, refs, K_range, cfg, rng) -> Curve:
    ks = [int(k) for k in K_range]
    vals = np.full(len(ks), np.nan)
    for i, k in enumerate(ks):
        w = kmeans(X, cfg.with_k(k), rng=rng.child("gap", "data", k)).wss
        ref_w = [
            kmeans(R, cfg.with_k(k), rng=rng.child("gap", "ref", k, b)).wss for b, R in enumerate(refs)
        ]
        if w <= 0 or min(ref_w) <= 0:
            log.info("gap statistic: zero WSS at K=%d, excluded", k)
            continue
        vals[i] = np.mean(np.log(ref_w)) - np.log(w)
    return Curve(ks, vals, _pick(ks, vals, largest=True))


@dataclass(frozen=True, eq=False)
class KSelectionReport:
    """Entropy grid over (K, s) plus the chosen K per criterion.

    ``cells`` maps ``(K, s)`` to an :class:`EntropyReport`.  The entropy
    choices use the ``reference_s`` column; ``per_s`` records the argmins
    for every scanned ``s`` as a robustness check.
    """

    ks: list
    s_values: list
    reference_s: float
    cells: dict
    chosen_k_mean_entropy: int
    chosen_k_worst_pair: int
    per_s: dict = field(default_factory=dict)
    silhouette: Curve | None = None
    gap: Curve | None = None
    omega: float = 0.5
    B: int = 100

    def curve(self, measure: str, s: float) -> np.ndarray:
        if measure == "mean_entropy":
            return np.array([self.cells[(k, s)].mean_entropy for k in self.ks])
        if measure == "worst_pair":
            return np.array([self.cells[(k, s)].worst_pair[2] for k in self.ks])
        raise ValueError(f"unknown measure {measure!r}")

    def verdict(self) -> dict:
        return {
            "K_by_mean_entropy": self.chosen_k_mean_entropy,
            "K_by_worst_pair": self.chosen_k_worst_pair,
            "silhouette_K": self.silhouette.best_k if self.silhouette else None,
            "gap_K": self.gap.best_k if self.gap else None,
        }

    def long_rows(self, dataset: str = "data") -> list[tuple]:
        """Rows ``(dataset, K, s, measure, value)`` for plotting."""
        rows = []
        for s in self.s_values:
            for measure in ("mean_entropy", "worst_pair"):
                for k, v in zip(self.ks, self.curve(measure, s)):
                    rows.append((dataset, k, s, measure, float(v)))
        for name, c in (("silhouette", self.silhouette), ("gap", self.gap)):
            if c is not None:
                for k, v in zip(c.ks, c.values):
                    rows.append((dataset, k, "", name, float(v)))
        return rows

    def to_dict(self) -> dict:
        return {
            "K": list(self.ks),
            "s": list(self.s_values),
            "reference_s": self.reference_s,
            "omega": self.omega,
            "B": self.B,
            "verdict": self.verdict(),
            "per_s": {repr(s): v for s, v in self.per_s.items()},
            "cells": [
                {"K": k, "s": s, "entropy": self.cells[(k, s)].to_dict()}
                for s in self.s_values
                for k in self.ks
            ],
            "silhouette": self.silhouette.to_dict() if self.silhouette else None,
            "gap": self.gap.to_dict() if self.gap else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KSelectionReport":
        cells = {(c["K"], c["s"]): EntropyReport.from_dict(c["entropy"]) for c in d["cells"]}
        return cls(
            list(d["K"]),
            list(d["s"]),
            d["reference_s"],
            cells,
            d["verdict"]["K_by_mean_entropy"],
            d["verdict"]["K_by_worst_pair"],
            {float(k): v for k, v in d["per_s"].items()},
            Curve.from_dict(d["silhouette"]) if d["silhouette"] else None,
            Curve.from_dict(d["gap"]) if d["gap"] else None,
            d["omega"],
            d["B"],
        )

    def __eq__(self, other):
        if not isinstance(other, KSelectionReport):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    __hash__ = None


def select_k(
    data,
    K_range=range(2, 7),
    s_values=(1.0,),
    omega: float = 0.5,
    B: int = 100,
    kmeans_cfg: KMeansConfig | None = None,
    rng: SeededRng | int | None = 0,
    reference_s: float | None = None,
    baselines: bool = False,
    B_ref: int = 50,
    threads: int = 1,
) -> KSelectionReport:
    """Run BBC on every (K, s) cell and pick K by both entropy criteria.

    Cell ``(K, s)`` uses substream ``rng.child("bbc", K, s)``.  The choice
    uses ``reference_s`` (default: 1 if scanned, else the first ``s``).
    With ``baselines`` the silhouette and gap curves are added.
    """
    data = as_data(data)
    ks = [int(k) for k in K_range]
    s_values = [float(s) for s in s_values]
    if not ks:
        raise ValueError("empty K range")
    if not s_values:
        raise ValueError("no s values given")
    if min(ks) < 2 or max(ks) > data.n:
        raise ValueError(f"K range must lie within [2, n={data.n}], got {ks}")
    if reference_s is None:
        reference_s = 1.0 if 1.0 in s_values else s_values[0]
    elif float(reference_s) not in s_values:
        raise ValueError(f"reference s={reference_s} is not among the scanned values")
    reference_s = float(reference_s)
    rng = as_rng(rng)
    cfg = kmeans_cfg or KMeansConfig(2)
    grid = [(k, s) for s in s_values for k in ks]

    def cell(key):
        k, s = key
        res = bbc(data, k, cfg, s=s, omega=omega, B=B, rng=rng.child("bbc", k, s))
        rep = entropy_report(res.membership)
        log.info("K=%d s=%g mean entropy %.4f worst pair %.4f", k, s, rep.mean_entropy, rep.worst_pair[2])
        return key, rep

    cells = dict(_map(cell, grid, threads))

    def argmins(s):
        mean = [cells[(k, s)].mean_entropy for k in ks]
        worst = [cells[(k, s)].worst_pair[2] for k in ks]
        return _pick(ks, mean, largest=False), _pick(ks, worst, largest=False)

    per_s = {s: dict(zip(("K_by_mean_entropy", "K_by_worst_pair"), argmins(s))) for s in s_values}
    by_mean, by_worst = argmins(reference_s)
    sil = gap = None
    if baselines:
        sil = silhouette_curve(data, ks, cfg, rng.child("baseline"))
        gap = gap_statistic(data, ks, B_ref, cfg, rng.child("baseline"))
    return KSelectionReport(
        ks, s_values, reference_s, cells, by_mean, by_worst, per_s, sil, gap, omega, B
    )
