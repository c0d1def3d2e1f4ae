"""Observation tables, synthetic cluster datasets and CSV ingestion."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .rng import SeededRng, as_rng


class DataError(ValueError):
    """Raised for malformed input tables or invalid dataset recipes."""


@dataclass(frozen=True, eq=False)
class DataMatrix:
    """An immutable ``n x p`` table of finite reals with stable row ids.

    ``row_ids`` default to ``0..n-1``; when given they must be a permutation
    of that range (they travel with rows when a table is shuffled).
    """

    values: np.ndarray
    row_ids: np.ndarray = field(default=None)
    columns: tuple[str, ...] | None = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim == 1:
            values = values.reshape(1, -1) if values.size else values.reshape(0, 0)
        if values.ndim != 2:
            raise DataError(f"expected a 2-D table, got shape {values.shape}")
        n, p = values.shape
        if n < 1 or p < 1:
            raise DataError(f"table must have at least one row and one column, got {n}x{p}")
        if not np.all(np.isfinite(values)):
            bad = np.argwhere(~np.isfinite(values))[0]
            raise DataError(f"non-finite entry at row {bad[0]}, column {bad[1]}")
        if self.row_ids is None:
            ids = np.arange(n)
        else:
            ids = np.asarray(self.row_ids, dtype=np.int64).copy()
            if ids.shape != (n,) or not np.array_equal(np.sort(ids), np.arange(n)):
                raise DataError("row_ids must be a permutation of 0..n-1")
        if self.columns is not None and len(self.columns) != p:
            raise DataError(f"{len(self.columns)} column names for {p} columns")
        values.setflags(write=False)
        ids.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "row_ids", ids)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def take(self, order) -> "DataMatrix":
        """Reorder rows (row ids travel with them)."""
        order = np.asarray(order)
        return DataMatrix(self.values[order], self.row_ids[order], self.columns)

    def canonical_order(self) -> np.ndarray:
        """Positions that sort rows by row id."""
        return np.argsort(self.row_ids, kind="stable")

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, DataMatrix):
            return NotImplemented
        return (
            self.values.shape == other.values.shape
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.row_ids, other.row_ids)
        )

    __hash__ = None


def as_data(data) -> DataMatrix:
    return data if isinstance(data, DataMatrix) else DataMatrix(np.asarray(data, dtype=float))


@dataclass(frozen=True)
class DatasetSpec:
    """Recipe for a Gaussian cluster dataset with one shared covariance."""

    component_sizes: tuple[int, ...]
    centroids: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.component_sizes)
        centroids = np.atleast_2d(np.asarray(self.centroids, dtype=float))
        cov = np.atleast_2d(np.asarray(self.covariance, dtype=float))
        if len(sizes) != centroids.shape[0]:
            raise DataError(f"{len(sizes)} component sizes for {centroids.shape[0]} centroids")
        if any(s < 1 for s in sizes):
            raise DataError(f"component sizes must be >= 1, got {sizes}")
        p = centroids.shape[1]
        if cov.shape != (p, p):
            raise DataError(f"covariance shape {cov.shape} does not match dimension {p}")
        if not np.allclose(cov, cov.T, rtol=0, atol=1e-12):
            raise DataError("covariance is not symmetric")
        eig = np.linalg.eigvalsh(cov)
        if eig[0] <= 0:
            raise DataError(f"covariance is not positive definite: eigenvalue {eig[0]:.6g} <= 0")
        object.__setattr__(self, "component_sizes", sizes)
        object.__setattr__(self, "centroids", centroids)
        object.__setattr__(self, "covariance", cov)

    @property
    def dimension(self) -> int:
        return self.centroids.shape[1]

    @property
    def n_clusters(self) -> int:
        return len(self.component_sizes)

    @property
    def n(self) -> int:
        return sum(self.component_sizes)

    def to_dict(self) -> dict:
        return {
            "component_sizes": list(self.component_sizes),
            "centroids": self.centroids.tolist(),
            "covariance": self.covariance.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DatasetSpec":
        try:
            return cls(tuple(d["component_sizes"]), d["centroids"], d["covariance"])
        except KeyError as exc:
            raise DataError(f"dataset spec is missing field {exc.args[0]!r}") from None


_TRIANGLE_WIDE = [(1.5, 0.0), (-1.5, 0.0), (0.0, 3 * math.sqrt(3) / 2)]
_TRIANGLE_NARROW = [(1.0, 0.0), (-1.0, 0.0), (0.0, math.sqrt(3))]

#: The six benchmark recipes, keyed ``ds1`` .. ``ds6``.
BENCHMARKS: dict[str, DatasetSpec] = {
    "ds1": DatasetSpec((33, 33, 33), _TRIANGLE_WIDE, np.eye(2)),
    "ds2": DatasetSpec((99, 66, 33), _TRIANGLE_WIDE, np.eye(2)),
    "ds3": DatasetSpec((33, 33, 33), _TRIANGLE_NARROW, np.eye(2)),
    "ds4": DatasetSpec((33, 33, 33), _TRIANGLE_WIDE, [[1.0, 0.25], [0.25, 1.0]]),
    "ds5": DatasetSpec(
        (66,) * 5, [(3, 0), (0, 3), (-3, 0), (0, -3), (0, 0)], 0.75 * np.eye(2)
    ),
    "ds6": DatasetSpec(
        (66,) * 4, [(1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)], np.eye(3)
    ),
}


def generate_dataset(spec: DatasetSpec, rng: SeededRng | int) -> tuple[DataMatrix, np.ndarray]:
    """Draw a labelled sample from ``spec``.

    Rows are grouped by component in recipe order; component ``j`` uses its
    own substream ``rng.child("component", j)`` so recipes that share a
    prefix of components share those rows.

    Returns
    -------
    data : DataMatrix
    labels : ndarray of int
        Generating component of each row.
    """
    rng = as_rng(rng)
    chol = np.linalg.cholesky(spec.covariance)
    blocks, labels = [], []
    for j, (size, mu) in enumerate(zip(spec.component_sizes, spec.centroids)):
        z = rng.child("component", j).generator().standard_normal((size, spec.dimension))
        blocks.append(mu + z @ chol.T)
        labels.append(np.full(size, j))
    columns = tuple(f"x{i}" for i in range(spec.dimension))
    return DataMatrix(np.vstack(blocks), columns=columns), np.concatenate(labels)


def load_csv(
    path,
    header: bool = True,
    label_column: int | None = None,
) -> DataMatrix:
    """Read a rectangular numeric CSV.

    ``label_column`` (may be negative) names a column to skip, e.g. a class
    column; use :func:`load_column` to read it.  Errors carry the 1-based
    line number of the offending line.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    rows = list(csv.reader(text.splitlines()))
    names = None
    start = 0
    if header and rows:
        names = [c.strip() for c in rows[0]]
        start = 1
    body = [(i + 1, r) for i, r in enumerate(rows) if i >= start and any(c.strip() for c in r)]
    if not body:
        raise DataError(f"{path}: no data rows")
    width = len(body[0][1])
    if names is not None and len(names) != width:
        raise DataError(f"{path}: line {body[0][0]}: {width} fields, header has {len(names)}")
    keep = list(range(width))
    if label_column is not None:
        drop = label_column % width
        keep.remove(drop)
        if names is not None:
            names = [names[i] for i in keep]
    if not keep:
        raise DataError(f"{path}: no feature columns left")
    values = np.empty((len(body), len(keep)))
    for r, (lineno, row) in enumerate(body):
        if len(row) != width:
            raise DataError(f"{path}: line {lineno}: expected {width} fields, got {len(row)}")
        for c, col in enumerate(keep):
            cell = row[col].strip()
            try:
                v = float(cell)
            except ValueError:
                raise DataError(f"{path}: line {lineno}: non-numeric cell {cell!r}") from None
            if not math.isfinite(v):
                raise DataError(f"{path}: line {lineno}: non-finite cell {cell!r}")
            values[r, c] = v
    return DataMatrix(values, columns=tuple(names) if names is not None else None)


def load_column(path, column: int = -1, header: bool = True) -> list[str]:
    """Read one column of a CSV as strings (e.g. a label column)."""
    rows = list(csv.reader(Path(path).read_text(encoding="utf-8").splitlines()))
    if header:
        rows = rows[1:]
    return [r[column].strip() for r in rows if any(c.strip() for c in r)]


def encode_labels(raw) -> tuple[np.ndarray, list[str]]:
    """Map arbitrary label values to ``0..G-1`` in order of first appearance."""
    names: list[str] = []
    index: dict[str, int] = {}
    codes = []
    for v in raw:
        key = str(v)
        if key not in index:
            index[key] = len(names)
            names.append(key)
        codes.append(index[key])
    return np.asarray(codes, dtype=int), names
