"""Serialising results to JSON/CSV, contingency tables and simplex coordinates.

JSON files wrap a result as ``{"kind": <type name>, "data": {...}}`` so that
:func:`load_report` can rebuild the right type.  CSV output exists for the
tabular reports only:

* ``MembershipMatrix`` -> ``id,u_0,...,u_{K-1}`` (memberships only)
* ``KSelectionReport`` -> long format ``dataset,K,s,measure,value``

Floats are written with ``repr`` so files round-trip exactly and are
byte-identical across runs.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .ensemble import BBCResult, MembershipMatrix, align_labels
from .kmeans import ClusteringResult
from .prior import GaussianMixturePrior
from .selection import Curve, EntropyReport, KSelectionReport

_KINDS = {
    cls.__name__: cls
    for cls in (
        MembershipMatrix,
        BBCResult,
        KSelectionReport,
        EntropyReport,
        ClusteringResult,
        GaussianMixturePrior,
        Curve,
    )
}

CURVE_HEADER = ("dataset", "K", "s", "measure", "value")


def _num(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, str):
        return v
    return repr(float(v))


def _write_text(path, text: str):
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror}") from exc


def to_json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def membership_csv(m: MembershipMatrix, ids=None) -> str:
    ids = np.arange(m.n) if ids is None else ids
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["id"] + [f"u_{k}" for k in range(m.K)])
    for i, row in zip(ids, m.u):
        w.writerow([int(i)] + [_num(v) for v in row])
    return buf.getvalue()


def curves_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CURVE_HEADER)
    for r in rows:
        w.writerow([_num(v) for v in r])
    return buf.getvalue()


def labels_csv(labels, ids=None, column: str = "label") -> str:
    labels = np.asarray(labels)
    ids = np.arange(labels.size) if ids is None else ids
    lines = [f"id,{column}"] + [f"{int(i)},{int(l)}" for i, l in zip(ids, labels)]
    return "\n".join(lines) + "\n"


def save_report(report, path, fmt: str = "json"):
    """Write ``report`` to ``path`` as ``json`` or ``csv``."""
    if fmt == "json":
        kind = type(report).__name__
        if kind not in _KINDS:
            raise TypeError(f"cannot serialise {kind}")
        _write_text(path, to_json({"kind": kind, "data": report.to_dict()}))
    elif fmt == "csv":
        if isinstance(report, MembershipMatrix):
            _write_text(path, membership_csv(report))
        elif isinstance(report, KSelectionReport):
            _write_text(path, curves_csv(report.long_rows()))
        else:
            raise TypeError(f"no CSV layout for {type(report).__name__}")
    else:
        raise ValueError(f"unknown format {fmt!r}")


def load_report(path, fmt: str = "json"):
    """Inverse of :func:`save_report`.

    CSV membership files come back as a :class:`MembershipMatrix` whose
    support count is 1 for rows with any mass and 0 otherwise; CSV curve
    files come back as a list of ``(dataset, K, s, measure, value)`` rows.
    """
    text = Path(path).read_text(encoding="utf-8")
    if fmt == "json":
        blob = json.loads(text)
        return _KINDS[blob["kind"]].from_dict(blob["data"])
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    rows = list(csv.reader(text.splitlines()))
    header = rows[0]
    if tuple(header) == CURVE_HEADER:
        return [
            (r[0], int(r[1]), float(r[2]) if r[2] else "", r[3], float(r[4]))
            for r in rows[1:]
        ]
    return read_membership_csv(path)[1]


def read_membership_csv(path) -> tuple[np.ndarray, MembershipMatrix]:
    """Read an ``id,u_0,...`` file; returns the ids and the memberships."""
    rows = list(csv.reader(Path(path).read_text(encoding="utf-8").splitlines()))
    if not rows or not rows[0] or rows[0][0] != "id":
        raise ValueError(f"{path}: not a membership file (expected an 'id' column first)")
    K = len(rows[0]) - 1
    body = [r for r in rows[1:] if r]
    for lineno, r in enumerate(body, start=2):
        if len(r) != K + 1:
            raise ValueError(f"{path}: line {lineno}: expected {K + 1} fields, got {len(r)}")
    ids = np.array([int(r[0]) for r in body], dtype=int)
    u = np.array([[float(v) for v in r[1:]] for r in body], dtype=float).reshape(len(body), K)
    support = (u.sum(axis=1) > 0).astype(int)
    return ids, MembershipMatrix(u, support)


def simplex_coordinates(u) -> np.ndarray:
    """Project 3-cluster memberships onto the triangle (0,0), (1,0), (1/2, sqrt(3)/2)."""
    u = np.asarray(u, dtype=float)
    if u.ndim != 2 or u.shape[1] != 3:
        k = u.shape[1] if u.ndim == 2 else u.ndim
        raise ValueError(
            f"simplex projection needs exactly 3 membership columns (a 2-simplex), got {k}"
        )
    x = u[:, 1] + 0.5 * u[:, 2]
    y = (math.sqrt(3) / 2) * u[:, 2]
    return np.column_stack([x, y])


def contingency(truth, predicted, n_true: int | None = None, n_pred: int | None = None) -> np.ndarray:
    """Counts table: rows are true classes, columns predicted clusters."""
    truth = np.asarray(truth)
    predicted = np.asarray(predicted)
    n_true = n_true or int(truth.max()) + 1
    n_pred = n_pred or int(predicted.max()) + 1
    table = np.zeros((n_true, n_pred), dtype=int)
    np.add.at(table, (truth, predicted), 1)
    return table


def aligned_contingency(truth, predicted, K: int) -> tuple[np.ndarray, np.ndarray]:
    """Contingency table with predicted clusters relabelled to best match the truth.

    Requires both labelings to use ``0..K-1``.  Returns the table and the
    relabelled predictions.
    """
    al = align_labels(truth, predicted, K)
    relabelled = al.apply(predicted)
    return contingency(truth, relabelled, K, K), relabelled
