"""Command-line interface.

Subcommands::

    bbclust generate  ds1..ds6 | --spec-file FILE   --seed N --out data.csv
    bbclust cluster   INPUT -k K --method {kmeans,bagclust1,bbc} --seed N --out DIR
    bbclust select-k  INPUT --k-range 2-6 --s-list 1,1.5,3 --seed N --out DIR
    bbclust baseline  INPUT --k-range 2-6 --seed N --out DIR
    bbclust simplex   MEMBERSHIP_CSV --out coords.csv

Data goes only to the requested output paths; progress goes to stderr.
Exit status: 0 on success, 2 for usage errors or missing input, 1 for any
other failure (outputs written so far are removed).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bootstrap import SYNTHETIC
from .data import BENCHMARKS, DatasetSpec, encode_labels, generate_dataset, load_column, load_csv
from .ensemble import bagclust1, bbc
from .kmeans import KMeansConfig, kmeans, wss
from .reports import (
    aligned_contingency,
    curves_csv,
    labels_csv,
    membership_csv,
    read_membership_csv,
    simplex_coordinates,
    to_json,
)
from .rng import SeededRng, fresh_seed
from .selection import gap_statistic, select_k, silhouette_curve

log = logging.getLogger("bbclust")


class UsageError(Exception):
    """Bad arguments or missing input; exit status 2."""


class Outputs:
    """Collects output files so a failed run can remove them."""

    def __init__(self):
        self.written: list[Path] = []

    def write(self, path, text: str):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        self.written.append(path)
        log.info("wrote %s", path)

    def rollback(self):
        for p in self.written:
            p.unlink(missing_ok=True)


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _omega(text):
    v = float(text)
    if not 0.0 <= v < 1.0:
        raise argparse.ArgumentTypeError(f"omega must lie in [0, 1), got {text}")
    return v


def _k_range(text):
    try:
        if "-" in text:
            lo, hi = (int(t) for t in text.split("-", 1))
            ks = list(range(lo, hi + 1))
        else:
            ks = sorted({int(t) for t in text.split(",")})
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad K range {text!r} (use 2-6 or 2,3,5)") from None
    if not ks or min(ks) < 2:
        raise argparse.ArgumentTypeError(f"K range must be non-empty with K >= 2, got {text!r}")
    return ks


def _s_list(text):
    try:
        vals = [float(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad s list {text!r}") from None
    if not vals or any(not v > 0 for v in vals):
        raise argparse.ArgumentTypeError("s values must be positive")
    return vals


def _seed(args) -> int:
    if args.seed is None:
        args.seed = fresh_seed()
        print(f"seed: {args.seed}", file=sys.stderr)
    return args.seed


def _input(path) -> Path:
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"input file not found: {path}")
    return path


def _load(args):
    path = _input(args.input)
    data = load_csv(path, header=not args.no_header, label_column=args.label_column)
    truth = None
    if args.truth:
        truth = load_column(_input(args.truth), args.truth_column)
    elif args.label_column is not None:
        truth = load_column(path, args.label_column, header=not args.no_header)
    return data, truth


def _kmeans_cfg(args, K=2):
    return KMeansConfig(K, n_restarts=args.restarts, max_iter=args.max_iter, init=args.init)


def cmd_generate(args, out: Outputs):
    if args.spec_file:
        spec = DatasetSpec.from_dict(json.loads(_input(args.spec_file).read_text()))
        name = Path(args.spec_file).stem
    else:
        if args.name not in BENCHMARKS:
            raise UsageError(f"unknown dataset {args.name!r}; choose from {', '.join(BENCHMARKS)}")
        spec = BENCHMARKS[args.name]
        name = args.name
    seed = _seed(args)
    data, labels = generate_dataset(spec, seed)
    target = Path(args.out or f"{name}.csv")
    lines = [",".join(data.columns)] + [",".join(repr(float(v)) for v in row) for row in data.values]
    out.write(target, "\n".join(lines) + "\n")
    out.write(target.with_name(f"{target.stem}_labels.csv"), labels_csv(labels))


def _summary_contingency(summary, truth, labels, K):
    codes, names = encode_labels(truth)
    if len(codes) != len(labels):
        raise ValueError(f"truth has {len(codes)} labels for {len(labels)} rows")
    summary["truth_classes"] = names
    # rows no replica voted on carry label -1 and stay out of the table
    ok = labels >= 0
    codes, labels = codes[ok], labels[ok]
    if not ok.all():
        summary["unassigned"] = int((~ok).sum())
    if len(names) == K:
        table, _ = aligned_contingency(codes, labels, K)
        summary["contingency"] = table.tolist()
        summary["misassigned"] = int(len(labels) - np.trace(table))
    else:
        table = np.zeros((len(names), K), dtype=int)
        np.add.at(table, (codes, labels), 1)
        summary["contingency"] = table.tolist()


def cmd_cluster(args, out: Outputs):
    data, truth = _load(args)
    seed = _seed(args)
    K = args.k
    if K > data.n:
        raise UsageError(f"K={K} exceeds the number of rows ({data.n})")
    cfg = _kmeans_cfg(args, K)
    outdir = Path(args.out)
    summary = {"method": args.method, "K": K, "n": data.n, "p": data.p, "seed": seed}
    membership = None
    if args.method == "kmeans":
        res = kmeans(data, cfg, rng=seed)
        labels = res.labels
        summary.update(wss=res.wss, n_iter=res.n_iter, converged=res.converged)
    elif args.method == "bagclust1":
        membership, ref = bagclust1(data, args.B, K, cfg, rng=seed, threads=args.threads)
        labels = membership.final_labels
        summary.update(B=args.B, reference_wss=ref.wss)
    else:
        dump = []
        hook = (lambda b, rep: dump.append((b, rep))) if args.dump_replicas else None
        res = bbc(
            data, K, cfg, s=args.s, omega=args.omega, B=args.B, rng=seed,
            weighted=not args.unweighted, threads=args.threads, on_replica=hook,
        )
        membership = res.membership
        labels = membership.final_labels
        summary.update(
            B=args.B, s=args.s, omega=args.omega, weighted=not args.unweighted,
            reference_wss=res.reference.wss,
            n_synthetic=res.n_synthetic, n_skipped_replicas=res.n_skipped,
            prior=res.prior.to_dict(),
            replicas=[d.to_dict() for d in res.diagnostics],
        )
        if res.n_synthetic == 0:
            summary["note"] = "no synthetic points were generated"
        if args.dump_replicas:
            out.write(args.dump_replicas, _replica_csv(sorted(dump, key=lambda t: t[0]), data.p))
    if membership is not None:
        summary["n_ties"] = int(membership.ties.sum())
        summary["n_unsupported"] = int((~membership.supported).sum())
        ok = labels >= 0
        if ok.all() and np.all(np.bincount(labels, minlength=K) > 0):
            cents = np.array([data.values[labels == k].mean(axis=0) for k in range(K)])
            summary["wss"] = wss(data, labels, cents)
    if truth is not None:
        _summary_contingency(summary, truth, labels, K)
    out.write(outdir / "labels.csv", labels_csv(labels))
    if membership is not None:
        out.write(outdir / "membership.csv", membership_csv(membership))
    out.write(outdir / "summary.json", to_json(summary))


def _replica_csv(dump, p):
    lines = ["replica,provenance,weight," + ",".join(f"x{j}" for j in range(p))]
    for b, rep in dump:
        for src, w, row in zip(rep.source, rep.weights, rep.points):
            prov = "synthetic" if src == SYNTHETIC else f"original:{int(src)}"
            lines.append(f"{b},{prov},{repr(float(w))}," + ",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def cmd_select_k(args, out: Outputs):
    data, _ = _load(args)
    seed = _seed(args)
    if max(args.k_range) > data.n:
        raise UsageError(f"K range exceeds the number of rows ({data.n})")
    report = select_k(
        data, args.k_range, args.s_list, args.omega, args.B, _kmeans_cfg(args), rng=seed,
        reference_s=args.reference_s, baselines=not args.no_baselines, B_ref=args.B_ref,
        threads=args.threads,
    )
    outdir = Path(args.out)
    dataset = Path(args.input).stem
    out.write(outdir / "curves.csv", curves_csv(report.long_rows(dataset)))
    verdict = dict(report.verdict(), seed=seed, per_s={repr(s): v for s, v in report.per_s.items()})
    out.write(outdir / "verdict.json", to_json(verdict))
    out.write(outdir / "report.json", to_json({"kind": "KSelectionReport", "data": report.to_dict()}))


def cmd_baseline(args, out: Outputs):
    data, _ = _load(args)
    seed = _seed(args)
    if max(args.k_range) > data.n:
        raise UsageError(f"K range exceeds the number of rows ({data.n})")
    cfg = _kmeans_cfg(args)
    rng = SeededRng(seed).child("baseline")
    sil = silhouette_curve(data, args.k_range, cfg, rng)
    gap = gap_statistic(data, args.k_range, args.B_ref, cfg, rng)
    dataset = Path(args.input).stem
    rows = [(dataset, k, "", "silhouette", float(v)) for k, v in zip(sil.ks, sil.values)]
    rows += [(dataset, k, "", "gap", float(v)) for k, v in zip(gap.ks, gap.values)]
    outdir = Path(args.out)
    out.write(outdir / "curves.csv", curves_csv(rows))
    out.write(outdir / "verdict.json", to_json({"silhouette_K": sil.best_k, "gap_K": gap.best_k, "seed": seed}))


def cmd_simplex(args, out: Outputs):
    ids, m = read_membership_csv(_input(args.membership))
    xy = simplex_coordinates(m.u)
    lines = ["id,x,y"] + [f"{int(i)},{repr(float(x))},{repr(float(y))}" for i, (x, y) in zip(ids, xy)]
    out.write(args.out, "\n".join(lines) + "\n")


def _add_input(p):
    p.add_argument("input", help="input CSV of numeric features")
    p.add_argument("--no-header", action="store_true", help="input has no header row")
    p.add_argument("--label-column", type=int, default=None,
                   help="column index (may be negative) holding class labels; excluded from features")
    p.add_argument("--truth", help="separate CSV holding true labels")
    p.add_argument("--truth-column", type=int, default=-1)


def _add_common(p, randomized=True):
    if randomized:
        p.add_argument("--seed", type=int, default=None, help="master seed (printed if omitted)")
        p.add_argument("--threads", type=_positive_int, default=1, help="cap on worker threads")
        p.add_argument("--restarts", type=_positive_int, default=10, help="k-means restarts")
        p.add_argument("--max-iter", type=_positive_int, default=100)
        p.add_argument("--init", choices=("kmeanspp", "random_points"), default="kmeanspp")
    p.add_argument("-v", "--verbose", action="store_true", help="progress on stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bbclust", description="Bayesian bagged clustering")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="draw a synthetic benchmark dataset")
    p.add_argument("name", nargs="?", help="benchmark name (ds1..ds6)")
    p.add_argument("--spec-file", help="JSON recipe with component_sizes, centroids, covariance")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", help="data CSV path; labels go to <stem>_labels.csv")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("cluster", help="k-means, BagClust1 or BBC clustering")
    _add_input(p)
    p.add_argument("-k", "--k", type=_positive_int, required=True)
    p.add_argument("--method", choices=("kmeans", "bagclust1", "bbc"), default="bbc")
    p.add_argument("--s", type=_positive_float, default=1.0, help="prior variance scale")
    p.add_argument("--omega", type=_omega, default=0.5, help="prior confidence k/(k+n)")
    p.add_argument("--B", type=_positive_int, default=100, help="number of replicas")
    p.add_argument("--unweighted", action="store_true", help="ignore Dirichlet weights in replicas")
    p.add_argument("--dump-replicas", help="write every BBC replica to this CSV")
    p.add_argument("--out", required=True, help="output directory")
    _add_common(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("select-k", help="entropy-based choice of K")
    _add_input(p)
    p.add_argument("--k-range", type=_k_range, default=list(range(2, 7)))
    p.add_argument("--s-list", type=_s_list, default=[1.0])
    p.add_argument("--reference-s", type=_positive_float, default=None)
    p.add_argument("--omega", type=_omega, default=0.5)
    p.add_argument("--B", type=_positive_int, default=100)
    p.add_argument("--B-ref", type=_positive_int, default=50, help="gap statistic reference sets")
    p.add_argument("--no-baselines", action="store_true", help="skip silhouette and gap")
    p.add_argument("--out", required=True, help="output directory")
    _add_common(p)
    p.set_defaults(func=cmd_select_k)

    p = sub.add_parser("baseline", help="silhouette and gap statistic curves")
    _add_input(p)
    p.add_argument("--k-range", type=_k_range, default=list(range(2, 7)))
    p.add_argument("--B-ref", type=_positive_int, default=50)
    p.add_argument("--out", required=True, help="output directory")
    _add_common(p)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("simplex", help="2-D simplex coordinates of 3-cluster memberships")
    p.add_argument("membership", help="membership CSV (id,u_0,u_1,u_2)")
    p.add_argument("--out", required=True)
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_simplex)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(name)s: %(message)s",
        stream=sys.stderr,
    )
    if args.command == "generate" and not (args.name or args.spec_file):
        parser.error("generate needs a dataset name or --spec-file")
    out = Outputs()
    try:
        args.func(args, out)
    except UsageError as exc:
        out.rollback()
        print(f"bbclust: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - report and clean up
        out.rollback()
        print(f"bbclust: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
