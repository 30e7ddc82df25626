"""Command-line interface: estimate on user data, simulate, and bench.

Exit codes: 0 on success (including per-estimator failures, which become
rows with converged=false), 1 on I/O or validation errors, 2 on bad
arguments (argparse's convention).
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import replace

import numpy as np

from . import sim
from .errors import DataError
from .linalg import DesignMatrix, standardize, svd_thin
from .matrixio import read_design, read_vector, write_json, write_rows_csv

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hdridge",
        description=(
            "Variance components, ridge penalty, and heritability for "
            "high-dimensional linear, mixed, Bayesian, and generalized "
            "linear ridge models."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="fit estimators to a data set on disk")
    est.add_argument("--x", required=True, help="design matrix (CSV, or binary .bin)")
    est.add_argument("--y", required=True, help="response vector (single CSV column)")
    est.add_argument(
        "--estimators",
        default="mml",
        help="comma-separated names (mml, mom, gcv, cv, hilmm, basic, pcr[:r], "
        "bayes_eb, bayes_fixed[:nu]; with a GLM family: glm_mml, glm_cv)",
    )
    est.add_argument(
        "--family",
        default="gaussian",
        help="observation family: gaussian, poisson, or binomial:N",
    )
    est.add_argument("--seed", type=int, default=0, help="seed for fold permutations")
    est.add_argument("--k-folds", type=int, default=10, help="folds for cv estimators")
    est.add_argument(
        "--no-standardize",
        action="store_true",
        help="use the columns of --x as-is instead of standardizing them",
    )
    est.add_argument("--out", default="-", help="output path ('-' = stdout)")
    est.add_argument("--format", choices=("csv", "json"), default="csv")

    simp = sub.add_parser("simulate", help="run a seeded replicate comparison")
    simp.add_argument("--config", required=True, help="TOML or JSON config file")
    simp.add_argument("--replicates", type=int, default=None, help="override run.replicates")
    simp.add_argument("--seed", type=int, default=None, help="override run.base_seed")
    simp.add_argument("--threads", type=int, default=1, help="thread pool size")
    simp.add_argument(
        "--truncate-20x",
        action="store_true",
        help="cap exported estimates at 20x the true value (flagging the rows)",
    )
    simp.add_argument("--out", default="-", help="output path ('-' = stdout)")
    simp.add_argument("--format", choices=("csv", "json"), default="csv")

    ben = sub.add_parser("bench", help="time estimators on synthetic data")
    ben.add_argument(
        "--sizes",
        default="100x1000,100x10000,100x100000,500x1000,500x10000,500x100000",
        help="comma-separated n x p pairs, e.g. 100x1000,500x10000",
    )
    ben.add_argument("--estimators", default="mml,mom", help="comma-separated names")
    ben.add_argument("--seed", type=int, default=0)
    ben.add_argument("--out", default="-", help="output path ('-' = stdout)")
    ben.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def _parse_estimator_list(spec: str) -> list[str]:
    names = [s.strip() for s in spec.split(",") if s.strip()]
    if not names:
        raise DataError("no estimator names given")
    return names


def _family_kind(family: str) -> tuple[str, int]:
    base, _, arg = family.partition(":")
    if base == "gaussian":
        return "linear", 1
    if base == "poisson":
        return "poisson", 1
    if base == "binomial":
        if not arg:
            raise DataError("binomial family needs a trial count, e.g. binomial:5")
        try:
            trials = int(arg)
        except ValueError:
            raise DataError(f"binomial trial count must be an integer, got {arg!r}") from None
        if trials < 1:
            raise DataError(f"binomial trial count must be >= 1, got {trials}")
        return "binomial", trials
    raise DataError(f"unknown family {family!r}; valid: gaussian, poisson, binomial:N")


def _emit_rows(reports, out: str, fmt: str, extra: dict | None = None) -> None:
    rows = [r.to_row() for r in reports]
    if fmt == "csv":
        write_rows_csv(out, rows)
    else:
        payload = {"rows": rows}
        if extra:
            payload.update(extra)
        write_json(out, payload)


def _cmd_estimate(args) -> int:
    X_raw = read_design(args.x)
    y = read_vector(args.y)
    if y.shape[0] != X_raw.shape[0]:
        raise DataError(
            f"row mismatch: --x has {X_raw.shape[0]} rows but --y has {y.shape[0]}"
        )
    if args.no_standardize:
        X = DesignMatrix(values=np.ascontiguousarray(X_raw, dtype=np.float64), standardized=False)
    else:
        X = standardize(X_raw)
    family_kind, trials = _family_kind(args.family)
    names = sim.normalize_estimators(_parse_estimator_list(args.estimators), family_kind)
    reports = sim.fit_estimators(
        names,
        X,
        y,
        family_kind=family_kind,
        k_folds=args.k_folds,
        seed=args.seed,
        trials=trials,
    )
    reports = [r.with_context(seed=args.seed, replicate=0) for r in reports]
    _emit_rows(reports, args.out, args.format)
    return 0


def _cmd_simulate(args) -> int:
    config = sim.load_config(args.config)
    if args.replicates is not None:
        if args.replicates < 1:
            raise DataError(f"--replicates must be >= 1, got {args.replicates}")
        config = replace(config, replicates=args.replicates)
    if args.seed is not None:
        if args.seed < 0:
            raise DataError(f"--seed must be >= 0, got {args.seed}")
        config = replace(config, base_seed=args.seed)
    if args.threads < 1:
        raise DataError(f"--threads must be >= 1, got {args.threads}")
    result = sim.run_comparison(config, threads=args.threads)
    rows = result.rows
    if args.truncate_20x:
        rows = sim.truncate_rows(rows, result.truth)
    _emit_rows(rows, args.out, args.format, extra={"summary": result.summary, "truth": result.truth})
    if args.out != "-":
        _print_summary(result.summary)
    return 0


def _print_summary(summary: dict) -> None:
    for method in sorted(summary):
        block = summary[method]
        parts = [f"{method}: {block['n_rows']} rows, {block['n_failed']} failed"]
        for q in ("sigma2", "tau2", "lambda", "h2"):
            if q in block:
                stats = block[q]
                piece = f"{q} median {stats['median']:.6g} iqr {stats['iqr']:.6g}"
                if "frac_gt_20x" in stats:
                    piece += f" frac>20x {stats['frac_gt_20x']:.3f}"
                parts.append(piece)
        print("  ".join(parts))


def _cmd_bench(args) -> int:
    sizes = []
    for chunk in args.sizes.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            n_str, p_str = chunk.lower().split("x")
            sizes.append((int(n_str), int(p_str)))
        except ValueError:
            raise DataError(f"bad --sizes entry {chunk!r}; expected NxP like 100x1000") from None
    if not sizes:
        raise DataError("no sizes given")
    names = sim.normalize_estimators(_parse_estimator_list(args.estimators), "linear")
    rows = []
    for n, p in sizes:
        config = sim.SimConfig(
            n=n,
            p=p,
            effects=sim.EffectPrior(kind="gaussian", tau2=0.01),
            errors=sim.ErrorModel(sigma2=10.0),
            base_seed=args.seed,
        )
        seed, X, _, y, _ = sim._replicate_data(config, 0)
        for name in names:
            # Isolated end-to-end timing: every estimator pays for its own
            # factorization here, unlike the shared-SVD simulate path.
            t0 = time.perf_counter()
            reports = sim.fit_estimators(
                [name], X, y, k_folds=config.k_folds, seed=seed
            )
            wall = time.perf_counter() - t0
            rep = replace(reports[0], wall_time_s=wall).with_context(seed=seed, replicate=0)
            rep = replace(rep, flags=rep.flags + (f"n={n}", f"p={p}"))
            rows.append(rep)
            print(f"bench {name} n={n} p={p}: {wall:.3f}s", file=sys.stderr)
    _emit_rows(rows, args.out, args.format)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "estimate":
            return _cmd_estimate(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "bench":
            return _cmd_bench(args)
        parser.error(f"unknown command {args.command!r}")
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
