"""Command-line front end.

Subcommands::

    drsvm generate    synthetic slot spectra -> dataset CSV
    drsvm reduce      dataset -> reduced feature CSV for one train/test split
    drsvm train       feature CSV -> SVM model file
    drsvm evaluate    model + feature CSV -> false_alarm,miss_detection,total_error
    drsvm experiment  full repeated protocol -> report.csv, eigenshares.csv, meta.json

Exit codes: 0 on success, 1 on runtime failure, 2 on usage errors.
"""
from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import load_csv, save_csv, synth_generate, window
from .errors import ConvergenceError
from .kernels import KernelSpec
from .pipeline import (
    DR_INPUT_DIM,
    METHODS,
    ExperimentConfig,
    _split,
    compute_rates,
    reduce_split,
    run_experiment,
    write_report,
)
from .svm import DEFAULT_C, TrainingSet, classify, from_svm_labels, load_model, save_model, to_svm_labels, train

__all__ = ["main", "build_parser", "save_features", "load_features"]

REDUCE_METHODS = {"raw": "svm_raw", "pca": "pca_svm", "kpca": "kpca_svm", "lmvu": "lmvu_svm"}
FEATURE_PREFIX = ["slot", "label", "role"]


# -- argument types ---------------------------------------------------------

def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {value}")
    return value


def _seed(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError("seed must be non-negative")
    return value


def _fraction(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"must lie strictly between 0 and 1, got {value}")
    return value


def _positive_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {value}")
    return value


def _kernel(text):
    try:
        return KernelSpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _dims(text):
    try:
        if "-" in text and "," not in text:
            lo, hi = (int(v) for v in text.split("-"))
            dims = list(range(lo, hi + 1))
        else:
            dims = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a list like 1,2,5 or a range like 1-13, got {text!r}") from None
    if not dims or any(not 1 <= d <= DR_INPUT_DIM for d in dims):
        raise argparse.ArgumentTypeError(f"dimensions must lie in [1, {DR_INPUT_DIM}]")
    return tuple(dims)


def _methods(text):
    if text.strip() == "all":
        return METHODS
    names = tuple(v.strip() for v in text.split(",") if v.strip())
    bad = [n for n in names if n not in METHODS]
    if bad or not names:
        raise argparse.ArgumentTypeError(f"unknown method(s) {bad}; choose from all, {', '.join(METHODS)}")
    return names


# -- feature files ----------------------------------------------------------

def save_features(path, slots, labels, roles, features) -> None:
    """Write ``slot,label,role,y1..yK`` rows (role is ``train`` or ``test``)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    features = np.atleast_2d(features)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FEATURE_PREFIX + [f"y{j}" for j in range(1, features.shape[1] + 1)])
        for s, l, r, row in zip(slots, labels, roles, features):
            w.writerow([int(s), int(l), r] + [format(v, ".17g") for v in row])


def load_features(path):
    """Read a feature CSV; returns ``(slots, labels, roles, features)``."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows or rows[0][:3] != FEATURE_PREFIX:
        raise ValueError(f"{path}: not a feature file (header must start with {','.join(FEATURE_PREFIX)})")
    width = len(rows[0])
    if width < 4:
        raise ValueError(f"{path}: feature file has no feature columns")
    slots, labels, roles, feats = [], [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise ValueError(f"{path}: line {lineno}: expected {width} columns, got {len(row)}")
        try:
            slots.append(int(row[0]))
            labels.append(int(row[1]))
            feats.append([float(v) for v in row[3:]])
        except ValueError as exc:
            raise ValueError(f"{path}: line {lineno}: non-numeric cell ({exc})") from None
        if row[2] not in ("train", "test"):
            raise ValueError(f"{path}: line {lineno}: role must be train or test, got {row[2]!r}")
        roles.append(row[2])
    feats = np.array(feats, dtype=float).reshape(len(feats), width - 3)
    return np.array(slots, dtype=np.int64), np.array(labels, dtype=np.int64), np.array(roles), feats


# -- subcommands ------------------------------------------------------------

def cmd_generate(args) -> int:
    data = synth_generate(args.slots, args.snr_db, args.duty_cycle, args.seed, noise_sigma=args.noise_sigma)
    save_csv(data, args.out)
    print(f"slots={len(data)} busy_fraction={data.busy_fraction():.6f}")
    return 0


def _config_from(args, **overrides) -> ExperimentConfig:
    kwargs = dict(
        train_count=args.train,
        test_count=args.test,
        svm_kernel=args.svm_kernel,
        c_param=args.c,
        kpca_kernel=args.kpca_kernel,
        knn_k=args.knn_k,
        landmarks=args.landmarks,
        landmark_groups=args.landmark_groups,
        seed=args.seed,
    )
    kwargs.update(overrides)
    return ExperimentConfig(**kwargs)


def cmd_reduce(args) -> int:
    data = load_csv(args.data)
    method = REDUCE_METHODS[args.method]
    # sweeping 1..K keeps the LMVU landmark-group choice identical to the pipeline (made at K=1)
    config = _config_from(
        args, repetitions=args.rep + 1, dims_reduced=tuple(range(1, args.dim + 1)), dims_raw=(args.dim,), methods=(method,)
    )
    if len(data) < config.train_count + config.test_count:
        raise ValueError(
            f"dataset has {len(data)} slots but train + test needs {config.train_count + config.test_count}"
        )
    tr, te = _split(config, data, args.rep)
    if method == "svm_raw":
        x = window(data, args.dim)
        ytr, yte = x[tr], x[te]
    else:
        ytr, yte, _, info = reduce_split(config, data, method, tr, te)
        if "landmark_group" in info:
            print(f"landmark_group={info['landmark_group']}")
    idx = np.concatenate([tr, te])
    roles = ["train"] * len(tr) + ["test"] * len(te)
    save_features(args.out, data.slot_index[idx], data.labels[idx], roles, np.vstack([ytr, yte])[:, : args.dim])
    print(f"rows={len(idx)} dim={args.dim} method={args.method}")
    return 0


def cmd_train(args) -> int:
    _, labels, roles, feats = load_features(args.features)
    use = roles == "train" if args.role == "train" else np.ones(len(roles), dtype=bool)
    model = train(TrainingSet(feats[use], to_svm_labels(labels[use])), args.kernel, args.c)
    save_model(model, args.out)
    print(f"support_vectors={len(model.alphas)} bias={model.bias:.10g} iterations={model.iterations}")
    return 0


def cmd_evaluate(args) -> int:
    model = load_model(args.model)
    _, labels, roles, feats = load_features(args.features)
    use = roles == "test" if args.role == "test" else np.ones(len(roles), dtype=bool)
    if feats.shape[1] != model.dim:
        raise ValueError(f"model expects {model.dim} features but {args.features} has {feats.shape[1]}")
    predicted = from_svm_labels(classify(model, feats[use]))
    r = compute_rates(labels[use], predicted)
    print(f"{r.false_alarm!r},{r.miss_detection!r},{r.total_error!r}")
    return 0


def cmd_experiment(args) -> int:
    if args.data is not None:
        data = load_csv(args.data)
    else:
        data = synth_generate(args.slots, args.snr_db, 0.5, args.seed, noise_sigma=args.noise_sigma)
    config = _config_from(
        args,
        repetitions=args.reps,
        methods=args.methods,
        dims_raw=args.dims_raw,
        dims_reduced=args.dims_reduced,
    )
    progress = None
    if not args.quiet:
        def progress(done, total):
            print(f"repetition {done}/{total}", file=sys.stderr, flush=True)
    report = run_experiment(config, data, jobs=args.jobs, progress=progress, trace_dir=args.solver_trace)
    paths = write_report(report, args.out_dir)
    for method, by_dim in report.rates.items():
        best = min(by_dim, key=lambda d: by_dim[d].total_error)
        print(f"{method}: best dim {best}, mean total error {100 * by_dim[best].total_error:.4f}%")
    print(f"wrote {paths['report']}, {paths['eigenshares']}, {paths['meta']}")
    return 0


# -- parser -----------------------------------------------------------------

def _add_protocol_flags(p, with_split=True):
    if with_split:
        p.add_argument("--train", type=_positive_int, default=200, help="training slots per split (default 200)")
        p.add_argument("--test", type=_positive_int, default=1800, help="test slots per split (default 1800)")
    p.add_argument("--seed", type=_seed, default=0, help="master seed (default 0)")
    p.add_argument(
        "--svm-kernel", type=_kernel, default=KernelSpec.heavy_tailed_rbf(),
        help="SVM kernel, e.g. 'heavy_tailed_rbf:gamma=1,a=1,b=1' (default)",
    )
    p.add_argument("--c", type=_positive_float, default=DEFAULT_C, help=f"SVM box constraint C (default {DEFAULT_C:g})")
    p.add_argument(
        "--kpca-kernel", type=_kernel, default=KernelSpec.gaussian_rbf(),
        help="kernel PCA kernel (default gaussian_rbf with 2 sigma^2 = 5.5^2)",
    )
    p.add_argument("--knn-k", type=_positive_int, default=3, help="LMVU neighbour count (default 3)")
    p.add_argument("--landmarks", type=_positive_int, default=20, help="LMVU landmark count (default 20)")
    p.add_argument("--landmark-groups", type=_positive_int, default=10, help="LMVU landmark groups (default 10)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="drsvm",
        description="Dimensionality reduction + SVM spectrum-occupancy experiments.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    p = sub.add_parser("generate", help="write a synthetic dataset CSV", description="Generate synthetic slot spectra.")
    p.add_argument("--slots", type=_positive_int, default=6900, help="number of slots (default 6900)")
    p.add_argument("--snr-db", type=float, default=25.0, help="busy-slot SNR in dB (default 25)")
    p.add_argument("--duty-cycle", type=_fraction, default=0.5, help="busy probability in (0, 1) (default 0.5)")
    p.add_argument("--noise-sigma", type=_positive_float, default=0.5, help="noise standard deviation (default 0.5)")
    p.add_argument("--seed", type=_seed, default=0, help="generator seed (default 0)")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser(
        "reduce", help="reduce one train/test split to K features",
        description="Draw the split of one repetition and write reduced features with train/test roles.",
    )
    p.add_argument("--data", required=True, help="dataset CSV")
    p.add_argument("--method", choices=sorted(REDUCE_METHODS), required=True, help="raw window or reduction")
    p.add_argument("--dim", type=_positive_int, required=True, help="window size N (raw) or reduced dimension K")
    p.add_argument("--rep", type=_seed, default=0, help="repetition index whose split is used (default 0)")
    p.add_argument("--out", required=True, help="output feature CSV")
    _add_protocol_flags(p)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("train", help="train an SVM on a feature CSV", description="Train an SVM on the train rows of a feature CSV.")
    p.add_argument("--features", required=True, help="feature CSV written by 'reduce'")
    p.add_argument("--kernel", type=_kernel, default=KernelSpec.heavy_tailed_rbf(), help="SVM kernel spec")
    p.add_argument("--c", type=_positive_float, default=DEFAULT_C, help=f"box constraint C (default {DEFAULT_C:g})")
    p.add_argument("--role", choices=["train", "all"], default="train", help="rows to train on (default train)")
    p.add_argument("--out", required=True, help="output model file")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser(
        "evaluate", help="evaluate a model on a feature CSV",
        description="Print false_alarm,miss_detection,total_error as one CSV line.",
    )
    p.add_argument("--model", required=True, help="model file written by 'train'")
    p.add_argument("--features", required=True, help="feature CSV")
    p.add_argument("--role", choices=["test", "all"], default="test", help="rows to evaluate (default test)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser(
        "experiment", help="run the repeated experiment protocol",
        description="Run all repetitions and write report.csv, eigenshares.csv and meta.json. "
        "Without --data a synthetic dataset is generated from --seed.",
    )
    p.add_argument("--data", help="dataset CSV (default: synthetic, see --slots/--snr-db)")
    p.add_argument("--slots", type=_positive_int, default=6900, help="synthetic slots when --data is absent (default 6900)")
    p.add_argument("--snr-db", type=float, default=25.0, help="synthetic SNR when --data is absent (default 25)")
    p.add_argument("--noise-sigma", type=_positive_float, default=0.5, help="synthetic noise level (default 0.5)")
    p.add_argument("--methods", type=_methods, default=METHODS, help="comma list or 'all' (default all)")
    p.add_argument("--reps", type=_positive_int, default=50, help="repetitions (default 50)")
    p.add_argument("--dims-raw", type=_dims, default=tuple(range(1, 14)), help="raw window sizes (default 1-13)")
    p.add_argument("--dims-reduced", type=_dims, default=tuple(range(1, 14)), help="reduced dimensions (default 1-13)")
    p.add_argument("--out-dir", default="report", help="output directory (default ./report)")
    p.add_argument("--jobs", type=_positive_int, default=None, help="worker processes (default min(reps, CPUs))")
    p.add_argument("--solver-trace", metavar="DIR", default=None, help="write LMVU solver diagnostics CSVs into DIR")
    p.add_argument("--quiet", action="store_true", help="no progress output")
    _add_protocol_flags(p)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on usage errors
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError, ConvergenceError) as exc:
        print(f"drsvm {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
