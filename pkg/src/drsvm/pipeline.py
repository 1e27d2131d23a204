"""Repeated train/test experiments: raw SVM versus reduction + SVM.

One repetition draws a single train/test split and sweeps every requested
dimension on it:

* ``svm_raw``  -- window of ``N`` bins around the centre, SVM on the window.
* ``pca_svm``  -- 13-bin window, PCA fitted on the training rows, first
  ``K`` components fed to the SVM.
* ``kpca_svm`` -- as above with kernel PCA.
* ``lmvu_svm`` -- landmark MVU fitted jointly on train and test rows (the
  embedding has no out-of-sample map), first ``K`` coordinates to the SVM.
  Among ``landmark_groups`` fixed groups of landmark positions the one with
  the lowest total error at the smallest ``K`` is kept for the repetition.

Rates are averaged over repetitions in repetition order, so a run is
reproducible bit for bit given the master seed, regardless of how many
worker processes execute the repetitions.
"""
from __future__ import annotations

import csv
import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .dataset import SpectraMatrix, SplitSpec, WindowSpec, split, window
from .kernels import KernelSpec
from .kpca import kpca_fit, kpca_transform
from .mvu import build_knn, embed, landmark_set, solve_lmvu
from .pca import pca_fit, pca_transform
from .svm import DEFAULT_C, TrainingSet, classify, from_svm_labels, to_svm_labels, train

__all__ = [
    "METHODS",
    "ExperimentConfig",
    "RateTriple",
    "ExperimentReport",
    "compute_rates",
    "repetition_seed",
    "landmark_group_seed",
    "landmark_groups",
    "select_landmark_group",
    "eigen_share_report",
    "run_svm_raw",
    "run_dr_svm",
    "reduce_split",
    "run_experiment",
    "write_report",
]

METHODS = ("svm_raw", "pca_svm", "kpca_svm", "lmvu_svm")
DR_INPUT_DIM = 13
# fixed word standing in for the "landmarks" tag when deriving group seeds
_LANDMARK_TAG = int.from_bytes(b"landmarks"[:8], "big")


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of one experiment run.

    Defaults follow the published protocol: 50 repetitions of a 200/1800
    split, dimensions 1..13, heavy-tailed RBF SVM with ``gamma=a=b=1``,
    Gaussian KPCA with ``2 sigma^2 = 5.5^2``, LMVU with ``k=3`` neighbours,
    ``m=20`` landmarks and 10 landmark groups.
    """

    repetitions: int = 50
    train_count: int = 200
    test_count: int = 1800
    dims_raw: tuple = tuple(range(1, 14))
    dims_reduced: tuple = tuple(range(1, 14))
    methods: tuple = METHODS
    svm_kernel: KernelSpec = field(default_factory=KernelSpec.heavy_tailed_rbf)
    c_param: float = DEFAULT_C
    kpca_kernel: KernelSpec = field(default_factory=KernelSpec.gaussian_rbf)
    knn_k: int = 3
    landmarks: int = 20
    landmark_groups: int = 10
    seed: int = 0

    def __post_init__(self):
        for name in ("repetitions", "train_count", "test_count", "knn_k", "landmarks", "landmark_groups"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be at least 1")
        for name in ("dims_raw", "dims_reduced"):
            dims = tuple(int(d) for d in getattr(self, name))
            if not dims or any(not 1 <= d <= DR_INPUT_DIM for d in dims):
                raise ValueError(f"{name} must be non-empty with values in [1, {DR_INPUT_DIM}]")
            if len(set(dims)) != len(dims):
                raise ValueError(f"{name} has repeated values")
            object.__setattr__(self, name, dims)
        methods = tuple(self.methods)
        unknown = [m for m in methods if m not in METHODS]
        if unknown or not methods:
            raise ValueError(f"unknown methods {unknown}; choose from {', '.join(METHODS)}")
        # canonical order keeps reports independent of how methods were listed
        object.__setattr__(self, "methods", tuple(m for m in METHODS if m in methods))
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if not self.c_param > 0:
            raise ValueError("c_param must be positive")
        if "lmvu_svm" in methods and self.landmarks > self.train_count + self.test_count:
            raise ValueError("more landmarks than train + test rows")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["svm_kernel"] = str(self.svm_kernel)
        out["kpca_kernel"] = str(self.kpca_kernel)
        for key in ("dims_raw", "dims_reduced", "methods"):
            out[key] = list(out[key])
        return out

    def digest(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


class RateTriple(NamedTuple):
    false_alarm: float
    miss_detection: float
    total_error: float


@dataclass(frozen=True)
class _Counts:
    false_alarms: int
    misses: int
    idle: int
    busy: int

    @property
    def rates(self) -> RateTriple:
        n = self.idle + self.busy
        return RateTriple(
            self.false_alarms / self.idle,
            self.misses / self.busy,
            (self.false_alarms + self.misses) / n,
        )


def _count(true_labels, predicted) -> _Counts:
    t = np.asarray(true_labels).reshape(-1)
    p = np.asarray(predicted).reshape(-1)
    if t.shape != p.shape:
        raise ValueError("true and predicted label vectors differ in length")
    if not (np.all(np.isin(t, (0, 1))) and np.all(np.isin(p, (0, 1)))):
        raise ValueError("labels must be 0 (idle) or 1 (busy)")
    idle, busy = int(np.sum(t == 0)), int(np.sum(t == 1))
    if idle == 0 or busy == 0:
        raise ValueError("true labels must contain both idle and busy slots")
    return _Counts(int(np.sum((t == 0) & (p == 1))), int(np.sum((t == 1) & (p == 0))), idle, busy)


def compute_rates(true_labels, predicted) -> RateTriple:
    """False-alarm, miss-detection and total error rates.

    False alarm is idle classified busy, counted per idle slot; miss
    detection is busy classified idle, counted per busy slot; the total
    error counts both over all slots.
    """
    return _count(true_labels, predicted).rates


@dataclass
class ExperimentReport:
    """Mean rates per method and dimension plus leading-eigenvalue shares.

    ``rates[method]`` maps each dimension to the mean :class:`RateTriple`;
    ``per_repetition[method][dim]`` keeps the individual triples. ``shares``
    holds the normalized spectrum of each reduction method from the first
    repetition.
    """

    config: ExperimentConfig
    rates: dict
    per_repetition: dict
    shares: dict
    meta: dict

    def total_error(self, method: str, dim: int) -> float:
        return self.rates[method][dim].total_error


def repetition_seed(master: int, repetition: int) -> int:
    """Independent seed of one repetition derived from the master seed."""
    return int(np.random.SeedSequence([int(master), int(repetition)]).generate_state(1)[0])


def landmark_group_seed(master: int, group: int) -> int:
    return int(np.random.SeedSequence([int(master), _LANDMARK_TAG, int(group)]).generate_state(1)[0])


def landmark_groups(config: ExperimentConfig) -> list:
    """Landmark positions within the joint train+test row order.

    Drawn once from the master seed, so every repetition uses the same
    positions.
    """
    pool = config.train_count + config.test_count
    groups = []
    for g in range(config.landmark_groups):
        rng = np.random.default_rng(landmark_group_seed(config.seed, g))
        groups.append(np.sort(rng.choice(pool, size=config.landmarks, replace=False)))
    return groups


def eigen_share_report(spectrum) -> np.ndarray:
    """Spectrum normalized to unit sum after clamping negatives to zero."""
    s = np.maximum(np.asarray(spectrum, dtype=float).reshape(-1), 0.0)
    total = s.sum()
    if not total > 0:
        raise ValueError("spectrum has zero total; shares are undefined")
    return s / total


def _evaluate(config, train_x, train_l, test_x, test_l) -> _Counts:
    model = train(TrainingSet(train_x, to_svm_labels(train_l)), config.svm_kernel, config.c_param)
    predicted = from_svm_labels(classify(model, test_x))
    return _count(test_l, predicted)


def _split(config, data, repetition):
    seed = repetition_seed(config.seed, repetition)
    return split(data, SplitSpec(config.train_count, config.test_count, seed))


def run_svm_raw(config: ExperimentConfig, data: SpectraMatrix, repetition: int) -> dict:
    """Counts per window size ``N`` for one repetition."""
    tr, te = _split(config, data, repetition)
    out = {}
    for n in config.dims_raw:
        x = window(data, WindowSpec(n))
        out[n] = _evaluate(config, x[tr], data.labels[tr], x[te], data.labels[te])
    return out


def select_landmark_group(config, points, graph, labels, groups, k_dim, trace_prefix=None):
    """Embed with every landmark group and keep the best one at ``k_dim``.

    ``points`` holds the training rows followed by the test rows and
    ``labels`` their 0/1 labels. Returns ``(group_index, solution)``; ties go
    to the lowest group index.
    """
    t = config.train_count
    best = None
    for g, positions in enumerate(groups):
        trace = None if trace_prefix is None else f"{trace_prefix}_group{g:02d}.csv"
        sol = solve_lmvu(graph, landmark_set(points, positions), trace_path=trace)
        coords = embed(sol, k_dim).coords
        counts = _evaluate(config, coords[:t], labels[:t], coords[t:], labels[t:])
        errors = counts.false_alarms + counts.misses
        if best is None or errors < best[0]:
            best = (errors, g, sol)
    return best[1], best[2]


def reduce_split(config, data, method, train_idx, test_idx, groups=None, trace_prefix=None):
    """Reduced training and test features of one split.

    Returns ``(train_features, test_features, spectrum, info)`` with
    ``max(config.dims_reduced)`` columns; ``spectrum`` is the full spectrum
    of the fitted reduction.
    """
    x = window(data, WindowSpec(DR_INPUT_DIM))
    tr, te = train_idx, test_idx
    k_max = max(config.dims_reduced)
    info = {}
    if method == "pca_svm":
        model = pca_fit(x[tr], k_max)
        ytr, yte = pca_transform(model, x[tr]), pca_transform(model, x[te])
        spectrum = model.spectrum
    elif method == "kpca_svm":
        model = kpca_fit(x[tr], config.kpca_kernel, k_max)
        ytr, yte = kpca_transform(model, x[tr]), kpca_transform(model, x[te])
        spectrum = model.spectrum
    elif method == "lmvu_svm":
        if groups is None:
            groups = landmark_groups(config)
        if len(tr) + len(te) != config.train_count + config.test_count:
            raise ValueError("landmark groups are positions in a train+test set of the configured size")
        points = np.vstack([x[tr], x[te]])
        labels = np.concatenate([data.labels[tr], data.labels[te]])
        graph = build_knn(points, config.knn_k, connect=True)
        group, sol = select_landmark_group(
            config, points, graph, labels, groups, min(config.dims_reduced), trace_prefix
        )
        emb = embed(sol, k_max)
        ytr, yte = emb.coords[: len(tr)], emb.coords[len(tr) :]
        spectrum = emb.spectrum
        info = {"landmark_group": group, "bridges": graph.n_bridges}
    else:
        raise ValueError(f"not a reduction method: {method!r}")
    return ytr, yte, spectrum, info


def run_dr_svm(config: ExperimentConfig, data: SpectraMatrix, method: str, repetition: int, groups=None, trace_prefix=None):
    """Counts per reduced dimension ``K`` for one repetition.

    Returns ``(counts, spectrum, info)`` where ``spectrum`` is the full
    eigenvalue spectrum of the fitted reduction.
    """
    tr, te = _split(config, data, repetition)
    ytr, yte, spectrum, info = reduce_split(config, data, method, tr, te, groups, trace_prefix)
    out = {}
    for k in config.dims_reduced:
        kk = min(k, ytr.shape[1])
        out[k] = _evaluate(config, ytr[:, :kk], data.labels[tr], yte[:, :kk], data.labels[te])
    return out, spectrum, info


def _repetition(config: ExperimentConfig, data: SpectraMatrix, repetition: int, groups, trace_dir=None):
    counts, spectra, info = {}, {}, {}
    for method in config.methods:
        if method == "svm_raw":
            counts[method] = run_svm_raw(config, data, repetition)
        else:
            prefix = None
            if trace_dir is not None and method == "lmvu_svm":
                prefix = str(Path(trace_dir) / f"lmvu_rep{repetition:03d}")
            counts[method], spectra[method], info[method] = run_dr_svm(
                config, data, method, repetition, groups, prefix
            )
    return counts, spectra, info


def _repetition_star(args):
    return _repetition(*args)


def _check_data(config, data):
    need = config.train_count + config.test_count
    if len(data) < need:
        raise ValueError(
            f"dataset has {len(data)} slots but train + test needs {need} "
            f"({config.train_count} + {config.test_count})"
        )


def run_experiment(
    config: ExperimentConfig,
    data: SpectraMatrix,
    jobs: int | None = None,
    progress=None,
    trace_dir=None,
) -> ExperimentReport:
    """Run every repetition and average the rates.

    Parameters
    ----------
    jobs : int, optional
        Worker processes; default is the number of repetitions capped at
        the CPU count. Results do not depend on it.
    progress : callable, optional
        Called as ``progress(done, total)`` after each repetition.
    trace_dir : path-like, optional
        Write the LMVU solver diagnostics of every solve into this directory.
    """
    _check_data(config, data)
    groups = landmark_groups(config) if "lmvu_svm" in config.methods else None
    reps = config.repetitions
    if jobs is None:
        jobs = min(reps, os.cpu_count() or 1)
    jobs = max(1, int(jobs))
    tasks = [(config, data, r, groups, trace_dir) for r in range(reps)]
    results = []
    if jobs == 1:
        for r, task in enumerate(tasks):
            results.append(_repetition_star(task))
            if progress:
                progress(r + 1, reps)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            # map yields in submission order, which fixes the merge order
            for r, res in enumerate(pool.map(_repetition_star, tasks)):
                results.append(res)
                if progress:
                    progress(r + 1, reps)

    rates, per_rep = {}, {}
    for method in config.methods:
        dims = config.dims_raw if method == "svm_raw" else config.dims_reduced
        rates[method], per_rep[method] = {}, {}
        for d in dims:
            triples = [res[0][method][d].rates for res in results]
            per_rep[method][d] = triples
            arr = np.array(triples)
            rates[method][d] = RateTriple(*(float(v) for v in arr.sum(axis=0) / reps))
    shares = {m: eigen_share_report(s) for m, s in results[0][1].items()}
    meta = {
        "config": config.to_dict(),
        "config_sha256": config.digest(),
        "repetition_seeds": [repetition_seed(config.seed, r) for r in range(reps)],
        "dataset_slots": len(data),
        "dataset_busy_fraction": data.busy_fraction(),
    }
    if groups is not None:
        meta["landmark_group_seeds"] = [landmark_group_seed(config.seed, g) for g in range(config.landmark_groups)]
        meta["landmark_groups"] = [g.tolist() for g in groups]
        meta["selected_landmark_group"] = [res[2]["lmvu_svm"]["landmark_group"] for res in results]
        meta["knn_bridges"] = [res[2]["lmvu_svm"]["bridges"] for res in results]
    return ExperimentReport(config, rates, per_rep, shares, meta)


def write_report(report: ExperimentReport, out_dir, share_components: int | None = None) -> dict:
    """Write ``report.csv``, ``eigenshares.csv`` and ``meta.json``.

    ``eigenshares.csv`` lists the leading ``share_components`` shares of each
    reduction method (default: the largest reduced dimension). Returns the
    paths written.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"report": out / "report.csv", "eigenshares": out / "eigenshares.csv", "meta": out / "meta.json"}
    with open(paths["report"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "dim", "false_alarm", "miss_detection", "total_error"])
        for method, by_dim in report.rates.items():
            for d, r in by_dim.items():
                w.writerow([method, d] + [repr(float(v)) for v in r])
    n_share = share_components or max(report.config.dims_reduced)
    with open(paths["eigenshares"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "component", "share"])
        for method, s in report.shares.items():
            for j, v in enumerate(s[:n_share], start=1):
                w.writerow([method, j, repr(float(v))])
    paths["meta"].write_text(json.dumps(report.meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return paths
