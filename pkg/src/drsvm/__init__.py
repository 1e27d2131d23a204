"""Dimensionality reduction (PCA, kernel PCA, landmark MVU) followed by
kernel SVM classification of spectrum-occupancy slot data."""

__version__ = "0.1.0"

from .dataset import (
    SlotSpectrum,
    SpectraMatrix,
    SplitSpec,
    WindowSpec,
    load_csv,
    save_csv,
    split,
    synth_generate,
    window,
)
from .errors import ConvergenceError
from .kernels import KernelSpec, center_kernel, cross_kernel, kernel_eval, kernel_matrix
from .kpca import KpcaModel, kpca_fit, kpca_transform
from .linalg import EigenDecomposition, covariance, eig_sym, psd_project
from .mvu import (
    GramSolution,
    LandmarkSet,
    MvuEmbedding,
    NeighborGraph,
    build_knn,
    choose_landmarks,
    embed,
    landmark_set,
    solve_lmvu,
    solve_mvu,
)
from .pca import PcaModel, pca_choose_k, pca_fit, pca_transform
from .pipeline import (
    ExperimentConfig,
    ExperimentReport,
    RateTriple,
    compute_rates,
    run_experiment,
    write_report,
)
from .svm import SvmModel, TrainingSet, classify, decision, load_model, save_model, train

__all__ = [name for name in dir() if not name.startswith("_")]
