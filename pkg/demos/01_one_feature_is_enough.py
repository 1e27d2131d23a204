"""One reduced feature vs. thirteen raw ones.

Occupancy slots are stacked into 13-sample windows. Each reducer squeezes a
window down to a single coordinate, and a heavy-tailed RBF SVM is trained on
that coordinate alone. Its error is compared with the SVM that sees all 13
raw samples.

Run:  python demos/01_one_feature_is_enough.py
"""
import numpy as np

from drsvm import KernelSpec
from drsvm.dataset import synth_generate, window
from drsvm.kpca import kpca_fit, kpca_transform
from drsvm.mvu import build_knn, choose_landmarks, embed, solve_lmvu
from drsvm.pca import pca_fit, pca_transform
from drsvm.pipeline import compute_rates
from drsvm.svm import TrainingSet, classify, from_svm_labels, to_svm_labels, train

# %% data: 2000 slots at -3 dB (low enough that errors are not all zero), a 200-slot training split and 600 test slots
data = synth_generate(2000, snr_db=-3, seed=1)
x = window(data, 13)
rng = np.random.default_rng(0)
order = rng.permutation(len(x))
tr, te = order[:200], order[200:800]
print(f"{len(x)} windows, busy fraction {data.busy_fraction():.3f}")


def fit_and_score(ytr, yte):
    model = train(TrainingSet(ytr, to_svm_labels(data.labels[tr])), KernelSpec.heavy_tailed_rbf())
    r = compute_rates(data.labels[te], from_svm_labels(classify(model, yte)))
    return r.total_error, len(model.alphas)


# %% baseline: all 13 raw samples
err, nsv = fit_and_score(x[tr], x[te])
print(f"raw N=13     total error {100 * err:6.3f}%  ({nsv} support vectors)")

# %% PCA, K=1
pca = pca_fit(x[tr], 1)
err, _ = fit_and_score(pca_transform(pca, x[tr]), pca_transform(pca, x[te]))
print(f"PCA K=1      total error {100 * err:6.3f}%  leading share {pca.spectrum[0] / pca.spectrum.sum():.3f}")

# %% kernel PCA (Gaussian, 2 sigma^2 = 5.5^2), K=1
kp = kpca_fit(x[tr], KernelSpec.gaussian_rbf(), 1)
err, _ = fit_and_score(kpca_transform(kp, x[tr]), kpca_transform(kp, x[te]))
print(f"KPCA K=1     total error {100 * err:6.3f}%  leading share {kp.spectrum[0] / kp.spectrum.sum():.3f}")

# %% landmark MVU: transductive, so train and test windows are embedded together
idx = np.concatenate([tr, te])
graph = build_knn(x[idx], 3, connect=True)
sol = solve_lmvu(graph, choose_landmarks(x[idx], 20, seed=0))
emb = embed(sol, 1)
y = emb.coords
err, _ = fit_and_score(y[: len(tr)], y[len(tr):])
print(f"LMVU K=1     total error {100 * err:6.3f}%  leading share {emb.shares()[0]:.3f}")
