import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from drsvm.kernels import KernelSpec, center_kernel, kernel_matrix
from drsvm.kpca import kpca_fit, kpca_transform
from drsvm.pca import pca_fit, pca_transform

from strategies import seeded_normal

GAUSS = KernelSpec.gaussian_rbf(1.5)


def _dist(y):
    return np.linalg.norm(y[:, None] - y[None], axis=2)


class TestFit:
    def test_linear_kernel_matches_pca(self, rng):
        x = rng.normal(size=(50, 5)) * [3, 2, 1, 0.5, 0.2]
        for k in (1, 3, 5):
            yk = kpca_transform(kpca_fit(x, KernelSpec.polynomial(1), k), x)
            yp = pca_transform(pca_fit(x, k), x)
            assert np.max(np.abs(_dist(yk) - _dist(yp))) <= 1e-6

    def test_identical_points_degenerate(self):
        with pytest.raises(ValueError, match="degenerate feature-space variance"):
            kpca_fit([[1.0, 2.0], [1.0, 2.0]], GAUSS, 1)

    def test_spectrum_non_negative(self, rng):
        model = kpca_fit(rng.normal(size=(30, 4)), GAUSS, 3)
        assert model.spectrum.min() >= -1e-8

    def test_truncation_warns(self, rng):
        x = rng.normal(size=(10, 1))
        with pytest.warns(RuntimeWarning, match="truncating"):
            model = kpca_fit(x, KernelSpec.polynomial(1), 3)
        assert model.k_dim == 1

    @pytest.mark.parametrize("k", [0, 11])
    def test_k_out_of_range(self, rng, k):
        with pytest.raises(ValueError):
            kpca_fit(rng.normal(size=(10, 2)), GAUSS, k)


class TestTransform:
    def test_training_points_reproduce_fit(self, rng):
        x = rng.normal(size=(25, 3))
        model = kpca_fit(x, GAUSS, 4)
        kc = center_kernel(kernel_matrix(GAUSS, x))
        w, v = np.linalg.eigh(kc)
        expected = v[:, ::-1][:, :4] * np.sqrt(w[::-1][:4])
        got = kpca_transform(model, x)
        np.testing.assert_allclose(np.abs(got), np.abs(expected), atol=1e-8)

    def test_duplicate_row(self, rng):
        x = rng.normal(size=(12, 3))
        model = kpca_fit(x, GAUSS, 3)
        np.testing.assert_allclose(kpca_transform(model, x[5])[0], kpca_transform(model, x)[5], atol=1e-8)

    def test_dimension_mismatch(self, rng):
        model = kpca_fit(rng.normal(size=(8, 3)), GAUSS, 2)
        with pytest.raises(ValueError):
            kpca_transform(model, np.zeros((1, 2)))


# ---------------------------------------------------------------- properties

def _fit_quiet(x, kernel, k):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return kpca_fit(x, kernel, k)


@given(seeded_normal(min_rows=3, max_rows=25), st.floats(0.3, 5.0), st.integers(1, 4))
def test_normalization_identity(x, sigma, k):
    model = _fit_quiet(x, KernelSpec.gaussian_rbf(sigma), min(k, len(x)))
    lam = model.spectrum[: model.k_dim]
    np.testing.assert_allclose(lam * np.sum(model.alphas**2, axis=0), 1.0, atol=1e-8)


@given(seeded_normal(min_rows=3, max_rows=25), st.floats(0.3, 5.0), st.integers(1, 4))
def test_variance_and_mean(x, sigma, k):
    model = _fit_quiet(x, KernelSpec.gaussian_rbf(sigma), min(k, len(x)))
    y = kpca_transform(model, x)
    lam = model.spectrum[: model.k_dim]
    np.testing.assert_allclose(y.var(axis=0), lam / len(x), rtol=1e-6)
    assert np.abs(y.mean(axis=0)).max() <= 1e-8


@given(seeded_normal(min_rows=4, max_rows=20), st.integers(1, 3))
def test_nested_components(x, k):
    kern = KernelSpec.gaussian_rbf(2.0)
    small, big = _fit_quiet(x, kern, k), _fit_quiet(x, kern, k + 1)
    if big.k_dim == k + 1:
        np.testing.assert_array_equal(kpca_transform(big, x)[:, :k], kpca_transform(small, x))
