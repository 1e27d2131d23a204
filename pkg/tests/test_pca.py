import numpy as np
import pytest
from hypothesis import given, strategies as st

from drsvm.pca import pca_choose_k, pca_fit, pca_transform

from strategies import sample_sets, seeded_normal


class TestFit:
    def test_two_point_line(self):
        model = pca_fit([[1, 1], [-1, -1]], 1)
        np.testing.assert_allclose(model.spectrum, [2, 0], atol=1e-12)
        np.testing.assert_allclose(np.abs(model.basis[:, 0]), [2**-0.5] * 2, atol=1e-12)

    def test_isotropic_spectrum(self, rng):
        model = pca_fit(rng.normal(size=(20000, 2)))
        np.testing.assert_allclose(model.spectrum, [1, 1], rtol=0.05)

    def test_full_rank_is_isometry(self, rng):
        x = rng.normal(size=(15, 4))
        y = pca_transform(pca_fit(x, 4), x)
        xc = x - x.mean(axis=0)
        d = np.linalg.norm(xc[:, None] - xc[None], axis=2)
        dy = np.linalg.norm(y[:, None] - y[None], axis=2)
        np.testing.assert_allclose(dy, d, atol=1e-8)

    @pytest.mark.parametrize("k", [0, 3])
    def test_k_out_of_range(self, k):
        with pytest.raises(ValueError):
            pca_fit(np.zeros((4, 2)), k)

    def test_zero_variance(self):
        model = pca_fit(np.ones((5, 3)), 2)
        np.testing.assert_array_equal(model.spectrum, 0)
        np.testing.assert_array_equal(pca_transform(model, np.ones((2, 3))), 0)


class TestTransform:
    def test_mean_maps_to_zero(self, rng):
        x = rng.normal(size=(10, 3))
        model = pca_fit(x, 2)
        np.testing.assert_allclose(pca_transform(model, model.mean), np.zeros((1, 2)), atol=1e-15)

    def test_two_point_projection(self):
        model = pca_fit([[1, 1], [-1, -1]], 1)
        assert abs(pca_transform(model, [1, 1])[0, 0]) == pytest.approx(np.sqrt(2))

    def test_test_rows_use_training_mean(self, rng):
        x = rng.normal(size=(10, 3))
        model = pca_fit(x, 3)
        z = rng.normal(size=(4, 3))
        np.testing.assert_allclose(pca_transform(model, z), (z - x.mean(axis=0)) @ model.basis)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            pca_transform(pca_fit(np.eye(3), 1), [1.0, 2.0])


class TestChooseK:
    @pytest.mark.parametrize(
        "spectrum, threshold, k",
        [
            ([2, 0], 0.95, 1),
            ([1, 1, 1, 1], 0.70, 3),
            ([1, 1, 1, 1], 0.75, 4),  # strict inequality: 3/4 is not > 0.75
            ([0.84, 0.08, 0.05, 0.03], 0.80, 1),
            ([0, 0, 0], 0.9, 1),
        ],
    )
    def test_examples(self, spectrum, threshold, k):
        assert pca_choose_k(spectrum, threshold) == k

    def test_invalid(self):
        with pytest.raises(ValueError):
            pca_choose_k([], 0.9)
        with pytest.raises(ValueError):
            pca_choose_k([1, -1], 0.9)


# ---------------------------------------------------------------- properties

@given(seeded_normal(min_rows=2, max_cols=6), st.data())
def test_variance_capture(x, data):
    k = data.draw(st.integers(1, x.shape[1]))
    model = pca_fit(x, k)
    y = pca_transform(model, x)
    captured = y.var(axis=0).sum()
    expected = model.spectrum[:k].sum()
    assert abs(captured - expected) <= 1e-8 * max(expected, 1e-12) + 1e-12


@given(seeded_normal(min_rows=2, max_cols=6))
def test_basis_orthonormal_and_spectrum_sorted(x):
    model = pca_fit(x)
    assert np.max(np.abs(model.basis.T @ model.basis - np.eye(model.k_dim))) <= 1e-8
    assert np.all(np.diff(model.spectrum) <= 0) and np.all(model.spectrum >= -1e-10)


@given(sample_sets(min_rows=2, max_cols=5), st.data())
def test_contractive(x, data):
    k = data.draw(st.integers(1, x.shape[1]))
    y = pca_transform(pca_fit(x, k), x)
    xc = x - x.mean(axis=0)
    d = np.linalg.norm(xc[:, None] - xc[None], axis=2)
    dy = np.linalg.norm(y[:, None] - y[None], axis=2)
    assert np.all(dy <= d + 1e-8)


@given(seeded_normal(min_rows=2))
def test_train_transform_mean_zero(x):
    y = pca_transform(pca_fit(x), x)
    assert np.abs(y.mean(axis=0)).max() <= 1e-10 * max(1.0, np.abs(x).max())
