import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mecrl import cmatrix
from conftest import random_channel


def cmat(rows):
    return np.array(rows, dtype=np.complex128)


class TestHermitian:
    def test_identity_is_fixed_point(self):
        eye = np.eye(2, dtype=np.complex128)
        assert np.array_equal(cmatrix.hermitian(eye), eye)

    def test_conjugates_1x1(self):
        assert np.array_equal(cmatrix.hermitian(cmat([[1j]])), cmat([[-1j]]))

    def test_hand_conjugate_transpose(self):
        a = cmat([[1, 1j], [0, 2]])
        expected = cmat([[1, 0], [-1j, 2]])
        assert np.array_equal(cmatrix.hermitian(a), expected)

    @given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_involution(self, n, m, seed):
        a = random_channel(np.random.default_rng(seed), n, m)
        assert np.array_equal(cmatrix.hermitian(cmatrix.hermitian(a)), a)

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            cmatrix.hermitian(cmat([[np.nan]]))


class TestMatmul:
    def test_identity(self, rng):
        a = random_channel(rng, 3, 3)
        assert np.allclose(cmatrix.matmul(a, np.eye(3)), a)

    def test_i_squared(self):
        assert np.allclose(cmatrix.matmul(cmat([[1j]]), cmat([[1j]])), cmat([[-1]]))

    def test_row_times_column_cancels(self):
        out = cmatrix.matmul(cmat([[1, 1j]]), cmat([[1], [1j]]))
        assert np.allclose(out, cmat([[0]]))

    def test_dimension_mismatch(self):
        with pytest.raises(cmatrix.DimensionError):
            cmatrix.matmul(np.eye(2), np.eye(3))


class TestInvertHpd:
    def test_identity(self):
        assert np.allclose(cmatrix.invert_hpd(np.eye(3)), np.eye(3))

    def test_diagonal(self):
        out = cmatrix.invert_hpd(np.diag([2.0, 4.0]).astype(complex))
        assert np.allclose(out, np.diag([0.5, 0.25]))

    def test_2x2_closed_form(self):
        a = cmat([[2, 1j], [-1j, 2]])
        expected = cmat([[2, -1j], [1j, 2]]) / 3.0
        assert np.allclose(cmatrix.invert_hpd(a), expected, atol=1e-12)

    def test_matches_numpy_inverse(self, rng):
        for _ in range(50):
            h = random_channel(rng, 6, 4)
            gram = h.conj().T @ h
            ours = cmatrix.invert_hpd(gram)
            assert np.allclose(ours, np.linalg.inv(gram), atol=1e-9)

    def test_inverse_of_inverse(self, rng):
        for _ in range(20):
            h = random_channel(rng, 8, 3)
            gram = h.conj().T @ h + 0.5 * np.eye(3)
            twice = cmatrix.invert_hpd(cmatrix.invert_hpd(gram))
            assert np.max(np.abs(twice - gram)) < 1e-8

    def test_product_with_input_is_identity(self, rng):
        for _ in range(20):
            h = random_channel(rng, 5, 3)
            gram = h.conj().T @ h
            assert np.max(np.abs(cmatrix.invert_hpd(gram) @ gram - np.eye(3))) < 1e-9

    def test_not_hermitian(self):
        with pytest.raises(cmatrix.NotHermitianError):
            cmatrix.invert_hpd(cmat([[1, 1], [0, 1]]))

    def test_singular(self):
        a = cmat([[1, 1], [1, 1]])
        with pytest.raises(cmatrix.SingularMatrixError):
            cmatrix.invert_hpd(a)

    def test_not_square(self):
        with pytest.raises(cmatrix.DimensionError):
            cmatrix.invert_hpd(np.ones((2, 3), dtype=complex))


class TestPseudoInverse:
    def test_single_column(self):
        h = cmat([[1], [1j]])
        z = cmatrix.pseudo_inverse(h)
        assert np.allclose(z, cmat([[0.5, -0.5j]]))
        assert np.allclose(z @ h, cmat([[1]]))

    def test_identity(self):
        assert np.allclose(cmatrix.pseudo_inverse(np.eye(3)), np.eye(3))

    def test_duplicate_columns_singular(self, rng):
        col = random_channel(rng, 4, 1)
        with pytest.raises(cmatrix.SingularMatrixError):
            cmatrix.pseudo_inverse(np.hstack([col, col]))

    def test_wide_matrix_rejected(self):
        with pytest.raises(cmatrix.DimensionError):
            cmatrix.pseudo_inverse(np.ones((2, 3), dtype=complex))

    def test_matches_numpy_pinv(self, rng):
        for _ in range(25):
            h = random_channel(rng, 6, 3)
            assert np.allclose(cmatrix.pseudo_inverse(h), np.linalg.pinv(h), atol=1e-8)

    @given(st.integers(2, 4), st.integers(0, 2**32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_left_inverse_property(self, m, seed):
        h = random_channel(np.random.default_rng(seed), 4, m)
        z = cmatrix.pseudo_inverse(h)
        assert z.shape == (m, 4)
        assert np.max(np.abs(z @ h - np.eye(m))) < 1e-9


class TestRowNormSq:
    def test_unit_row(self):
        assert cmatrix.row_norm_sq(cmat([[1, 0]]), 0) == 1.0

    def test_half(self):
        assert cmatrix.row_norm_sq(cmat([[0.5, -0.5j]]), 0) == pytest.approx(0.5)

    def test_zero_row(self):
        assert cmatrix.row_norm_sq(cmat([[0, 0], [1, 1]]), 0) == 0.0

    def test_index_error(self):
        with pytest.raises(IndexError):
            cmatrix.row_norm_sq(np.eye(2, dtype=complex), 2)

    @given(st.floats(0, 2 * np.pi), st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_invariant_under_unit_phase(self, phase, seed):
        z = random_channel(np.random.default_rng(seed), 1, 3)
        rotated = z * np.exp(1j * phase)
        assert cmatrix.row_norm_sq(rotated, 0) == pytest.approx(
            cmatrix.row_norm_sq(z, 0), rel=1e-12)
