import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kmdtca.errors import DefectiveMatrixError, ShapeError
from kmdtca.tensor_core import (
    CPFactors,
    cp_reconstruct,
    eig,
    fold_mode,
    frobenius_norm3,
    khatri_rao,
    pinv,
    reduced_svd,
    unfold_mode,
)


def rand_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def triple_loop(f: CPFactors):
    I1, I2, I3 = f.dims
    out = np.zeros((I1, I2, I3), dtype=complex)
    for i, j, k in itertools.product(range(I1), range(I2), range(I3)):
        for r in range(f.R):
            out[i, j, k] += f.A[i, r] * f.B[j, r] * f.C[k, r]
    return out


dims3 = st.tuples(st.integers(1, 4), st.integers(1, 4), st.integers(1, 4))


class TestNorm:
    def test_zero(self):
        assert frobenius_norm3(np.zeros((2, 2, 2))) == 0.0

    def test_ones(self):
        assert frobenius_norm3(np.ones((2, 2, 2))) == pytest.approx(np.sqrt(8), abs=1e-15)

    def test_one_to_eight(self):
        t = np.arange(1, 9, dtype=float).reshape(2, 2, 2)
        # 1 + 4 + ... + 64 = 204
        assert frobenius_norm3(t) == pytest.approx(14.2828568570857, abs=1e-12)

    def test_complex_moduli(self):
        assert frobenius_norm3(np.full((1, 1, 2), 3 + 4j)) == pytest.approx(np.sqrt(50))


class TestUnfold:
    def test_mode1_index_enumeration(self):
        t = np.zeros((2, 2, 2))
        for i1, i2, i3 in itertools.product(range(2), repeat=3):
            t[i1, i2, i3] = i1 + 2 * i2 + 4 * i3
        np.testing.assert_array_equal(unfold_mode(t, 1), [[0, 2, 4, 6], [1, 3, 5, 7]])

    def test_cyclic_column_indices(self):
        rng = np.random.default_rng(0)
        I1, I2, I3 = 2, 3, 4
        t = rand_complex(rng, I1, I2, I3)
        u1, u2, u3 = (unfold_mode(t, k) for k in (1, 2, 3))
        for i1, i2, i3 in itertools.product(range(I1), range(I2), range(I3)):
            assert u1[i1, i2 + I2 * i3] == t[i1, i2, i3]
            assert u2[i2, i3 + I3 * i1] == t[i1, i2, i3]
            assert u3[i3, i1 + I1 * i2] == t[i1, i2, i3]

    @pytest.mark.parametrize("mode", [1, 2, 3])
    def test_singleton(self, mode):
        np.testing.assert_array_equal(unfold_mode(np.full((1, 1, 1), 2 - 1j), mode), [[2 - 1j]])

    @pytest.mark.parametrize("mode", [0, 4, -1])
    def test_bad_mode(self, mode):
        with pytest.raises(ValueError):
            unfold_mode(np.ones((2, 2, 2)), mode)

    @settings(max_examples=50, deadline=None)
    @given(dims=dims3, mode=st.sampled_from([1, 2, 3]), seed=st.integers(0, 2**32 - 1))
    def test_fold_round_trip(self, dims, mode, seed):
        t = rand_complex(np.random.default_rng(seed), *dims)
        np.testing.assert_array_equal(fold_mode(unfold_mode(t, mode), mode, dims), t)


class TestKhatriRao:
    def test_identity(self):
        np.testing.assert_array_equal(khatri_rao(np.eye(2), np.eye(2)), np.eye(4)[:, [0, 3]])

    def test_hand_kronecker(self):
        np.testing.assert_array_equal(khatri_rao([[1], [2]], [[3], [4]]), [[3], [4], [6], [8]])

    def test_column_mismatch(self):
        with pytest.raises(ShapeError):
            khatri_rao(np.ones((2, 2)), np.ones((2, 3)))

    @settings(max_examples=30, deadline=None)
    @given(dims=dims3, R=st.integers(1, 3), seed=st.integers(0, 2**32 - 1))
    def test_als_identity(self, dims, R, seed):
        rng = np.random.default_rng(seed)
        f = CPFactors(*(rand_complex(rng, d, R) for d in dims))
        t = cp_reconstruct(f)
        scale = max(1.0, frobenius_norm3(t))
        np.testing.assert_allclose(unfold_mode(t, 1), f.A @ khatri_rao(f.C, f.B).T, atol=1e-12 * scale)
        np.testing.assert_allclose(unfold_mode(t, 2), f.B @ khatri_rao(f.A, f.C).T, atol=1e-12 * scale)
        np.testing.assert_allclose(unfold_mode(t, 3), f.C @ khatri_rao(f.B, f.A).T, atol=1e-12 * scale)


class TestReconstruct:
    def test_basis_outer_product(self):
        e = np.array([[1.0], [0.0]])
        t = cp_reconstruct(CPFactors(e, e, e))
        expected = np.zeros((2, 2, 2))
        expected[0, 0, 0] = 1
        np.testing.assert_array_equal(t, expected)

    def test_empty_sum(self):
        f = CPFactors(np.zeros((2, 0)), np.zeros((3, 0)), np.zeros((4, 0)))
        np.testing.assert_array_equal(cp_reconstruct(f, (2, 3, 4)), np.zeros((2, 3, 4)))

    def test_triple_loop_oracle(self):
        rng = np.random.default_rng(3)
        f = CPFactors(rand_complex(rng, 3, 2), rand_complex(rng, 4, 2), rand_complex(rng, 2, 2))
        np.testing.assert_allclose(cp_reconstruct(f), triple_loop(f), rtol=0, atol=1e-14 * 10)

    def test_dim_mismatch(self):
        f = CPFactors(np.ones((2, 1)), np.ones((2, 1)), np.ones((2, 1)))
        with pytest.raises(ShapeError):
            cp_reconstruct(f, (2, 2, 3))

    def test_factor_column_mismatch(self):
        with pytest.raises(ShapeError):
            CPFactors(np.ones((2, 1)), np.ones((2, 2)), np.ones((2, 1)))

    @settings(max_examples=30, deadline=None)
    @given(dims=dims3, R=st.integers(1, 4), seed=st.integers(0, 2**32 - 1))
    def test_permutation_invariance_of_residual(self, dims, R, seed):
        rng = np.random.default_rng(seed)
        f = CPFactors(*(rand_complex(rng, d, R) for d in dims))
        t = rand_complex(rng, *dims)
        perm = rng.permutation(R)
        a = frobenius_norm3(t - cp_reconstruct(f))
        b = frobenius_norm3(t - cp_reconstruct(f.permuted(perm)))
        assert a == pytest.approx(b, rel=1e-13)


class TestSVD:
    def test_identity(self):
        np.testing.assert_allclose(reduced_svd(np.eye(2)).sigma, [1, 1])

    def test_rank_truncation(self):
        svd = reduced_svd(np.diag([3.0, 0.0]))
        np.testing.assert_allclose(svd.sigma, [3.0])
        assert svd.Q.shape == (2, 1) and svd.V.shape == (2, 1)

    def test_swap_matrix(self):
        m = np.array([[0, 1], [1, 0]], dtype=complex)
        q, s, v = reduced_svd(m)
        np.testing.assert_allclose(s, [1, 1], atol=1e-15)
        np.testing.assert_allclose((q * s) @ v.conj().T, m, atol=1e-15)

    def test_configurable_tolerance(self):
        m = np.diag([1.0, 1e-8])
        assert reduced_svd(m, tol_rank=1e-10).sigma.size == 2
        assert reduced_svd(m, tol_rank=1e-6).sigma.size == 1

    @settings(max_examples=25, deadline=None)
    @given(rows=st.integers(1, 50), cols=st.integers(1, 200), seed=st.integers(0, 2**32 - 1))
    def test_reconstruction_bound(self, rows, cols, seed):
        m = rand_complex(np.random.default_rng(seed), rows, cols)
        q, s, v = reduced_svd(m)
        norm = np.linalg.norm(m)
        assert np.linalg.norm((q * s) @ v.conj().T - m) <= 1e-12 * norm
        assert np.all(np.diff(s) <= 0) and np.all(s >= 0)
        np.testing.assert_allclose(q.conj().T @ q, np.eye(s.size), atol=1e-12)
        np.testing.assert_allclose(v.conj().T @ v, np.eye(s.size), atol=1e-12)


class TestEig:
    def test_diagonal(self):
        w, vecs, cond = eig(np.diag([2.0, 3.0]))
        order = np.argsort(w.real)
        np.testing.assert_allclose(w[order], [2, 3])
        np.testing.assert_allclose(np.abs(vecs[:, order]), np.eye(2))
        assert cond == pytest.approx(1.0)

    def test_rotation(self):
        w, _, _ = eig([[0, -1], [1, 0]])
        np.testing.assert_allclose(sorted(w, key=lambda z: z.imag), [-1j, 1j], atol=1e-15)

    def test_jordan_block(self):
        with pytest.raises(DefectiveMatrixError, match="no full eigenvector set"):
            eig([[1, 1], [0, 1]])

    def test_not_square(self):
        with pytest.raises(ShapeError):
            eig(np.ones((2, 3)))

    @settings(max_examples=30, deadline=None)
    @given(n=st.integers(1, 8), seed=st.integers(0, 2**32 - 1))
    def test_pairs_and_reassembly(self, n, seed):
        m = rand_complex(np.random.default_rng(seed), n, n)
        w, vecs, _ = eig(m)
        norm = np.linalg.norm(m)
        for r in range(n):
            assert np.linalg.norm(m @ vecs[:, r] - w[r] * vecs[:, r]) <= 1e-10 * norm
        rebuilt = (vecs * w) @ np.linalg.inv(vecs)
        assert np.linalg.norm(rebuilt - m) <= 1e-9 * norm


class TestPinv:
    def test_identity(self):
        np.testing.assert_allclose(pinv(np.eye(3)), np.eye(3))

    def test_rank_deficient_diagonal(self):
        np.testing.assert_allclose(pinv(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]))

    def test_cramer_2x2(self):
        rng = np.random.default_rng(11)
        a, b, c, d = rand_complex(rng, 4)
        det = a * d - b * c
        cramer = np.array([[d, -b], [-c, a]]) / det
        np.testing.assert_allclose(pinv([[a, b], [c, d]]), cramer, rtol=0, atol=1e-12 * np.abs(cramer).max())

    def test_zero_matrix(self):
        np.testing.assert_array_equal(pinv(np.zeros((2, 3))), np.zeros((3, 2)))

    @settings(max_examples=30, deadline=None)
    @given(rows=st.integers(1, 12), cols=st.integers(1, 12), rank=st.integers(1, 12),
           seed=st.integers(0, 2**32 - 1))
    def test_penrose_identities(self, rows, cols, rank, seed):
        rng = np.random.default_rng(seed)
        k = min(rank, rows, cols)
        m = rand_complex(rng, rows, k) @ rand_complex(rng, k, cols)
        p = pinv(m)
        norm = np.linalg.norm(m)
        pn = np.linalg.norm(p)
        assert np.linalg.norm(m @ p @ m - m) <= 1e-10 * norm
        assert np.linalg.norm(p @ m @ p - p) <= 1e-10 * max(pn, 1.0) * max(norm * pn, 1.0)
        assert np.linalg.norm((m @ p).conj().T - m @ p) <= 1e-10 * max(norm * pn, 1.0)
        assert np.linalg.norm((p @ m).conj().T - p @ m) <= 1e-10 * max(norm * pn, 1.0)
