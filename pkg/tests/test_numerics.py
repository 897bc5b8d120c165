import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from risae.errors import NonHermitian
from risae.numerics import (RngStream, bessel_j0, complex_gaussian, complex_gaussian_array,
                            hermitian_sqrt, kronecker, least_squares_solve, q_function)

# frozen oracle values (scipy.integrate.quad and mpmath at 30 digits)
Q_OF_ONE = 0.15865525393145707
J0_OF_FIVE = -0.177596771314338304
J0_FIRST_ZERO = 2.40482555769577276


def rand_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


class TestKronecker:
    def test_scalar_one_is_identity(self):
        m = rand_complex(np.random.default_rng(0), 3, 2)
        np.testing.assert_array_equal(kronecker([[1]], m), m)

    def test_sign_pattern(self):
        out = kronecker(np.array([[1], [1]]), np.array([[1], [-1]]))
        np.testing.assert_array_equal(out[:, 0], [1, -1, 1, -1])

    def test_matches_block_loop(self):
        rng = np.random.default_rng(1)
        a, b = rand_complex(rng, 2, 2), rand_complex(rng, 2, 2)
        out = kronecker(a, b)
        assert out.shape == (4, 4)
        for i in range(2):
            for j in range(2):
                for k in range(2):
                    for l in range(2):
                        assert out[2 * i + k, 2 * j + l] == pytest.approx(a[i, j] * b[k, l], rel=1e-15)

    @pytest.mark.parametrize("n,m", [(2, 2), (3, 3), (2, 3)])
    def test_mixed_product(self, n, m):
        rng = np.random.default_rng(n * 10 + m)
        a, c = rand_complex(rng, n, n), rand_complex(rng, n, n)
        b, d = rand_complex(rng, m, m), rand_complex(rng, m, m)
        lhs = kronecker(a, b) @ kronecker(c, d)
        np.testing.assert_allclose(lhs, kronecker(a @ c, b @ d), atol=1e-12)


class TestHermitianSqrt:
    def test_identity(self):
        np.testing.assert_allclose(hermitian_sqrt(np.eye(4)), np.eye(4), atol=1e-15)

    def test_diagonal(self):
        np.testing.assert_allclose(hermitian_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]), atol=1e-14)

    def test_reconstruction(self):
        a = rand_complex(np.random.default_rng(2), 8, 8)
        r = a @ a.conj().T
        q = hermitian_sqrt(r)
        assert np.linalg.norm(q @ q - r) / np.linalg.norm(r) < 1e-9

    def test_rejects_non_hermitian(self):
        with pytest.raises(NonHermitian):
            hermitian_sqrt(np.array([[1.0, 1.0], [0.0, 1.0]]))

    def test_reports_clamping(self):
        r = np.diag([1.0, -1e-14])
        q, clamped = hermitian_sqrt(r, return_clamped=True)
        assert clamped == 1
        np.testing.assert_allclose(q, np.diag([1.0, 0.0]), atol=1e-15)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 12), st.integers(0, 2**31), st.integers(0, 3))
    def test_output_hermitian_psd(self, n, seed, deficit):
        rng = np.random.default_rng(seed)
        a = rand_complex(rng, n, max(n - deficit, 1))
        q = hermitian_sqrt(a @ a.conj().T)
        assert np.max(np.abs(q - q.conj().T)) < 1e-10
        assert np.linalg.eigvalsh(q).min() >= -1e-10


class TestLeastSquares:
    def test_identity(self):
        v = rand_complex(np.random.default_rng(3), 4)
        np.testing.assert_allclose(least_squares_solve(np.eye(4), v), v, atol=1e-14)

    def test_unitary(self):
        rng = np.random.default_rng(4)
        u, _ = np.linalg.qr(rand_complex(rng, 4, 4))
        v = rand_complex(rng, 4)
        np.testing.assert_allclose(least_squares_solve(u, v), u.conj().T @ v, atol=1e-12)

    def test_projection_matches_gram_schmidt(self):
        rng = np.random.default_rng(5)
        c = rand_complex(rng, 6, 4)
        rhs = rand_complex(rng, 6)
        # independent oracle: classical Gram-Schmidt basis of col(C)
        basis = []
        for k in range(4):
            v = c[:, k].copy()
            for e in basis:
                v = v - np.vdot(e, v) * e
            basis.append(v / np.linalg.norm(v))
        proj = sum(np.vdot(e, rhs) * e for e in basis)
        np.testing.assert_allclose(c @ least_squares_solve(c, rhs), proj, atol=1e-10)

    def test_rejects_wide(self):
        with pytest.raises(ValueError):
            least_squares_solve(np.ones((2, 3)), np.ones(2))

    def test_ridge_handles_rank_deficient(self):
        c = np.ones((3, 2), dtype=complex)
        x = least_squares_solve(c, np.array([1.0, 1.0, 1.0]))
        assert np.all(np.isfinite(x))
        np.testing.assert_allclose(c @ x, np.ones(3), atol=1e-6)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 32), st.integers(0, 8), st.integers(0, 2**31))
    def test_residual_orthogonal(self, cols, extra, seed):
        rng = np.random.default_rng(seed)
        rows = min(cols + extra, 32)
        c = rand_complex(rng, rows, cols)
        rhs = rand_complex(rng, rows)
        res = c @ least_squares_solve(c, rhs) - rhs
        scale = np.linalg.norm(c) * np.linalg.norm(rhs)
        assert np.linalg.norm(c.conj().T @ res) <= 1e-8 * scale


class TestQFunction:
    def test_zero(self):
        assert q_function(0.0) == 0.5

    @pytest.mark.parametrize("x", [0.1, 0.7, 1.5, 3.0, 6.5])
    def test_reflection(self, x):
        assert q_function(x) + q_function(-x) == pytest.approx(1.0, abs=1e-15)

    def test_one_against_quadrature(self):
        assert q_function(1.0) == pytest.approx(Q_OF_ONE, abs=1e-14)

    def test_quadrature_oracle_is_independent(self):
        val, _ = integrate.quad(lambda t: np.exp(-t * t / 2) / np.sqrt(2 * np.pi), 1.0, np.inf, epsabs=1e-15)
        assert val == pytest.approx(Q_OF_ONE, abs=1e-14)

    def test_accuracy_against_mpmath(self):
        xs = np.linspace(-8, 8, 161)
        ref = np.array([float(0.5 * mpmath.erfc(mpmath.mpf(x) / mpmath.sqrt(2))) for x in xs])
        np.testing.assert_allclose(q_function(xs), ref, rtol=0, atol=1e-12)

    def test_strictly_decreasing(self):
        x = np.arange(-8.0, 8.0, 1e-3)
        q = q_function(x)
        assert np.all(np.diff(q) <= 0)
        # near x = -8, Q(x) = 1 - 6e-16 sits within one ulp of 1, so strictness is
        # checked on the tail, where Q(-x) = 1 - Q(x) carries the information
        tail = q_function(np.abs(x[x <= 0])[::-1])
        assert np.all(np.diff(q[x >= 0]) < 0)
        assert np.all(np.diff(tail) < 0)


class TestBesselJ0:
    def test_zero(self):
        assert bessel_j0(0.0) == 1.0

    def test_first_root(self):
        assert abs(bessel_j0(2.404826)) < 1e-6
        assert abs(bessel_j0(J0_FIRST_ZERO)) < 1e-12

    def test_five(self):
        assert bessel_j0(5.0) == pytest.approx(J0_OF_FIVE, abs=1e-12)

    def test_against_mpmath_grid(self):
        xs = np.linspace(0, 50, 251)
        ref = np.array([float(mpmath.besselj(0, x)) for x in xs])
        np.testing.assert_allclose(bessel_j0(xs), ref, rtol=0, atol=1e-8)


class TestComplexGaussian:
    def test_moments(self):
        z = complex_gaussian(np.random.default_rng(6), 1000, 1000)
        assert np.mean(np.abs(z) ** 2) == pytest.approx(1.0, abs=0.01)
        assert abs(z.real.mean()) < 0.01 and abs(z.imag.mean()) < 0.01
        assert z.real.var() == pytest.approx(0.5, abs=0.01)

    def test_deterministic(self):
        a = complex_gaussian(RngStream(9, 3), 4, 5)
        b = complex_gaussian(RngStream(9, 3), 4, 5)
        np.testing.assert_array_equal(a, b)

    def test_array_shape(self):
        assert complex_gaussian_array(np.random.default_rng(0), (2, 3, 4)).shape == (2, 3, 4)


class TestRngStream:
    def test_streams_differ(self):
        a = RngStream(5, 0).gen.random(10_000)
        b = RngStream(5, 1).gen.random(10_000)
        assert not np.array_equal(a, b)

    def test_child_is_reproducible_and_distinct(self):
        root = RngStream(5)
        np.testing.assert_array_equal(root.child(2, 7).gen.random(5), RngStream(5, (0, 2, 7)).gen.random(5))
        assert not np.array_equal(root.child(2, 7).gen.random(5), root.child(7, 2).gen.random(5))

    def test_rejects_unknown_source(self):
        with pytest.raises(TypeError):
            complex_gaussian(42, 2, 2)
