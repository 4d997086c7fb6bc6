import numpy as np
import numpy.testing as npt
import pytest
from scipy.interpolate import BSpline as SciPyBSpline

from exsplinet import bspline
from exsplinet.errors import (
    DegreeTooLowError,
    InvalidHyperparameterError,
    OutOfDomainError,
)


def random_cases(seed, n_cases, N_range=(2, 12), p_max=5):
    rng = np.random.default_rng(seed)
    for _ in range(n_cases):
        N = int(rng.integers(*N_range))
        p = int(rng.integers(0, min(p_max, N - 1) + 1))
        x = float(rng.uniform(0.0, 1.0))
        yield N, p, x, rng


class TestKnots:
    def test_open_uniform_structure(self):
        kv = bspline.open_uniform_knots(5, 2)
        npt.assert_allclose(
            kv.knots, [0, 0, 0, 1 / 3, 2 / 3, 1, 1, 1], atol=1e-15
        )

    def test_no_interior_knots(self):
        kv = bspline.open_uniform_knots(3, 2)
        npt.assert_allclose(kv.knots, [0, 0, 0, 1, 1, 1])

    def test_length_and_monotone(self):
        for N, p, _, _ in random_cases(0, 200):
            kv = bspline.open_uniform_knots(N, p)
            assert len(kv.knots) == N + p + 1
            assert np.all(np.diff(kv.knots) >= 0)

    def test_invalid(self):
        with pytest.raises(InvalidHyperparameterError):
            bspline.open_uniform_knots(3, 5)
        with pytest.raises(InvalidHyperparameterError):
            bspline.open_uniform_knots(2, -1)


class TestBasisValues:
    def test_oracle_matches_scipy(self):
        for N, p, x, rng in random_cases(1, 200):
            kv = bspline.open_uniform_knots(N, p)
            if x == 1.0:
                continue
            c = np.zeros(N)
            for n in range(1, N + 1):
                c[:] = 0.0
                c[n - 1] = 1.0
                ours = bspline.basis_oracle(kv, n, x)
                ref = SciPyBSpline(kv.knots, c, p)(x)
                npt.assert_allclose(ours, ref, atol=1e-13)

    def test_partition_of_unity(self):
        for N, p, x, _ in random_cases(2, 1000):
            kv = bspline.open_uniform_knots(N, p)
            total = sum(bspline.basis_oracle(kv, n, x) for n in range(1, N + 1))
            npt.assert_allclose(total, 1.0, atol=1e-12)

    def test_nonnegative(self):
        for N, p, x, _ in random_cases(3, 500):
            kv = bspline.open_uniform_knots(N, p)
            for n in range(1, N + 1):
                assert bspline.basis_oracle(kv, n, x) >= 0.0

    def test_left_continuity_at_one(self):
        # the last basis function attains 1 at x = 1, all others vanish
        for N in (2, 4, 7):
            for p in range(0, min(4, N - 1) + 1):
                kv = bspline.open_uniform_knots(N, p)
                vals = [bspline.basis_oracle(kv, n, 1.0) for n in range(1, N + 1)]
                npt.assert_allclose(vals[-1], 1.0, atol=1e-14)
                npt.assert_allclose(vals[:-1], 0.0, atol=1e-14)

    def test_matrix_agrees_with_oracle(self):
        rng = np.random.default_rng(4)
        for N, p, _, _ in random_cases(5, 60):
            xs = rng.uniform(0.0, 1.0, size=20)
            kv = bspline.open_uniform_knots(N, p)
            B = bspline.basis_matrix(N, p, xs)
            assert B.shape == (20, N)
            for k, x in enumerate(xs):
                for n in range(1, N + 1):
                    npt.assert_allclose(
                        B[k, n - 1], bspline.basis_oracle(kv, n, x), atol=1e-13
                    )

    def test_sparse_agrees_with_matrix(self):
        rng = np.random.default_rng(6)
        for N, p, x, _ in random_cases(7, 300):
            sb = bspline.basis_sparse(N, p, x)
            B = bspline.basis_matrix(N, p, np.array([x]))[0]
            dense = np.zeros(N)
            dense[sb.offset - 1 : sb.offset - 1 + len(sb.values)] = sb.values
            npt.assert_allclose(dense, B, atol=1e-13)

    def test_out_of_domain(self):
        with pytest.raises(OutOfDomainError):
            bspline.basis_matrix(4, 2, np.array([-0.1]))
        with pytest.raises(OutOfDomainError):
            bspline.basis_sparse(4, 2, 1.5)


class TestSupportWindow:
    def test_window_contains_all_nonzeros(self):
        for N, p, x, _ in random_cases(8, 500):
            p = max(p, 1)
            lo, hi = bspline.support_window(N, p, x)
            assert 1 <= lo <= hi <= N
            kv = bspline.open_uniform_knots(N, p)
            for n in range(1, N + 1):
                if not lo <= n <= hi:
                    assert bspline.basis_oracle(kv, n, x) == 0.0

    def test_window_width(self):
        for N, p, x, _ in random_cases(9, 300):
            p = max(p, 1)
            lo, hi = bspline.support_window(N, p, x)
            assert hi - lo <= p + 1


class TestDeBoor:
    def test_matches_dense_combination(self):
        for N, p, x, rng in random_cases(10, 500):
            w = rng.standard_normal(N)
            spl = bspline.Spline1D(weights=w, basis_count=N, degree=p)
            direct = float(bspline.basis_matrix(N, p, np.array([x]))[0] @ w)
            npt.assert_allclose(bspline.de_boor_eval(spl, x), direct, atol=1e-12)

    def test_matches_scipy(self):
        for N, p, x, rng in random_cases(11, 200):
            if x == 1.0:
                continue
            kv = bspline.open_uniform_knots(N, p)
            w = rng.standard_normal(N)
            spl = bspline.Spline1D(weights=w, basis_count=N, degree=p)
            ref = SciPyBSpline(kv.knots, w, p)(x)
            npt.assert_allclose(bspline.de_boor_eval(spl, x), ref, atol=1e-12)


class TestGreville:
    def test_identity_reproduction(self):
        xs = np.linspace(0.0, 1.0, 101)
        for N in (2, 3, 5, 9):
            for p in range(1, min(5, N - 1) + 1):
                g = bspline.greville(N, p)
                B = bspline.basis_matrix(N, p, xs)
                npt.assert_allclose(B @ g, xs, atol=1e-12)

    def test_endpoints(self):
        g = bspline.greville(6, 3)
        assert g[0] == 0.0 and g[-1] == 1.0
        assert np.all(np.diff(g) > 0)


class TestDerivatives:
    def test_derivative_spline_matches_fd(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            N = int(rng.integers(3, 10))
            p = int(rng.integers(1, min(4, N - 1) + 1))
            w = rng.standard_normal(N)
            spl = bspline.Spline1D(weights=w, basis_count=N, degree=p)
            dspl = bspline.derivative_spline(spl)
            assert dspl.basis_count == N - 1 and dspl.degree == p - 1
            h = 1e-6
            for x in rng.uniform(0.05, 0.95, size=5):
                fd = (
                    bspline.de_boor_eval(spl, x + h)
                    - bspline.de_boor_eval(spl, x - h)
                ) / (2 * h)
                npt.assert_allclose(bspline.de_boor_eval(dspl, x), fd, rtol=1e-5,
                                    atol=1e-7)

    def test_derivative_of_identity_is_one(self):
        for N in (3, 6):
            for p in (1, 2, 3):
                if p >= N:
                    continue
                spl = bspline.Spline1D(
                    weights=bspline.greville(N, p), basis_count=N, degree=p
                )
                dspl = bspline.derivative_spline(spl)
                for x in (0.1, 0.43, 0.78):
                    npt.assert_allclose(bspline.de_boor_eval(dspl, x), 1.0,
                                        atol=1e-12)

    def test_adjoint_duality(self):
        # <D w, g> == <w, D^T g> for the derivative weight transform
        rng = np.random.default_rng(13)
        for _ in range(100):
            N = int(rng.integers(3, 10))
            p = int(rng.integers(1, min(4, N - 1) + 1))
            w = rng.standard_normal(N)
            g = rng.standard_normal(N - 1)
            Dw = bspline.derivative_weights(w, N, p)
            Dtg = bspline.derivative_weights_adjoint(g, N, p)
            npt.assert_allclose(np.dot(Dw, g), np.dot(w, Dtg), atol=1e-10)

    def test_degree_zero_rejected(self):
        spl = bspline.Spline1D(weights=np.ones(4), basis_count=4, degree=0)
        with pytest.raises(DegreeTooLowError):
            bspline.derivative_spline(spl)


class TestSchoenberg:
    def test_reproduces_linears_exactly(self):
        xs = np.linspace(0.0, 1.0, 57)
        w = bspline.schoenberg_weights(lambda x: 2.0 * x - 0.5, 8, 3)
        B = bspline.basis_matrix(8, 3, xs)
        npt.assert_allclose(B @ w, 2.0 * xs - 0.5, atol=1e-12)

    def test_range_preserving(self):
        rng = np.random.default_rng(14)
        f = lambda x: np.sin(7 * x) ** 2  # range [0, 1]
        w = bspline.schoenberg_weights(f, 12, 3)
        xs = rng.uniform(0, 1, size=200)
        vals = bspline.basis_matrix(12, 3, xs) @ w
        assert np.all(vals >= -1e-12) and np.all(vals <= 1 + 1e-12)

    def test_quadratic_error_shrinks_quadratically(self):
        # the quasi-interpolant of f(x) = x^2 converges at order h^2
        f = lambda x: x**2
        xs = np.linspace(0.0, 1.0, 201)
        errs = []
        for N in (6, 10, 18, 34):  # h halves each step (h = 1/(N - p), p = 3)
            w = bspline.schoenberg_weights(f, N, 3)
            vals = bspline.basis_matrix(N, 3, xs) @ w
            errs.append(np.max(np.abs(vals - f(xs))))
        for a, b in zip(errs, errs[1:]):
            assert a / b > 3.0  # order 2 gives a factor of ~4
