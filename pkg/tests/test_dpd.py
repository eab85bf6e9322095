import itertools
import warnings

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from oneshot_dpd.dpd import (dpd_divergence, empirical_probabilities, matrix_J, matrix_K,
                             score_U)
from oneshot_dpd.errors import DegenerateCellWarning, InfiniteDivergenceError, InputError
from oneshot_dpd.model import (ModelParams, StressPlan, failure_probabilities, jacobian_W)

from .conftest import params, probability_vectors


def kl(p, q):
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


class TestEmpirical:
    def test_ratio(self):
        counts = [18, 12, 10, 10, 10, 10, 10, 10, 10, 10, 10, 60]
        emp = empirical_probabilities(counts)
        assert emp.total == 180
        assert emp.probs[0] == 0.1

    def test_boundary(self):
        emp = empirical_probabilities([7, 0, 0, 0])
        assert emp.probs.tolist() == [1.0, 0.0, 0.0, 0.0]

    @given(st.lists(st.integers(0, 10_000), min_size=2, max_size=15).filter(lambda c: sum(c) > 0))
    def test_normalisation(self, counts):
        assert abs(empirical_probabilities(counts).probs.sum() - 1) < 1e-15 * len(counts)

    @pytest.mark.parametrize("bad", [[0, 0, 0], [1, -1, 3], [1.5, 2, 3]])
    def test_invalid(self, bad):
        with pytest.raises(InputError):
            empirical_probabilities(bad)


class TestDivergence:
    def test_kl_example(self):
        assert dpd_divergence([0.5, 0.5], [0.9, 0.1], 0.0) == pytest.approx(
            0.5108256237659907, rel=1e-14)

    def test_beta_one_is_squared_distance(self):
        assert dpd_divergence([0.5, 0.5], [0.9, 0.1], 1.0) == pytest.approx(0.32, rel=1e-14)

    @given(probability_vectors(), st.sampled_from([0.0, 0.2, 0.5, 1.0, 2.0]))
    def test_self_divergence_zero(self, q, beta):
        assert dpd_divergence(q, q, beta) == pytest.approx(0.0, abs=1e-14)

    @given(st.data(), st.sampled_from([0.0, 0.2, 0.5, 1.0]))
    def test_nonnegative(self, data, beta):
        n = data.draw(st.integers(2, 8))
        p = data.draw(probability_vectors(n, n))
        q = data.draw(probability_vectors(n, n, floor=1e-3))
        d = dpd_divergence(p, q, beta)
        assert d >= 0
        if np.abs(p - q).max() > 1e-3:
            assert d > 0

    @given(st.data())
    def test_small_beta_tends_to_kl(self, data):
        n = data.draw(st.integers(2, 8))
        p = data.draw(probability_vectors(n, n, floor=1e-3))
        q = data.draw(probability_vectors(n, n, floor=1e-3))
        assert abs(dpd_divergence(p, q, 1e-4) - kl(p, q)) < 1e-3

    def test_zero_empirical_cells(self):
        q = np.array([0.2, 0.3, 0.5])
        p = np.array([0.0, 0.4, 0.6])
        beta = 0.3
        manual = np.sum(q ** 1.3) - (1 + 1 / beta) * np.sum(p[1:] * q[1:] ** 0.3) \
            + np.sum(p[1:] ** 1.3) / beta
        assert dpd_divergence(p, q, beta) == pytest.approx(manual, rel=1e-13)

    def test_errors(self):
        with pytest.raises(InputError):
            dpd_divergence([0.5, 0.5], [1.0], 0.5)
        with pytest.raises(InputError):
            dpd_divergence([0.5, 0.5], [0.5, 0.5], -0.1)
        with pytest.raises(InfiniteDivergenceError):
            dpd_divergence([0.5, 0.5], [1.0, 0.0], 0.0)
        # positive beta stays finite
        assert np.isfinite(dpd_divergence([0.5, 0.5], [1.0, 0.0], 0.5))


class TestScore:
    def test_zero_at_model(self, plan, truth):
        pi = failure_probabilities(truth, plan)
        assert np.all(score_U(truth, plan, pi, 0.4) == 0.0)

    @settings(max_examples=40, deadline=None)
    @given(params(theta0=(1e-3, 0.01), theta1=(0.0, 0.05)),
           probability_vectors(12, 12, floor=0.01), st.sampled_from([0.0, 0.2, 0.5, 1.0]))
    def test_gradient_of_divergence(self, p, p_hat, beta):
        plan = StressPlan([35.0, 45.0], [25.0, 70.0],
                          [10, 15, 20, 25, 30, 35, 40, 45, 50, 60, 70])
        th = p.as_array()
        grad = np.empty(2)
        for c in range(2):
            h = 1e-5 * (abs(th[c]) if c == 0 else 1e-2)
            up, dn = th.copy(), th.copy()
            up[c] += h
            dn[c] -= h
            grad[c] = (dpd_divergence(p_hat, failure_probabilities(ModelParams.from_array(up), plan), beta)
                       - dpd_divergence(p_hat, failure_probabilities(ModelParams.from_array(dn), plan), beta)) / (2 * h)
        U = score_U(p, plan, p_hat, beta)
        assume(np.abs(grad).max() > 1e-6)
        np.testing.assert_allclose((1 + beta) * U, -grad, rtol=1e-5,
                                   atol=1e-5 * np.abs(grad).max())

    def test_degenerate_cell_warning(self):
        plan = StressPlan([35.0, 45.0], [25.0, 70.0], [10, 25, 70])
        p = ModelParams(1.0, 0.1)  # everything fails in cell 1
        pi = failure_probabilities(p, plan)
        with pytest.warns(DegenerateCellWarning):
            U = score_U(p, plan, pi, 0.4)
        assert np.all(np.isfinite(U))


class TestInformationMatrices:
    def test_J_beta_one(self, plan, truth):
        W = jacobian_W(truth, plan)
        np.testing.assert_allclose(matrix_J(truth, plan, 1.0), W.T @ W, rtol=1e-13)

    def test_J_summation(self, plan, truth):
        beta = 0.4
        pi = failure_probabilities(truth, plan)
        W = jacobian_W(truth, plan)
        direct = sum(pi[j] ** (beta - 1) * np.outer(W[j], W[j]) for j in range(plan.n_cells))
        np.testing.assert_allclose(matrix_J(truth, plan, beta), direct, rtol=1e-12)

    @pytest.mark.parametrize("beta", [0.0, 0.2, 0.4, 0.6])
    def test_symmetric_psd(self, plan, truth, beta):
        for M in (matrix_J(truth, plan, beta), matrix_K(truth, plan, beta)):
            assert np.array_equal(M, M.T)
            ev = np.linalg.eigvalsh(M)
            assert ev.min() >= -1e-12 * ev.max()

    @given(params(theta0=(1e-4, 0.1), theta1=(-0.1, 0.1)))
    def test_fisher_identity(self, p):
        plan = StressPlan([35.0, 45.0], [25.0, 70.0], [10, 20, 25, 40, 70])
        J, K = matrix_J(p, plan, 0.0), matrix_K(p, plan, 0.0)
        np.testing.assert_allclose(K, J, rtol=1e-10, atol=1e-12 * np.abs(J).max())

    @pytest.mark.parametrize("beta", [0.0, 0.4])
    def test_K_is_score_covariance_by_enumeration(self, beta):
        """Single-level plan with two inspections: enumerate all multinomial outcomes."""
        plan = StressPlan([40.0], [30.0], [12.0, 30.0])
        p = ModelParams(0.003, 0.03)
        pi = failure_probabilities(p, plan)
        N = 4
        mean = np.zeros(2)
        second = np.zeros((2, 2))
        from math import factorial
        for n1, n2 in itertools.product(range(N + 1), repeat=2):
            n3 = N - n1 - n2
            if n3 < 0:
                continue
            prob = factorial(N) / (factorial(n1) * factorial(n2) * factorial(n3)) \
                * pi[0] ** n1 * pi[1] ** n2 * pi[2] ** n3
            u = np.sqrt(N) * score_U(p, plan, np.array([n1, n2, n3]) / N, beta)
            mean += prob * u
            second += prob * np.outer(u, u)
        cov = second - np.outer(mean, mean)
        np.testing.assert_allclose(mean, 0.0, atol=1e-12 * np.abs(cov).max() ** 0.5)
        np.testing.assert_allclose(cov, matrix_K(p, plan, beta), rtol=1e-10)

    def test_floor_keeps_matrices_finite(self):
        plan = StressPlan([35.0, 45.0], [25.0, 70.0], [10, 25, 70])
        p = ModelParams(1.0, 0.1)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DegenerateCellWarning)
            assert np.all(np.isfinite(matrix_J(p, plan, 0.2)))
            assert np.all(np.isfinite(matrix_K(p, plan, 0.2)))
