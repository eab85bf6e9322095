import numpy as np
import pytest
from hypothesis import given, settings
from scipy import integrate

from oneshot_dpd.errors import InputError
from oneshot_dpd.model import (ModelParams, StressPlan, cdf_gradient, exposure_shifts,
                               failure_probabilities, hazard_rates, jacobian_W,
                               lifetime_cdf, simulation_plan)

from .conftest import params, plans, random_plan

# high-precision (40 digit) evaluations of the closed forms at theta=(0.003, 0.03)
LAMBDA1 = 0.008572953354189491
LAMBDA2 = 0.011572276592090923
SHIFT1 = 18.520455517042947
G10 = 0.08215755675315249
G25 = 0.19291301938887280
G40 = 0.32152522821606680


def hazard_integral_cdf(t, params, plan):
    """Independent CDF: 1 - exp(-integral of the step hazard), by quadrature."""
    x, tau = plan.stress_levels, plan.change_times

    def hazard(s):
        i = min(np.searchsorted(tau, s, side="right"), len(tau) - 1)
        return params.theta0 * np.exp(params.theta1 * x[i])

    pts = [c for c in tau if c < t]
    val, _ = integrate.quad(hazard, 0.0, t, points=pts or None, epsabs=1e-14, epsrel=1e-13,
                            limit=200)
    return 1.0 - np.exp(-val)


def fd_params(fun, params, rel=1e-6):
    """Central finite differences of fun(params) in theta0 and theta1."""
    th = params.as_array()
    cols = []
    for c in range(2):
        h = rel * max(abs(th[c]), 1e-2 if c == 1 else abs(th[c]))
        up, dn = th.copy(), th.copy()
        up[c] += h
        dn[c] -= h
        cols.append((fun(ModelParams.from_array(up)) - fun(ModelParams.from_array(dn))) / (2 * h))
    return np.stack(cols, axis=-1)


class TestPlan:
    def test_simulation_plan(self):
        plan = simulation_plan()
        assert plan.k == 2 and plan.L == 11 and plan.n_cells == 12
        # level in force over (tau_{i-1}, tau_i]; t=25 still belongs to level 1
        assert plan.levels.tolist() == [0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 1]

    @pytest.mark.parametrize("kwargs, msg", [
        (dict(stress_levels=[45, 35], change_times=[25, 70], inspection_times=[25, 70]),
         "strictly increasing"),
        (dict(stress_levels=[35, 45], change_times=[30, 70], inspection_times=[25, 70]),
         "not in the inspection grid"),
        (dict(stress_levels=[35], change_times=[25, 70], inspection_times=[25, 70]),
         "stress levels"),
        (dict(stress_levels=[35], change_times=[70], inspection_times=[10, 70, 80]),
         "last inspection"),
        (dict(stress_levels=[35], change_times=[70], inspection_times=[-1, 70]),
         "positive"),
    ])
    def test_invalid(self, kwargs, msg):
        with pytest.raises(InputError, match=msg):
            StressPlan(**kwargs)

    def test_params_reject_nonpositive_theta0(self):
        with pytest.raises(InputError):
            ModelParams(0.0, 0.1)
        with pytest.raises(InputError):
            ModelParams(-1e-3, 0.1)


class TestHazardAndShifts:
    def test_hazard_rates(self, plan, truth):
        np.testing.assert_allclose(hazard_rates(truth, plan), [LAMBDA1, LAMBDA2], rtol=1e-14)

    def test_zero_stress_coefficient(self, plan):
        assert np.all(hazard_rates(ModelParams(0.7, 0.0), plan) == 0.7)
        assert hazard_rates(ModelParams(1.0, 0.0), plan).tolist() == [1.0, 1.0]

    def test_single_level_shift(self):
        plan = StressPlan([35.0], [70.0], [10.0, 70.0])
        assert exposure_shifts(ModelParams(0.01, 0.02), plan).tolist() == [0.0]

    def test_two_level_shift(self, plan, truth):
        a = exposure_shifts(truth, plan)
        assert a[0] == 0.0
        assert a[1] == pytest.approx(SHIFT1, rel=1e-13)

    @given(plans(), params())
    def test_equal_rates_shift_is_elapsed_time(self, plan, p):
        a = exposure_shifts(ModelParams(p.theta0, 0.0), plan)
        assert a.tolist() == [0.0] + plan.change_times[:-1].tolist()


class TestCDF:
    def test_origin(self, plan, truth):
        assert lifetime_cdf(0.0, truth, plan) == 0.0

    def test_values(self, plan, truth):
        assert lifetime_cdf(10.0, truth, plan) == pytest.approx(G10, rel=1e-13)
        assert lifetime_cdf(40.0, truth, plan) == pytest.approx(G40, rel=1e-13)

    def test_continuity_at_change(self, plan, truth):
        below = lifetime_cdf(np.nextafter(25.0, 0), truth, plan)
        assert lifetime_cdf(25.0, truth, plan) == pytest.approx(G25, rel=1e-13)
        assert abs(below - G25) < 1e-12

    @settings(max_examples=50, deadline=None)
    @given(plans(), params(theta0=(1e-4, 0.05), theta1=(-0.05, 0.05)))
    def test_matches_hazard_integral(self, plan, p):
        for t in np.linspace(0.5, plan.inspection_times[-1] * 1.2, 7):
            assert lifetime_cdf(t, p, plan) == pytest.approx(
                hazard_integral_cdf(t, p, plan), rel=1e-9, abs=1e-13)

    @given(plans(), params())
    def test_monotone(self, plan, p):
        t = np.linspace(0.0, plan.inspection_times[-1] * 1.5, 200)
        assert np.all(np.diff(lifetime_cdf(t, p, plan)) >= 0)

    def test_negative_time(self, plan, truth):
        with pytest.raises(InputError):
            lifetime_cdf(-1.0, truth, plan)


class TestFailureProbabilities:
    def test_first_cell(self, plan, truth):
        pi = failure_probabilities(truth, plan)
        assert pi[0] == pytest.approx(G10, rel=1e-13)

    def test_matches_cdf_differencing(self, plan, truth):
        t = np.concatenate(([0.0], plan.inspection_times))
        G = np.array([lifetime_cdf(v, truth, plan) for v in t])
        expected = np.append(np.diff(G), 1 - G[-1])
        np.testing.assert_allclose(failure_probabilities(truth, plan), expected,
                                   rtol=1e-12, atol=1e-15)

    def test_vanishing_hazard(self, plan):
        pi = failure_probabilities(ModelParams(1e-300, 0.0), plan)
        assert pi[-1] == pytest.approx(1.0)
        assert np.all(pi[:-1] < 1e-290)

    @given(plans(), params())
    def test_sum_to_one(self, plan, p):
        pi = failure_probabilities(p, plan)
        assert abs(pi.sum() - 1) < 1e-12
        assert np.all(pi >= 0)


class TestGradients:
    def test_first_level_closed_form(self, plan, truth):
        lam1 = LAMBDA1
        z1 = cdf_gradient(1, truth, plan)
        dens = lam1 * np.exp(-10 * lam1)
        np.testing.assert_allclose(z1, dens * np.array([10 / 0.003, 10 * 35.0]), rtol=1e-12)

    def test_index_range(self, plan, truth):
        with pytest.raises(InputError):
            cdf_gradient(0, truth, plan)
        with pytest.raises(InputError):
            cdf_gradient(plan.L + 1, truth, plan)

    def test_z_matches_finite_differences(self, plan, truth):
        for j in range(1, plan.L + 1):
            fd = fd_params(lambda q: lifetime_cdf(plan.inspection_times[j - 1], q, plan), truth)
            z = cdf_gradient(j, truth, plan)
            assert np.all(np.abs(z - fd) <= 1e-6 * np.abs(z))

    def test_W_column_sums_vanish(self, plan, truth):
        W = jacobian_W(truth, plan)
        assert W.shape == (12, 2)
        np.testing.assert_allclose(W.sum(axis=0), 0.0, atol=1e-15 * np.abs(W).max())

    def test_W_matches_finite_differences(self, plan, truth):
        W = jacobian_W(truth, plan)
        fd = fd_params(lambda q: failure_probabilities(q, plan), truth)
        for c in range(2):
            assert np.abs(W[:, c] - fd[:, c]).max() < 1e-6 * np.abs(W[:, c]).max()

    def test_W_single_interval(self):
        plan = StressPlan([40.0], [50.0], [50.0])
        p = ModelParams(0.01, 0.01)
        W = jacobian_W(p, plan)
        np.testing.assert_array_equal(W, np.array([cdf_gradient(1, p, plan),
                                                   -cdf_gradient(1, p, plan)]))

    @settings(max_examples=30, deadline=None)
    @given(plans(), params(theta0=(1e-3, 0.02), theta1=(-0.03, 0.03)))
    def test_W_random_instances(self, plan, p):
        W = jacobian_W(p, plan)
        fd = fd_params(lambda q: failure_probabilities(q, plan), p)
        for c in range(2):
            assert np.abs(W[:, c] - fd[:, c]).max() <= 1e-6 * np.abs(W[:, c]).max() + 1e-300


def test_random_plan_helper_is_valid():
    rng = np.random.default_rng(0)
    for _ in range(20):
        plan = random_plan(rng)
        assert set(plan.change_times) <= set(plan.inspection_times)
