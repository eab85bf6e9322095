"""Robust tests of ``H0: m . theta = d``: Rao-type score tests and the DPD-based test."""

from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from ._parallel import indexed_map
from .dpd import dpd_divergence, matrix_K, score_U
from .errors import (CalibrationError, ConvergenceError, InputError, OneShotError,
                     SingularMatrixError)
from .estimators import (FitOptions, LinearConstraint, _as_empirical, _inv2,
                         fit_mdpde, fit_restricted_mdpde, restricted_covariance)
from .model import ModelParams, StressPlan, failure_probabilities
from .sampling import sample_counts, substream

ALPHAS = (0.01, 0.05, 0.10)
QUAD_GUARD = 1e-14
MAX_BOOTSTRAP_FAILURE = 0.05

_LEAN = FitOptions(covariance=False)


def chi_square_tail(x: float, df: int) -> float:
    """Upper tail ``P(X > x)`` of a chi-square variable, via the regularised gamma function."""
    if df <= 0 or int(df) != df:
        raise InputError(f"degrees of freedom must be a positive integer, got {df}")
    if x < 0:
        raise InputError(f"x must be nonnegative, got {x}")
    return float(special.gammaincc(df / 2.0, x / 2.0))


@dataclass
class TestOutcome:
    statistic: float
    p_value: float
    beta: float
    reference: dict
    reject_at: dict = field(default_factory=dict)
    tau: float | None = None
    estimate: ModelParams | None = None

    __test__ = False  # not a pytest class

    def decide(self, alphas=ALPHAS) -> "TestOutcome":
        self.reject_at = {float(a): bool(self.p_value < a) for a in alphas}
        return self

    def to_dict(self) -> dict:
        out = {
            "statistic": self.statistic,
            "p_value": self.p_value,
            "beta": self.beta,
            "reference": self.reference,
            "reject_at": {f"{a:g}": r for a, r in self.reject_at.items()},
        }
        if self.tau is not None:
            out["tau"] = self.tau
        if self.estimate is not None:
            out["null_estimate"] = {"theta0": self.estimate.theta0,
                                    "theta1": self.estimate.theta1}
        return out


def _quadratic_guard(value: float, scale: float, what: str) -> None:
    if not np.isfinite(value) or value <= QUAD_GUARD * scale:
        raise SingularMatrixError(f"degenerate test: {what} = {value:g}")


def rao_statistic(data, plan: StressPlan, beta: float, constraint: LinearConstraint,
                  options: FitOptions | None = None) -> TestOutcome:
    """Rao-type statistic ``N U^T Q [Q^T K Q]^-1 Q^T U`` at the restricted MDPDE.

    Referred to a chi-square distribution with one degree of freedom.
    """
    emp = _as_empirical(data)
    opts = options or _LEAN
    fit = fit_restricted_mdpde(emp, plan, beta, constraint, opts)
    if not fit.converged:
        raise ConvergenceError("restricted fit did not converge")
    theta = fit.estimate
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        U = score_U(theta, plan, emp.probs, beta)
        _, _, Q = restricted_covariance(theta, plan, beta, constraint)
        K = matrix_K(theta, plan, beta)
    qkq = float(Q @ K @ Q)
    _quadratic_guard(qkq, float(Q @ Q) * np.abs(K).max(), "Q^T K Q")
    stat = max(emp.total * float(U @ Q) ** 2 / qkq, 0.0)
    return TestOutcome(stat, chi_square_tail(stat, 1), float(beta),
                       {"distribution": "chi-square", "df": 1},
                       estimate=theta).decide()


def rao_simple_statistic(data, plan: StressPlan, beta: float,
                         null: ModelParams) -> TestOutcome:
    """Rao-type statistic ``N U^T K^-1 U`` for the simple null ``theta = null``; chi-square(2)."""
    emp = _as_empirical(data)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        U = score_U(null, plan, emp.probs, beta)
        Kinv = _inv2(matrix_K(null, plan, beta), "K_beta")
    stat = max(emp.total * float(U @ Kinv @ U), 0.0)
    return TestOutcome(stat, chi_square_tail(stat, 2), float(beta),
                       {"distribution": "chi-square", "df": 2},
                       estimate=null).decide()


def _dpd_stat(counts_or_emp, plan, beta, tau, constraint, options):
    emp = _as_empirical(counts_or_emp)
    full = fit_mdpde(emp, plan, beta, options)
    null = fit_restricted_mdpde(emp, plan, beta, constraint, options)
    if not (full.converged and null.converged):
        raise ConvergenceError("fit did not converge")
    stat = 2.0 * emp.total * dpd_divergence(
        failure_probabilities(full.estimate, plan),
        failure_probabilities(null.estimate, plan), tau)
    return stat, null.estimate


def _bootstrap_one(b, probs, N, plan, beta, tau, constraint, seed):
    counts = sample_counts(probs, N, substream(seed, b))
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return _dpd_stat(counts, plan, beta, tau, constraint, _LEAN)[0]
    except OneShotError:
        return None


def dpd_test_statistic(data, plan: StressPlan, beta: float, constraint: LinearConstraint,
                       tau: float | None = None, n_boot: int = 500, seed: int = 0,
                       workers: int = 1) -> TestOutcome:
    """DPD-based statistic ``T = 2 N d_tau(pi(theta_hat), pi(theta_tilde))``.

    The null law is calibrated by a parametric bootstrap: ``n_boot``
    multinomial samples of size ``N`` from ``pi(theta_tilde)``, each refitted
    both ways.  The p-value is the fraction of bootstrap statistics at least
    as large as the observed one.  ``tau`` defaults to ``beta``.
    """
    tau = float(beta) if tau is None else float(tau)
    if not tau > 0:
        raise InputError(f"tau must be positive, got {tau}")
    emp = _as_empirical(data)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        stat, null = _dpd_stat(emp, plan, beta, tau, constraint, _LEAN)
    probs = failure_probabilities(null, plan)
    job = functools.partial(_bootstrap_one, probs=probs, N=emp.total, plan=plan,
                            beta=float(beta), tau=tau, constraint=constraint, seed=seed)
    boot = indexed_map(job, int(n_boot), workers)
    ok = np.array([s for s in boot if s is not None])
    failures = len(boot) - ok.size
    if n_boot > 0 and failures > MAX_BOOTSTRAP_FAILURE * n_boot:
        raise CalibrationError(f"{failures} of {n_boot} bootstrap refits failed")
    p_value = float(np.mean(ok >= stat)) if ok.size else math.nan
    ref = {"distribution": "parametric-bootstrap", "replicates": int(n_boot),
           "failures": int(failures), "seed": int(seed),
           "null_estimate": [null.theta0, null.theta1]}
    return TestOutcome(stat, p_value, float(beta), ref, tau=tau,
                       estimate=null).decide()
