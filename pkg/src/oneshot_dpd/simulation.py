"""Monte Carlo harness: cell contamination, MSE of the restricted MDPDE, test level and power.

Replication ``r`` at sample size ``N`` draws from ``substream(seed, N, r)``,
and summaries are reduced from per-replication records in index order, so a
run is bit-reproducible for any number of worker processes.
"""

from __future__ import annotations

import functools
import io
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from ._parallel import indexed_map
from .errors import ExperimentError, InputError, OneShotError
from .estimators import FitOptions, LinearConstraint, fit_restricted_mdpde
from .inference import rao_statistic
from .model import ModelParams, StressPlan, failure_probabilities, lifetime_cdf
from .sampling import sample_counts, substream

MAX_FAILURE_RATE = 0.02
DEFAULT_EPSILONS = (1.0, 0.9, 0.8, 0.7, 0.6, 0.5)

_LEAN = FitOptions(covariance=False)


@dataclass(frozen=True)
class ContaminationSpec:
    """Shrink one parameter by ``epsilon`` at the left end of interval ``cell``.

    Cell ``j`` (2..L) gets probability ``G_theta(t_j) - G_shrunk(t_{j-1})``,
    where ``shrunk`` is ``(eps*theta0, theta1)`` or ``(theta0, eps*theta1)``.
    """

    cell: int
    epsilon: float
    target: str = "theta0"

    def __post_init__(self):
        if self.target not in ("theta0", "theta1"):
            raise InputError(f"target must be theta0 or theta1, got {self.target!r}")
        if not 0.0 < self.epsilon <= 1.0:
            raise InputError(f"epsilon must lie in (0, 1], got {self.epsilon}")

    def check(self, plan: StressPlan) -> "ContaminationSpec":
        if not 2 <= self.cell <= plan.L:
            raise InputError(f"contaminated cell {self.cell} outside 2..{plan.L}")
        return self

    def shrunk(self, params: ModelParams) -> ModelParams:
        if self.target == "theta0":
            return ModelParams(self.epsilon * params.theta0, params.theta1)
        return ModelParams(params.theta0, self.epsilon * params.theta1)

    def to_dict(self) -> dict:
        return {"cell": self.cell, "epsilon": self.epsilon, "target": self.target}


def contaminated_probabilities(params: ModelParams, plan: StressPlan,
                               spec: ContaminationSpec) -> np.ndarray:
    spec.check(plan)
    probs = failure_probabilities(params, plan).copy()
    if spec.epsilon == 1.0:
        return probs
    t = plan.inspection_times
    j = spec.cell - 1
    probs[j] = lifetime_cdf(t[j], params, plan) - lifetime_cdf(t[j - 1], spec.shrunk(params), plan)
    if probs[j] < 0:
        raise ExperimentError("contamination produced a negative cell probability")
    return probs / probs.sum()


@dataclass(frozen=True)
class ExperimentConfig:
    plan: StressPlan
    true_params: ModelParams
    N: int
    R: int
    betas: tuple
    constraint: LinearConstraint
    contamination: ContaminationSpec | None = None
    seed: int = 0
    alpha: float = 0.05
    workers: int = 1

    def __post_init__(self):
        if self.N < 1 or self.R < 1:
            raise InputError("N and R must be at least 1")
        if not 0.0 < self.alpha < 1.0:
            raise InputError(f"alpha must lie in (0, 1), got {self.alpha}")
        betas = tuple(float(b) for b in self.betas)
        if not betas or any(b < 0 for b in betas):
            raise InputError("betas must be a nonempty list of nonnegative values")
        object.__setattr__(self, "betas", betas)
        if self.contamination is not None:
            self.contamination.check(self.plan)

    def data_probabilities(self, params: ModelParams | None = None) -> np.ndarray:
        params = params or self.true_params
        if self.contamination is None:
            return failure_probabilities(params, self.plan)
        return contaminated_probabilities(params, self.plan, self.contamination)


@dataclass(frozen=True)
class SummaryRow:
    beta: float
    N: int
    metric: str
    value: float
    failures: int


@dataclass
class ExperimentSummary:
    rows: list = field(default_factory=list)

    def value(self, beta: float, metric: str, N: int | None = None) -> float:
        for row in self.rows:
            if row.beta == beta and row.metric == metric and (N is None or row.N == N):
                return row.value
        raise KeyError((beta, metric, N))

    def failures(self) -> int:
        return sum(r.failures for r in self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("beta,N,metric,value,failures\n")
        for r in self.rows:
            buf.write(f"{r.beta!r},{r.N},{r.metric},{r.value!r},{r.failures}\n")
        return buf.getvalue()


def _check_failures(failures: int, R: int, what: str) -> None:
    if failures > MAX_FAILURE_RATE * R:
        raise ExperimentError(f"{failures} of {R} replications failed ({what})")


def _mse_replication(r, probs, N, plan, betas, constraint, seed):
    counts = sample_counts(probs, N, substream(seed, N, r))
    out = []
    for beta in betas:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                fit = fit_restricted_mdpde(counts, plan, beta, constraint, _LEAN)
            out.append(fit.estimate.as_array() if fit.converged else None)
        except OneShotError:
            out.append(None)
    return out


def mse_experiment(config: ExperimentConfig) -> ExperimentSummary:
    """Mean squared error of the restricted MDPDE for every beta.

    Reports ``mse`` (sum over both coordinates), ``mse_theta0`` and
    ``mse_theta1``; replications whose fit fails are dropped and counted.
    """
    job = functools.partial(_mse_replication, probs=config.data_probabilities(),
                            N=config.N, plan=config.plan, betas=config.betas,
                            constraint=config.constraint, seed=config.seed)
    records = indexed_map(job, config.R, config.workers)
    truth = config.true_params.as_array()
    summary = ExperimentSummary()
    for b, beta in enumerate(config.betas):
        est = [rec[b] for rec in records if rec[b] is not None]
        failures = config.R - len(est)
        _check_failures(failures, config.R, f"beta={beta}")
        sq = (np.array(est) - truth) ** 2
        per = sq.mean(axis=0)
        for metric, value in (("mse", float(per.sum())), ("mse_theta0", float(per[0])),
                              ("mse_theta1", float(per[1]))):
            summary.rows.append(SummaryRow(beta, config.N, metric, value, failures))
    return summary


def _test_replication(r, probs, N, plan, betas, constraint, seed, alpha):
    counts = sample_counts(probs, N, substream(seed, N, r))
    out = []
    for beta in betas:
        try:
            out.append(bool(rao_statistic(counts, plan, beta, constraint).p_value < alpha))
        except OneShotError:
            out.append(None)
    return out


def level_power_experiment(config: ExperimentConfig,
                           alternative: ModelParams | None = None,
                           sample_sizes=None) -> ExperimentSummary:
    """Empirical rejection rate of the Rao-type test for every beta and sample size.

    Data come from ``config.true_params`` (empirical level when they satisfy
    the constraint) or from ``alternative`` (empirical power), contaminated
    when the config says so.
    """
    probs = config.data_probabilities(alternative)
    metric = "power" if alternative is not None else "level"
    summary = ExperimentSummary()
    for N in sample_sizes or (config.N,):
        job = functools.partial(_test_replication, probs=probs, N=int(N),
                                plan=config.plan, betas=config.betas,
                                constraint=config.constraint, seed=config.seed,
                                alpha=config.alpha)
        records = indexed_map(job, config.R, config.workers)
        for b, beta in enumerate(config.betas):
            hits = [rec[b] for rec in records if rec[b] is not None]
            failures = config.R - len(hits)
            _check_failures(failures, config.R, f"beta={beta}, N={N}")
            summary.rows.append(SummaryRow(beta, int(N), metric,
                                           float(np.mean(hits)), failures))
    return summary


def mse_curve(config: ExperimentConfig, epsilons=DEFAULT_EPSILONS) -> list[dict]:
    """MSE against the contamination factor; needs a contamination block for cell/target."""
    if config.contamination is None:
        raise InputError("an MSE curve needs a contamination block (cell and target)")
    rows = []
    for eps in epsilons:
        cfg = replace(config, contamination=replace(config.contamination, epsilon=float(eps)))
        summary = mse_experiment(cfg)
        for beta in config.betas:
            rows.append({"epsilon": float(eps), "beta": beta,
                         "mse": summary.value(beta, "mse")})
    return rows
