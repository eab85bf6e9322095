"""Minimum DPD estimators, unrestricted and under a linear restriction ``m . theta = d``.

The loss is minimised with a Nelder-Mead simplex started from the best points
of a coarse grid.  The unrestricted search runs in the well-conditioned
coordinates ``(log theta0 + theta1 * mean(x), theta1 * range(x))``; the
restricted search moves along the constraint line with one free coordinate,
so the returned estimate satisfies the constraint by construction.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .dpd import EmpiricalProbabilities, empirical_probabilities, matrix_J, matrix_K, score_U
from .errors import (BoundaryDataWarning, DegenerateCellWarning,
                     InfeasibleConstraintError, InputError, SingularMatrixError)
from .model import ModelParams, StressPlan

DET_GUARD = 1e-14


@dataclass(frozen=True)
class LinearConstraint:
    """The restriction ``m0 * theta0 + m1 * theta1 = d``."""

    m: tuple
    d: float

    def __post_init__(self):
        m = tuple(float(v) for v in self.m)
        if len(m) != 2:
            raise InputError(f"m must have two components, got {len(m)}")
        if not all(math.isfinite(v) for v in m) or not math.isfinite(float(self.d)):
            raise InputError("constraint entries must be finite")
        if math.hypot(*m) == 0.0:
            raise InputError("constraint vector m must be nonzero")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "d", float(self.d))

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.m)

    def residual(self, params: ModelParams) -> float:
        return self.m[0] * params.theta0 + self.m[1] * params.theta1 - self.d

    def to_dict(self) -> dict:
        return {"m": list(self.m), "d": self.d}


@dataclass(frozen=True)
class FitOptions:
    """Search settings.

    ``n_starts`` simplex searches are launched from the lowest-loss points
    of a ``grid_size x grid_size`` grid (``grid_size**2`` points along the
    line for restricted fits); ``n_starts = grid_size**2`` starts from
    every grid point.
    """

    grid_size: int = 5
    n_starts: int = 3
    log_theta0_range: tuple = (math.log(1e-5), 0.0)
    theta1_range: tuple = (-0.2, 0.2)
    step: float = 0.1
    xatol: float = 1e-10
    fatol: float = 1e-12
    max_iter: int = 5000
    polish: bool = True
    covariance: bool = True


DEFAULT_OPTIONS = FitOptions()


@dataclass
class FitResult:
    estimate: ModelParams
    beta: float
    loss: float
    covariance: np.ndarray | None
    converged: bool
    iterations: int
    warnings: list = field(default_factory=list)
    constraint: LinearConstraint | None = None
    stationarity: float = float("nan")

    def to_dict(self) -> dict:
        return {
            "estimate": {"theta0": self.estimate.theta0,
                         "theta1": self.estimate.theta1},
            "beta": self.beta,
            "loss": self.loss,
            "covariance": None if self.covariance is None
            else self.covariance.tolist(),
            "converged": self.converged,
            "iterations": self.iterations,
            "stationarity_residual": self.stationarity,
            "constraint": None if self.constraint is None
            else self.constraint.to_dict(),
            "warnings": list(self.warnings),
        }


@dataclass(frozen=True)
class _Search:
    theta: np.ndarray
    loss: float
    iterations: int
    converged: bool


def _stress_scaling(plan: StressPlan) -> tuple[float, float]:
    x = plan.stress_levels
    spread = float(x[-1] - x[0])
    return float(x.mean()), spread if spread > 0 else 1.0


def _line_mode(constraint: LinearConstraint) -> int:
    # the free coordinate is the one the line moves along fastest
    m0, m1 = constraint.m
    if abs(m1) >= abs(m0):
        return _kernels.LINE_THETA0
    if m1 == 0.0 and constraint.d / m0 <= 0.0:
        raise InfeasibleConstraintError(
            f"constraint forces theta0 = {constraint.d / m0:g} <= 0")
    return _kernels.LINE_THETA1


def _start_grid(mode: int, options: FitOptions, xbar: float, scale: float):
    g = options.grid_size
    lo0, hi0 = options.log_theta0_range
    lo1, hi1 = options.theta1_range
    if mode == _kernels.FREE:
        l0, t1 = np.meshgrid(np.linspace(lo0, hi0, g), np.linspace(lo1, hi1, g),
                             indexing="ij")
        l0, t1 = l0.ravel(), t1.ravel()
        return np.column_stack([l0 + t1 * xbar, t1 * scale])
    if mode == _kernels.LINE_THETA0:
        return np.linspace(lo0, hi0, g * g)[:, None]
    return (np.linspace(lo1, hi1, g * g) * scale)[:, None]


def _search(p: np.ndarray, plan: StressPlan, beta: float,
            constraint: LinearConstraint | None, options: FitOptions) -> _Search:
    xbar, scale = _stress_scaling(plan)
    if constraint is None:
        mode, m0, m1, d = _kernels.FREE, 0.0, 0.0, 0.0
    else:
        mode = _line_mode(constraint)
        (m0, m1), d = constraint.m, constraint.d
    args = (p, float(beta), plan.stress_levels, plan.change_times,
            plan.inspection_times, mode, xbar, scale, m0, m1, d)

    grid = _start_grid(mode, options, xbar, scale)
    values = _kernels.grid_values(grid, *args)
    finite = np.flatnonzero(np.isfinite(values))
    if finite.size == 0:
        raise InputError("the loss is not finite anywhere on the start grid")

    def theta_of(eta):
        return np.array(_kernels.to_theta(eta, mode, xbar, scale, m0, m1, d))

    def rank(loss, eta):
        # ties: lowest loss, then lowest theta0
        return (loss, theta_of(eta)[0])

    starts = sorted(finite, key=lambda i: rank(values[i], grid[i]))
    best = None
    total_iter = 0
    for i in starts[:max(1, options.n_starts)]:
        eta, f, it, ok = _kernels.nelder_mead(
            grid[i].astype(float), options.step, *args,
            options.xatol, options.fatol, options.max_iter)
        total_iter += it
        if best is None or rank(f, eta) < rank(best[1], best[0]):
            best = (eta, f, ok)
    # one restart from the winner guards against a collapsed simplex
    eta, f, it, ok = _kernels.nelder_mead(
        best[0], options.step * 1e-2, *args,
        options.xatol, options.fatol, options.max_iter)
    total_iter += it
    if rank(f, eta) > rank(best[1], best[0]):
        eta, f = best[0], best[1]
    theta = theta_of(eta)
    if options.polish:
        cand = _polish(theta, p, plan, beta, constraint)
        if mode == _kernels.LINE_THETA0:
            cand[1] = (d - m0 * cand[0]) / m1
        elif mode == _kernels.LINE_THETA1:
            cand[0] = (d - m1 * cand[1]) / m0
        q = _kernels.cell_probs(cand[0], cand[1], *args[2:5])
        f_cand = _kernels.dpd_loss(p, q, float(beta))
        # a polish step may only move within the loss resolution
        if f_cand <= f + 1e-12 * max(1.0, abs(f)):
            theta, f = cand, f_cand
    return _Search(theta, float(f), total_iter, bool(ok))


def _score_theta(theta, plan, p, beta):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateCellWarning)
        return score_U(ModelParams.from_array(theta), plan, p, beta)


def _polish(theta: np.ndarray, p: np.ndarray, plan: StressPlan, beta: float,
            constraint: LinearConstraint | None, max_steps: int = 6) -> np.ndarray:
    """Newton steps on the (projected) score equations.

    The simplex can only resolve the minimiser to about sqrt(machine eps)
    because it compares loss values; the score equations pin it down to
    rounding level.  Steps are kept only while they shrink the residual.
    """
    if constraint is None:
        dirs = np.eye(2)
    else:
        m = constraint.vector
        dirs = (np.array([m[1], -m[0]]) / np.hypot(*m))[None, :]

    def reduced(th):
        if not (th[0] > 0 and np.all(np.isfinite(th))):
            return None
        u = _score_theta(th, plan, p, beta)
        return dirs @ u if np.all(np.isfinite(u)) else None

    g = reduced(theta)
    if g is None:
        return theta
    for _ in range(max_steps):
        if not np.any(g):
            break
        hs = 1e-6 * np.maximum(np.abs(dirs @ theta), 1e-3 * np.abs(theta).max())
        H = np.empty((dirs.shape[0], dirs.shape[0]))
        for c, (h, v) in enumerate(zip(hs, dirs)):
            gp, gm = reduced(theta + h * v), reduced(theta - h * v)
            if gp is None or gm is None:
                return theta
            H[:, c] = (gp - gm) / (2 * h)
        try:
            step = -np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            break
        cand = theta + step @ dirs
        g_new = reduced(cand)
        if g_new is None or np.linalg.norm(g_new) >= np.linalg.norm(g):
            break
        theta, g = cand, g_new
    return theta


def _inv2(A: np.ndarray, what: str = "matrix") -> np.ndarray:
    """Closed-form 2x2 inverse with a relative determinant guard."""
    a, b, c, d = A[0, 0], A[0, 1], A[1, 0], A[1, 1]
    det = a * d - b * c
    norm = np.abs(A).max()
    if not np.isfinite(det) or norm == 0 or abs(det) < DET_GUARD * norm**2:
        raise SingularMatrixError(f"{what} is singular (det={det:g})")
    return np.array([[d, -b], [-c, a]]) / det


def unrestricted_covariance(params: ModelParams, plan: StressPlan,
                            beta: float) -> np.ndarray:
    """Sandwich ``J^-1 K J^-1``, the asymptotic covariance of ``sqrt(N)(theta_hat - theta)``."""
    Jinv = _inv2(matrix_J(params, plan, beta), "J_beta")
    S = Jinv @ matrix_K(params, plan, beta) @ Jinv
    return 0.5 * (S + S.T)


def restricted_covariance(params: ModelParams, plan: StressPlan, beta: float,
                          constraint: LinearConstraint):
    """Asymptotic covariance ``Sigma = P K P`` of the restricted estimator.

    Returns
    -------
    Sigma : (2, 2) ndarray
    P : (2, 2) ndarray
        ``J^-1 - Q m^T J^-1``.
    Q : (2,) ndarray
        ``J^-1 m / (m^T J^-1 m)``.
    """
    m = constraint.vector
    Jinv = _inv2(matrix_J(params, plan, beta), "J_beta")
    Jm = Jinv @ m
    denom = float(m @ Jm)
    if not np.isfinite(denom) or denom == 0.0:
        raise SingularMatrixError("m^T J^-1 m vanishes")
    Q = Jm / denom
    P = Jinv - np.outer(Q, m @ Jinv)
    Sigma = P @ matrix_K(params, plan, beta) @ P.T
    return 0.5 * (Sigma + Sigma.T), P, Q


def stationarity_residual(params: ModelParams, plan: StressPlan, p_hat, beta: float,
                          constraint: LinearConstraint | None = None) -> float:
    """Norm of the score, or of its part orthogonal to ``m`` under a restriction."""
    U = score_U(params, plan, p_hat, beta)
    if constraint is not None:
        m = constraint.vector
        U = U - m * (m @ U) / (m @ m)
    return float(np.linalg.norm(U))


def _as_empirical(data) -> EmpiricalProbabilities:
    if isinstance(data, EmpiricalProbabilities):
        return data
    return empirical_probabilities(data)


def _check(plan: StressPlan, p: np.ndarray, beta: float):
    if p.shape != (plan.n_cells,):
        raise InputError(
            f"data have {p.size} cells but the plan defines {plan.n_cells}")
    if not beta >= 0:
        raise InputError(f"beta must be nonnegative, got {beta}")


def _fit(data, plan, beta, constraint, options) -> FitResult:
    options = options or DEFAULT_OPTIONS
    emp = _as_empirical(data)
    p = np.ascontiguousarray(emp.probs, dtype=float)
    _check(plan, p, beta)
    notes = []
    if p[-1] == 1.0:
        notes.append("boundary data: every device survived the test")
    elif p[0] == 1.0:
        notes.append("boundary data: every device failed in the first interval")
    if notes:
        warnings.warn(notes[0], BoundaryDataWarning, stacklevel=3)

    found = _search(p, plan, float(beta), constraint, options)
    estimate = ModelParams.from_array(found.theta)
    if not found.converged:
        notes.append(f"simplex search hit max_iter={options.max_iter}; "
                     "returning best point found")

    cov = None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", DegenerateCellWarning)
        resid = stationarity_residual(estimate, plan, p, beta, constraint)
        if options.covariance:
            try:
                if constraint is None:
                    cov = unrestricted_covariance(estimate, plan, beta)
                else:
                    cov = restricted_covariance(estimate, plan, beta, constraint)[0]
            except SingularMatrixError as exc:
                notes.append(f"covariance unavailable: {exc}")
    seen = set()
    for w in caught:
        msg = str(w.message)
        if msg not in seen:
            seen.add(msg)
            notes.append(f"degenerate cell: {msg}")

    return FitResult(estimate=estimate, beta=float(beta), loss=max(found.loss, 0.0),
                     covariance=cov, converged=found.converged,
                     iterations=found.iterations, warnings=notes,
                     constraint=constraint, stationarity=resid)


def fit_mdpde(data, plan: StressPlan, beta: float,
              options: FitOptions | None = None) -> FitResult:
    """Minimum DPD estimate over the whole parameter space.

    Parameters
    ----------
    data : array_like of int or EmpiricalProbabilities
        Counts for cells 1..L+1, or precomputed empirical proportions.
    plan : StressPlan
    beta : float
        Tuning parameter; ``beta = 0`` gives the maximum likelihood estimate.
    options : FitOptions, optional
    """
    return _fit(data, plan, beta, None, options)


def fit_restricted_mdpde(data, plan: StressPlan, beta: float,
                         constraint: LinearConstraint,
                         options: FitOptions | None = None) -> FitResult:
    """Minimum DPD estimate over the line ``m . theta = d``."""
    return _fit(data, plan, beta, constraint, options)


def mdpde_functional(probs, plan: StressPlan, beta: float,
                     constraint: LinearConstraint | None = None,
                     options: FitOptions | None = None) -> ModelParams:
    """Estimator functional evaluated at an arbitrary probability vector."""
    options = options or DEFAULT_OPTIONS
    p = np.ascontiguousarray(probs, dtype=float)
    _check(plan, p, beta)
    return ModelParams.from_array(_search(p, plan, float(beta), constraint, options).theta)
