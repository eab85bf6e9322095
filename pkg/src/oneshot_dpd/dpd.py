"""Density power divergence, its score and the J / K information matrices."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DegenerateCellWarning, InfiniteDivergenceError, InputError
from .model import ModelParams, StressPlan, failure_probabilities, jacobian_W

PROB_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class EmpiricalProbabilities:
    """Observed cell proportions ``n_j / N`` together with the total ``N``."""

    probs: np.ndarray
    total: int

    def __post_init__(self):
        probs = np.array(self.probs, dtype=float)
        probs.flags.writeable = False
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "total", int(self.total))


def validate_counts(counts) -> np.ndarray:
    """Return counts as an int64 array, rejecting negatives, fractions and empty data."""
    arr = np.asarray(counts)
    if arr.ndim != 1 or arr.size < 2:
        raise InputError("counts must be a vector with at least two cells")
    as_float = arr.astype(float)
    if not np.all(np.isfinite(as_float)) or np.any(as_float != np.round(as_float)):
        raise InputError("counts must be integers")
    if np.any(as_float < 0):
        raise InputError("counts must be nonnegative")
    out = as_float.astype(np.int64)
    if out.sum() == 0:
        raise InputError("all counts are zero")
    return out


def empirical_probabilities(counts) -> EmpiricalProbabilities:
    counts = validate_counts(counts)
    total = int(counts.sum())
    return EmpiricalProbabilities(counts / total, total)


def _as_probs(p) -> np.ndarray:
    if isinstance(p, EmpiricalProbabilities):
        return p.probs
    return np.asarray(p, dtype=float)


def dpd_divergence(p, q, beta: float) -> float:
    """Density power divergence ``d_beta(p, q)`` between two probability vectors.

    For ``beta > 0``::

        sum_j q_j^(1+beta) - (1 + 1/beta) p_j q_j^beta + (1/beta) p_j^(1+beta)

    and for ``beta == 0`` the Kullback-Leibler divergence ``sum_j p_j log(p_j/q_j)``
    with ``0 log 0 = 0``.

    Raises
    ------
    InputError
        Mismatched lengths or a negative ``beta``.
    InfiniteDivergenceError
        ``beta == 0`` and some ``q_j == 0`` while ``p_j > 0``.
    """
    p, q = _as_probs(p), _as_probs(q)
    if p.shape != q.shape:
        raise InputError(f"length mismatch: {p.shape} vs {q.shape}")
    if beta < 0:
        raise InputError(f"beta must be nonnegative, got {beta}")
    if beta == 0 and np.any((q <= 0) & (p > 0)):
        raise InfiniteDivergenceError(
            "Kullback-Leibler divergence is infinite: a model cell is zero "
            "where the data cell is positive")
    val = _kernels.dpd_loss(np.ascontiguousarray(p), np.ascontiguousarray(q),
                            float(beta))
    # rounding in the three-term sum can dip just below zero
    return max(val, 0.0)


def _powered(pi: np.ndarray, exponent: float) -> np.ndarray:
    if exponent < 0 and np.any(pi < PROB_FLOOR):
        warnings.warn(
            f"model cell probability below {PROB_FLOOR:g}; floored before "
            f"raising to power {exponent:g}",
            DegenerateCellWarning, stacklevel=3)
        pi = np.maximum(pi, PROB_FLOOR)
    return pi ** exponent


def score_U(params: ModelParams, plan: StressPlan, p_hat, beta: float) -> np.ndarray:
    """DPD score ``W^T D_pi^(beta-1) (p_hat - pi)``.

    It equals ``-grad d_beta(p_hat, pi(theta)) / (1 + beta)``.
    """
    p_hat = _as_probs(p_hat)
    pi = failure_probabilities(params, plan)
    W = jacobian_W(params, plan)
    return W.T @ (_powered(pi, beta - 1.0) * (p_hat - pi))


def matrix_J(params: ModelParams, plan: StressPlan, beta: float) -> np.ndarray:
    pi = failure_probabilities(params, plan)
    W = jacobian_W(params, plan)
    J = W.T @ (_powered(pi, beta - 1.0)[:, None] * W)
    return 0.5 * (J + J.T)


def matrix_K(params: ModelParams, plan: StressPlan, beta: float) -> np.ndarray:
    pi = failure_probabilities(params, plan)
    W = jacobian_W(params, plan)
    v = W.T @ pi**beta
    K = W.T @ (_powered(pi, 2.0 * beta - 1.0)[:, None] * W) - np.outer(v, v)
    return 0.5 * (K + K.T)
