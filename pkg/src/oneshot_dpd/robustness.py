"""Influence functions of the unrestricted and restricted MDPDE at cell contamination.

Contamination is a point mass on one multinomial cell ``n`` (1..L+1): the
functional is evaluated at ``(1 - eps) pi(theta) + eps Delta_n``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dpd import _powered, matrix_J
from .errors import InputError, SingularMatrixError
from .estimators import LinearConstraint, _inv2, restricted_covariance
from .model import ModelParams, StressPlan, failure_probabilities, jacobian_W


@dataclass(frozen=True)
class ContaminationPoint:
    cell: int

    def check(self, plan: StressPlan) -> "ContaminationPoint":
        if not 1 <= self.cell <= plan.n_cells:
            raise InputError(f"cell {self.cell} outside 1..{plan.n_cells}")
        return self


def _cell(point) -> ContaminationPoint:
    return point if isinstance(point, ContaminationPoint) else ContaminationPoint(int(point))


def _psi(point: ContaminationPoint, params, plan, beta) -> np.ndarray:
    """``W^T D^(beta-1) (Delta_n - pi)``."""
    pi = failure_probabilities(params, plan)
    delta = np.zeros_like(pi)
    delta[point.cell - 1] = 1.0
    return jacobian_W(params, plan).T @ (_powered(pi, beta - 1.0) * (delta - pi))


def influence_unrestricted(point, params: ModelParams, plan: StressPlan,
                           beta: float) -> np.ndarray:
    point = _cell(point).check(plan)
    Jinv = _inv2(matrix_J(params, plan, beta), "J_beta")
    return Jinv @ _psi(point, params, plan, beta)


def influence_restricted(point, params: ModelParams, plan: StressPlan, beta: float,
                         constraint: LinearConstraint,
                         form: str = "projected") -> np.ndarray:
    """Influence function of the restricted MDPDE.

    ``form="projected"`` (default) solves the linearised constrained
    estimating equations ``J IF + m lam = psi, m^T IF = 0``, giving
    ``IF = P_beta psi`` with ``P_beta`` as in the restricted covariance.
    ``form="least-squares"`` returns ``(J^T J + m m^T)^-1 J^T psi``, the
    least-squares solution of the stacked system ``[J; m^T] IF = [psi; 0]``.
    The latter is not orthogonal to ``m`` in general and does not match the
    derivative of the restricted functional; it is kept for comparison.
    """
    point = _cell(point).check(plan)
    psi = _psi(point, params, plan, beta)
    if form == "projected":
        _, P, _ = restricted_covariance(params, plan, beta, constraint)
        return P @ psi
    if form == "least-squares":
        J = matrix_J(params, plan, beta)
        m = constraint.vector
        A = J.T @ J + np.outer(m, m)
        return _inv2(A, "J^T J + m m^T") @ (J.T @ psi)
    raise InputError(f"unknown influence function form {form!r}")


@dataclass
class IFProfile:
    cells: np.ndarray
    values: np.ndarray  # (L+1, 2)
    norms: np.ndarray

    @property
    def max_norm(self) -> float:
        return float(self.norms.max())

    def rows(self):
        for c, (a, b), n in zip(self.cells, self.values, self.norms):
            yield int(c), float(a), float(b), float(n)


def if_profile(params: ModelParams, plan: StressPlan, beta: float,
               constraint: LinearConstraint | None = None) -> IFProfile:
    """Influence function at every cell, with Euclidean norms."""
    cells = np.arange(1, plan.n_cells + 1)
    if constraint is None:
        vals = [influence_unrestricted(c, params, plan, beta) for c in cells]
    else:
        vals = [influence_restricted(c, params, plan, beta, constraint) for c in cells]
    vals = np.array(vals)
    norms = np.linalg.norm(vals, axis=1)
    if not np.all(np.isfinite(norms)):
        raise SingularMatrixError("influence function is not finite")
    return IFProfile(cells, vals, norms)
