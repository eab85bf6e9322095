"""Step-stress plan and the exponential cumulative exposure lifetime model.

Cells are numbered 1..L+1 where they act as labels (cell ``j`` is the
interval ``(t_{j-1}, t_j]``, cell ``L+1`` is survival past ``t_L``); the
returned arrays are ordinary zero-based numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import InputError


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float).ravel()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ModelParams:
    """Parameters of the log-linear hazard ``lambda_i = theta0 * exp(theta1 * x_i)``."""

    theta0: float
    theta1: float

    def __post_init__(self):
        t0, t1 = float(self.theta0), float(self.theta1)
        if not np.isfinite(t0) or not np.isfinite(t1):
            raise InputError(f"parameters must be finite, got ({t0}, {t1})")
        if t0 <= 0:
            raise InputError(f"theta0 must be positive, got {t0}")
        object.__setattr__(self, "theta0", t0)
        object.__setattr__(self, "theta1", t1)

    def as_array(self) -> np.ndarray:
        return np.array([self.theta0, self.theta1])

    @classmethod
    def from_array(cls, arr) -> "ModelParams":
        return cls(float(arr[0]), float(arr[1]))


@dataclass(frozen=True, eq=False)
class StressPlan:
    """A step-stress plan: k stress levels, their change times and the inspection grid.

    Parameters
    ----------
    stress_levels : sequence of float
        Strictly increasing stress values ``x_1 < ... < x_k``.
    change_times : sequence of float
        Strictly increasing positive times ``tau_1 < ... < tau_k``; ``tau_k``
        ends the experiment.
    inspection_times : sequence of float
        Strictly increasing positive inspection times containing every
        change time, with the last one equal to ``tau_k``.
    """

    stress_levels: np.ndarray
    change_times: np.ndarray
    inspection_times: np.ndarray
    levels: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        x = _frozen(self.stress_levels)
        tau = _frozen(self.change_times)
        t = _frozen(self.inspection_times)
        for name, arr in (("stress_levels", x), ("change_times", tau),
                          ("inspection_times", t)):
            if arr.size == 0:
                raise InputError(f"{name} is empty")
            if not np.all(np.isfinite(arr)):
                raise InputError(f"{name} contains non-finite values")
            if np.any(np.diff(arr) <= 0):
                raise InputError(f"{name} must be strictly increasing")
        if x.size != tau.size:
            raise InputError(
                f"{x.size} stress levels but {tau.size} change times")
        if tau[0] <= 0 or t[0] <= 0:
            raise InputError("change and inspection times must be positive")
        missing = [c for c in tau if not np.any(t == c)]
        if missing:
            raise InputError(
                f"change times {missing} are not in the inspection grid")
        if t[-1] != tau[-1]:
            raise InputError(
                "the last inspection time must equal the last change time")
        object.__setattr__(self, "stress_levels", x)
        object.__setattr__(self, "change_times", tau)
        object.__setattr__(self, "inspection_times", t)
        # level in force over (tau_{i-1}, tau_i], zero-based
        lev = np.searchsorted(tau, t, side="left")
        lev.flags.writeable = False
        object.__setattr__(self, "levels", lev)

    @property
    def k(self) -> int:
        return self.stress_levels.size

    @property
    def L(self) -> int:
        return self.inspection_times.size

    @property
    def n_cells(self) -> int:
        return self.L + 1

    def to_dict(self) -> dict:
        return {
            "stress_levels": self.stress_levels.tolist(),
            "change_times": self.change_times.tolist(),
            "inspection_times": self.inspection_times.tolist(),
        }

    def __eq__(self, other):
        if not isinstance(other, StressPlan):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(tuple(map(tuple, self.to_dict().values())))


def simulation_plan() -> StressPlan:
    """Two-level plan used throughout the simulation study (k=2, L=11)."""
    return StressPlan(
        stress_levels=[35.0, 45.0],
        change_times=[25.0, 70.0],
        inspection_times=[10, 15, 20, 25, 30, 35, 40, 45, 50, 60, 70],
    )


def hazard_rates(params: ModelParams, plan: StressPlan) -> np.ndarray:
    return params.theta0 * np.exp(params.theta1 * plan.stress_levels)


def exposure_shifts(params: ModelParams, plan: StressPlan) -> np.ndarray:
    """Shifts ``a_0, ..., a_{k-1}`` that make the piecewise CDF continuous.

    ``a_{i-1} = sum_{l<i} (tau_l - tau_{l-1}) lambda_l / lambda_i`` with
    ``tau_0 = 0``, so ``a_0 = 0``.
    """
    lam = hazard_rates(params, plan)
    widths = np.diff(plan.change_times, prepend=0.0)
    done = np.concatenate(([0.0], np.cumsum(widths * lam)[:-1]))
    shifts = done / lam
    if params.theta1 == 0.0:
        # equal rates: shift is exactly the elapsed time
        shifts = np.concatenate(([0.0], plan.change_times[:-1]))
    return shifts


def _branch(t: np.ndarray, plan: StressPlan) -> np.ndarray:
    """CDF branch index: level i with tau_{i-1} <= t < tau_i, last one open-ended."""
    return np.searchsorted(plan.change_times[:-1], t, side="right")


def _prev_change(plan: StressPlan, level: np.ndarray) -> np.ndarray:
    starts = np.concatenate(([0.0], plan.change_times[:-1]))
    return starts[level]


def lifetime_cdf(t, params: ModelParams, plan: StressPlan):
    """Cumulative exposure lifetime CDF ``G_T(t)``; scalar in, scalar out."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise InputError("lifetime_cdf is defined for t >= 0")
    lam = hazard_rates(params, plan)
    a = exposure_shifts(params, plan)
    i = _branch(t_arr, plan)
    expo = lam[i] * (t_arr + a[i] - _prev_change(plan, i))
    out = -np.expm1(-expo)
    return float(out) if out.ndim == 0 else out


def failure_probabilities(params: ModelParams, plan: StressPlan) -> np.ndarray:
    """Interval failure probabilities for cells 1..L and survival for cell L+1."""
    return _kernels.cell_probs(params.theta0, params.theta1, plan.stress_levels,
                               plan.change_times, plan.inspection_times)


def lifetime_density(t, params: ModelParams, plan: StressPlan, level=None):
    """Density of the branch in force; ``level`` (zero-based) overrides the lookup."""
    t_arr = np.asarray(t, dtype=float)
    lam = hazard_rates(params, plan)
    a = exposure_shifts(params, plan)
    i = _branch(t_arr, plan) if level is None else np.asarray(level)
    expo = lam[i] * (t_arr + a[i] - _prev_change(plan, i))
    return lam[i] * np.exp(-expo)


def _shift_derivatives(params: ModelParams, plan: StressPlan) -> np.ndarray:
    """``a*_{i-1} = (1/lambda_i) sum_{l<i} lambda_l (tau_l - tau_{l-1}) (x_l - x_i)``."""
    lam = hazard_rates(params, plan)
    x = plan.stress_levels
    widths = np.diff(plan.change_times, prepend=0.0)
    out = np.zeros(plan.k)
    for i in range(1, plan.k):
        out[i] = np.sum(lam[:i] * widths[:i] * (x[:i] - x[i])) / lam[i]
    return out


def _all_z(params: ModelParams, plan: StressPlan) -> np.ndarray:
    t = plan.inspection_times
    i = plan.levels
    a = exposure_shifts(params, plan)
    a_star = _shift_derivatives(params, plan)
    elapsed = t + a[i] - _prev_change(plan, i)
    dens = lifetime_density(t, params, plan, level=i)
    z = np.empty((plan.L, 2))
    z[:, 0] = dens * elapsed / params.theta0
    z[:, 1] = dens * (elapsed * plan.stress_levels[i] + a_star[i])
    return z


def cdf_gradient(j: int, params: ModelParams, plan: StressPlan) -> np.ndarray:
    """Gradient of ``G_T(t_j)`` with respect to ``(theta0, theta1)``, for j in 1..L."""
    if not 1 <= j <= plan.L:
        raise InputError(f"inspection index {j} outside 1..{plan.L}")
    return _all_z(params, plan)[j - 1]


def jacobian_W(params: ModelParams, plan: StressPlan) -> np.ndarray:
    """``(L+1) x 2`` matrix whose row j is the gradient of the j-th cell probability."""
    z = _all_z(params, plan)
    padded = np.vstack([np.zeros((1, 2)), z, np.zeros((1, 2))])
    return np.diff(padded, axis=0)
