"""Exception and warning classes, grouped by the category the CLI reports."""


class OneShotError(Exception):
    """Base class for all package errors."""

    category = "error"


class InputError(OneShotError, ValueError):
    """Malformed or invalid user input (plans, counts, flags)."""

    category = "input-error"


class NumericalError(OneShotError, ArithmeticError):
    """A numerical quantity could not be computed."""

    category = "numerical-error"


class SingularMatrixError(NumericalError):
    """A matrix that must be inverted is singular."""


class InfiniteDivergenceError(NumericalError):
    """Kullback-Leibler divergence is infinite (model cell zero, data cell positive)."""


class InfeasibleConstraintError(InputError):
    """A linear constraint has no point inside the parameter space."""


class ConvergenceError(OneShotError, RuntimeError):
    """An optimisation or an experiment failed too often to be trusted."""

    category = "non-convergence"


class CalibrationError(ConvergenceError):
    """Too many bootstrap refits failed."""


class ExperimentError(ConvergenceError):
    """Too many Monte Carlo replications failed."""


class DegenerateCellWarning(RuntimeWarning):
    """A model cell probability fell below the floor used in negative powers."""


class BoundaryDataWarning(RuntimeWarning):
    """The data sit on the boundary (everything survives or fails in cell 1)."""
