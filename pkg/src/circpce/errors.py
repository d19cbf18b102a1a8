"""Exception types raised by circpce."""


class CircPceError(Exception):
    """Base class for all library errors."""


class DomainError(CircPceError, ValueError):
    """Input outside the domain of an operation."""


class UndefinedMeanError(CircPceError):
    """First trigonometric moment vanishes, so the mean direction is undefined."""


class FitDegenerateError(CircPceError):
    """Characteristic sequence cannot be matched by a wrapped normal."""


class InvalidMeasureError(CircPceError):
    """Verblunsky coefficient with modulus >= 1."""


class ConcentrationLimitError(CircPceError):
    """Toeplitz moment system lost positive definiteness at some degree."""

    def __init__(self, degree, margin):
        self.degree = degree
        self.margin = margin
        super().__init__(
            f"moment system numerically singular at degree {degree} "
            f"(1 - |eta|^2 = {margin:.3e})"
        )


class NormalizationError(CircPceError):
    """Density does not integrate to one on the quadrature rule."""


class UnderdeterminedError(CircPceError):
    """Fewer training samples than unknown coefficients."""


class RankDeficientError(CircPceError):
    """Design matrix does not have full column rank."""

    def __init__(self, rank, columns):
        self.rank = rank
        self.columns = columns
        super().__init__(f"design matrix rank {rank} < {columns} columns")


class PropagationError(CircPceError):
    """Orbit integration failed."""


class KeplerConvergenceError(PropagationError):
    """Newton iteration on the equinoctial Kepler equation did not converge."""
