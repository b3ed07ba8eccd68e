"""Exception hierarchy; the CLI maps these onto exit codes."""


class TailRiskError(Exception):
    """Base class for package errors."""


class DomainError(TailRiskError, ValueError):
    """An argument lies outside the domain of an operation."""


class ConstructionError(TailRiskError, ValueError):
    """A specification object (divergence, reference, loss) is invalid."""


class NumericalError(TailRiskError, ArithmeticError):
    """An optimizer or root finder failed to produce a finite answer."""


class WeightsUnavailableError(NumericalError):
    """Dual weights requested for an optimizer that sits on the boundary."""


class InputError(TailRiskError, ValueError):
    """Malformed user input (CSV rows, JSON files)."""
