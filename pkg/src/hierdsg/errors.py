"""Exception types raised across the package."""

from __future__ import annotations


class HierDsgError(Exception):
    """Base class for every error raised by this package."""


class DesignSpaceError(HierDsgError, ValueError):
    """A design-space declaration is malformed or inconsistent."""


class CycleError(DesignSpaceError):
    """Decree arcs (or order relations) form a directed cycle."""

    def __init__(self, message: str, cycle: tuple[str, ...] = ()):
        super().__init__(message)
        self.cycle = cycle


class InfeasibleError(DesignSpaceError):
    """No valid assignment exists under the incompatibility/order edges."""


class DanglingReferenceError(DesignSpaceError):
    """A name refers to a variable that was never declared."""


class DomainError(DesignSpaceError):
    """Empty or malformed domain, or a value outside its declared domain."""


class MissingParentError(DesignSpaceError):
    """A support query lacks the value of one of the variable's parents."""


class WidthError(HierDsgError, ValueError):
    """A point does not have one entry per declared variable."""


class BudgetError(HierDsgError, RuntimeError):
    """Enumeration would exceed the configured cap."""


class NonFiniteError(HierDsgError, ValueError):
    """A distance was requested for a NaN or infinite input."""


class UnboundedError(HierDsgError, ValueError):
    """The variable has no finite bounds, so no supremum exists."""


class HyperparamError(HierDsgError, ValueError):
    """Kernel hyperparameters are non-positive or have the wrong length."""


class NonSymmetricError(HierDsgError, ValueError):
    """An eigenvalue check was requested for a non-symmetric matrix."""


class SearchExhaustedError(HierDsgError, RuntimeError):
    """A randomized search spent its whole trial budget without success."""


class SingularError(HierDsgError, RuntimeError):
    """Cholesky factorization failed even at the largest nugget."""


class DegenerateError(HierDsgError, ValueError):
    """Training data cannot support a model (too few points, constant targets)."""


class InvalidPointError(HierDsgError, ValueError):
    """An objective was evaluated at a point that is not valid."""

    def __init__(self, message: str, violations: tuple[str, ...] = ()):
        super().__init__(message)
        self.violations = violations


class UnknownProblemError(HierDsgError, KeyError):
    """No built-in problem is registered under the requested name."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class ParseError(HierDsgError, ValueError):
    """A design-space or point file could not be decoded."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)
        self.line = line
        self.column = column


class SchemaError(ParseError):
    """A design-space document does not match the schema."""

    def __init__(self, message: str, path: tuple = ()):
        super().__init__(message)
        self.path = path
