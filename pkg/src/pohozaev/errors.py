"""Exception taxonomy shared by all modules.

The CLI maps these onto exit codes, so solver and config failures must
raise from this hierarchy rather than bare ValueError.
"""


class PohozaevError(Exception):
    """Base class for all package errors."""


class ExprError(PohozaevError):
    """Base class for expression engine errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class UndeclaredSymbolError(ExprError):
    def __init__(self, symbol: str, position: int | None = None):
        loc = f" (at position {position})" if position is not None else ""
        super().__init__(f"undeclared symbol {symbol}{loc}")
        self.symbol = symbol


class EvalDomainError(ExprError):
    """Raised for negative base with fractional exponent, log of non-positive, division by zero."""


class SolverError(PohozaevError):
    """Base class for solver failures (CLI exit code 3)."""


class NoBracketError(SolverError):
    """The first-zero-radius map never straddles the target radius over the
    search grid.  This is the empirical signature of non-existence, not a
    proof; only the criteria module issues verdicts."""


class NoConvergenceError(SolverError):
    def __init__(self, message: str, last_residual: float | None = None):
        super().__init__(message)
        self.last_residual = last_residual


class PositivityLostError(SolverError):
    """A shooting iterate's trajectory went negative before the boundary."""


class IdentityError(PohozaevError):
    """Base class for identity-verifier errors."""


class GridMismatchError(IdentityError):
    """Solutions supplied to a joint verifier do not share a quadrature grid."""


class NormalizationViolatedError(IdentityError):
    """H(x, 0, ..., 0) varies over the boundary, so the boundary flux of the
    general identity does not drop; the verifier cannot proceed."""

    def __init__(self, message: str, point=None):
        super().__init__(message)
        self.point = point


class PositivityViolatedError(IdentityError):
    """Supplied solution data is not positive inside the domain."""


class ConfigError(PohozaevError):
    """Invalid run configuration (CLI exit code 2)."""
