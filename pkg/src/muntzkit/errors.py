"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: configuration problems exit 1,
precondition violations exit 2 and failed certifications exit 3.
"""

from __future__ import annotations


class MuntzkitError(Exception):
    """Base class for all library errors."""


class InvalidArgument(MuntzkitError, ValueError):
    pass


class NormalizationError(InvalidArgument):
    """A quadratic surd that is really rational (q = 0 or square radicand)."""


class ConfigError(MuntzkitError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class PreconditionViolation(MuntzkitError):
    """An operation was called outside the hypotheses it is valid under."""

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.details = details


class HypothesisViolation(PreconditionViolation):
    """psi' and psi'' vanish simultaneously somewhere on the domain."""


class MultiFoldError(PreconditionViolation):
    def __init__(self, critical_points):
        pts = ", ".join(f"{c:.15g}" for c in critical_points)
        super().__init__(f"more than one interior critical point: {pts}",
                         critical_points=tuple(critical_points))
        self.critical_points = tuple(critical_points)


class ResonanceError(PreconditionViolation):
    def __init__(self, k: int, message: str | None = None):
        super().__init__(message or f"resonant frequency k = {k}: the 2x2 system is singular", k=k)
        self.k = k


class DegreeError(PreconditionViolation):
    pass


class PhaseSeparationError(PreconditionViolation):
    pass


class OutOfScopeError(PreconditionViolation):
    pass


class DegenerateSystemError(MuntzkitError):
    def __init__(self, exponent, ratio: float):
        super().__init__(
            f"exponent {exponent} is numerically dependent on the previous ones "
            f"(orthogonalized norm ratio {ratio:.3e})")
        self.exponent = exponent
        self.ratio = ratio


class CertificationError(MuntzkitError):
    """A constructed object failed its numerical certificate."""

    def __init__(self, message: str, residuals=None):
        super().__init__(message)
        self.residuals = residuals


class DiagnosticFailure(MuntzkitError):
    def __init__(self, message: str, samples=None):
        super().__init__(message)
        self.samples = samples
