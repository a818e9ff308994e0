"""
Errors
------
Exception hierarchy shared by every okapair module.
"""

from typing import Any, Dict, Iterable, Mapping, Optional


class OkaPairError(Exception):
    """Base class for all okapair errors."""


# -- expressions -------------------------------------------------------------

class ExpressionError(OkaPairError):
    """Malformed expression text."""


class ExprSyntaxError(ExpressionError):
    """Syntax error with the offending position and the tokens that would have been accepted."""

    def __init__(self, text: str, position: int, expected: Iterable[str], found: str):
        self.text = text
        self.position = position
        self.expected = tuple(expected)
        self.found = found
        wanted = ", ".join(self.expected) if self.expected else "end of input"
        super().__init__(
            f"syntax error at position {position}: expected {wanted}, found {found!r}"
        )

    def pointer(self) -> str:
        """Return the source line with a caret under the error position."""
        return f"{self.text}\n{' ' * self.position}^"


class UnknownIdentifierError(ExpressionError):
    def __init__(self, name: str, position: Optional[int] = None):
        self.name = name
        self.position = position
        where = f" at position {position}" if position is not None else ""
        super().__init__(f"unknown identifier {name!r}{where}")


class ExponentError(ExpressionError):
    def __init__(self, position: int, found: str):
        self.position = position
        self.found = found
        super().__init__(
            f"exponent at position {position} must be a nonnegative integer literal, found {found!r}"
        )


class UndefinedExpressionError(ExpressionError):
    """Well-formed text whose value is undefined, such as 1/0."""

    def __init__(self, position: int, reason: str):
        self.position = position
        self.reason = reason
        super().__init__(f"undefined expression before position {position}: {reason}")


# -- algebra -----------------------------------------------------------------

class AlgebraError(OkaPairError):
    """Undefined or unsupported algebraic operation."""


class VarTableMismatchError(AlgebraError):
    pass


class DegreeOverflowError(AlgebraError):
    def __init__(self, degree: int, cap: int):
        self.degree = degree
        self.cap = cap
        super().__init__(f"total degree {degree} exceeds the configured cap {cap}")


class DivisionByZeroError(AlgebraError):
    pass


class SubstitutionPoleError(AlgebraError):
    """A substitution made a denominator vanish identically."""


class NotPolynomialError(AlgebraError):
    pass


# -- numeric evaluation ------------------------------------------------------

class EvaluationError(OkaPairError):
    """Numeric evaluation failed."""


class PoleError(EvaluationError):
    def __init__(self, point: Mapping[str, complex]):
        self.point = dict(point)
        coords = ", ".join(f"{k}={v}" for k, v in self.point.items())
        super().__init__(f"denominator vanishes at ({coords})")


class NonFiniteError(EvaluationError):
    def __init__(self, point: Mapping[str, complex]):
        self.point = dict(point)
        super().__init__("evaluation overflowed to a non-finite value")


class MissingValueError(EvaluationError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"no value supplied for variable {name!r}")


# -- atlases -----------------------------------------------------------------

class AtlasError(OkaPairError):
    pass


class AtlasSyntaxError(AtlasError):
    def __init__(self, line: int, message: str):
        self.line = line
        super().__init__(f"line {line}: {message}")


class UnknownAtlasError(AtlasError):
    pass


class UnknownChartError(AtlasError):
    pass


class MissingTransitionError(AtlasError):
    pass


# -- hamiltonians ------------------------------------------------------------

class HamiltonianError(OkaPairError):
    pass


class NotClosedError(HamiltonianError):
    def __init__(self, chart: str, residual: str):
        self.chart = chart
        self.residual = residual
        super().__init__(f"contraction on chart {chart} is not closed: d_pi = {residual}")


class UnsupportedDensityError(HamiltonianError):
    pass


class NonPolynomialFieldError(HamiltonianError):
    pass


# -- lattice -----------------------------------------------------------------

class LatticeError(OkaPairError):
    pass


class UnknownLabelError(LatticeError):
    pass


class MatrixFormatError(LatticeError):
    pass


# -- painleve ----------------------------------------------------------------

class PainleveError(OkaPairError):
    pass


class UnknownSystemError(PainleveError):
    pass


class DegenerateHamiltonianError(PainleveError):
    pass


class NotAffineError(PainleveError):
    pass


# -- integration -------------------------------------------------------------

class IntegrationError(OkaPairError):
    pass


class InvalidPathError(IntegrationError):
    pass


class PoleAtStartError(IntegrationError):
    def __init__(self, chart: str, reason: str):
        self.chart = chart
        super().__init__(f"initial state is not pole-free in chart {chart}: {reason}")


class InaccessibleStateError(IntegrationError):
    """No chart can hold the current state (a base point or an inaccessible divisor)."""

    def __init__(self, t: complex, scores: Dict[str, float]):
        self.t = t
        self.scores = dict(scores)
        listing = ", ".join(f"{c}={s:.3e}" for c, s in self.scores.items())
        super().__init__(f"no healthy chart at t={t}: scores {listing}")


class StepSizeUnderflowError(IntegrationError):
    def __init__(self, t: complex, h: float, h_min: float):
        self.t = t
        self.h = h
        self.h_min = h_min
        super().__init__(f"step size {h:.3e} fell below h_min={h_min:.3e} at t={t}")


class InsufficientSamplesError(IntegrationError):
    pass


def describe(error: BaseException) -> Dict[str, Any]:
    """Flatten an error into the dict shape used in JSON reports."""
    return {
        'type': type(error).__name__,
        'message': str(error),
    }
