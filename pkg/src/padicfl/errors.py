"""Exception types shared across the library.

Errors split into three families: construction errors (bad parameters),
arithmetic errors (an operation's precondition fails on mathematically
valid input), and precision errors (the answer cannot be certified at the
working precision).  Precision errors are never silently downgraded to a
wrong answer; callers that want the uncertified value must lower the
margin explicitly.
"""


class ExactArithmeticError(Exception):
    """Base class for all library errors."""


class NotPrime(ExactArithmeticError):
    """The given modulus base is not a prime number."""


class PrecisionZero(ExactArithmeticError):
    """A context or derived value would have precision < 1 digit."""


class ContextMismatch(ExactArithmeticError):
    """Operands belong to different arithmetic contexts (never coerced)."""


class InexactDivision(ExactArithmeticError):
    """Division by a power of p requested on an element of too small valuation."""


class NotAUnit(ExactArithmeticError):
    """Inversion requested for a non-unit."""


class LengthMismatch(ExactArithmeticError):
    """Witt vectors of different lengths (or coefficient rings) combined."""


class ShapeMismatch(ExactArithmeticError):
    """Matrix or vector dimensions are incompatible with the operation."""


class SpanMismatch(ExactArithmeticError):
    """Two lattice bases do not span the same space at the working precision."""


class InsufficientPrecision(ExactArithmeticError):
    """A divisor or determinant falls inside the precision margin window."""


class PrecisionLoss(ExactArithmeticError):
    """An induced exact division fails within the margin."""


class SingularPhi(ExactArithmeticError):
    """The Frobenius matrix is not invertible at the working precision."""


class NonRationalCoefficients(ExactArithmeticError):
    """A quantity that must be Frobenius-invariant fails the invariance check."""


class PVanishesAtOne(ExactArithmeticError):
    """The local factor vanishes at 1 (the measure identity hypothesis fails)."""


class NotExact(ExactArithmeticError):
    """An input sequence of modules fails exactness."""


class LiftFailure(ExactArithmeticError):
    """A required preimage in the zeroth filtration step does not exist."""
