"""Exception hierarchy shared by every qflag module."""


class QFlagError(ValueError):
    """Base class for domain errors raised by qflag."""


# --- Input validation ---
class InvalidAlgebraError(QFlagError):
    """Series/rank combination that does not name a simply-laced algebra."""


class SchemaError(QFlagError):
    """Malformed configuration, chain or system file."""


class DegenerateTwist(QFlagError):
    """Twist values hit a Vandermonde-type zero."""


class NonReducedWord(QFlagError):
    """A Weyl word whose length differs from its inversion count."""


class TwistMismatch(QFlagError):
    """Adding spectral functions with different twist weights."""


# --- Numerical degeneracy ---
class SingularLinearSystem(QFlagError):
    pass


class NoPolynomialSolution(QFlagError):
    """A first-order QQ equation has no polynomial solution within the degree bound."""


class GenericityFailure(QFlagError):
    """Inputs fall outside the generic locus of the orbit recursion."""


class NormalizationError(QFlagError):
    pass


class InconsistentConstants(QFlagError):
    """Relation constants cannot be absorbed by node rescalings."""


# --- Construction faults ---
class OrbitReconstructionError(QFlagError):
    pass


class BruhatFactorizationError(QFlagError):
    pass


class ProjectionError(QFlagError):
    """Requested irreducible component is absent or not multiplicity free."""


class DressingError(QFlagError):
    """A product of source dressings is not a finite product of shifted sources."""
