"""Exception hierarchy shared by all modules."""


class FbmVarError(Exception):
    """Base class for errors raised by this package."""


class DomainError(FbmVarError, ValueError):
    """An argument lies outside the domain of the operation."""


class QuadratureError(FbmVarError, ArithmeticError):
    """Adaptive quadrature could not reach the requested tolerance."""


class FactorizationError(FbmVarError, ArithmeticError):
    """A covariance matrix is indefinite beyond the allowed jitter."""


class EmbeddingError(FbmVarError, ArithmeticError):
    """Circulant embedding produced negative eigenvalues."""


class ModelMismatchError(FbmVarError, ValueError):
    """A statistic was applied to a path from an unsupported model."""


class EmptySampleError(FbmVarError, ValueError):
    """A statistical test received an empty sample."""


class DegenerateSampleError(FbmVarError, ValueError):
    """A zero-variance sample cannot be compared with a different target."""
