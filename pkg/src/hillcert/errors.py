"""Exception hierarchy shared by all hillcert modules."""


class HillCertError(Exception):
    """Base class for all errors raised by hillcert."""


class DimensionError(HillCertError, ValueError):
    """A matrix argument has the wrong shape."""


class DomainError(HillCertError, ValueError):
    """An argument lies outside the domain of the operation (NaN, Inf, |x| >= 1, ...)."""


class ParameterError(HillCertError, ValueError):
    """An integer or scalar parameter violates its precondition."""


class StructureError(HillCertError):
    """A matrix does not have the block structure it is supposed to have."""


class InvalidEnvelopeError(HillCertError, ValueError):
    """The decay envelope does not satisfy b > ln 2, so no bound applies."""


class EmptyFitError(HillCertError, ValueError):
    """No Fourier coefficient lies above the fitting floor."""


class ConvergenceError(HillCertError, RuntimeError):
    """An iterative solver did not converge."""


class StiffnessError(HillCertError, RuntimeError):
    """The adaptive integrator's step size fell below its lower limit."""
