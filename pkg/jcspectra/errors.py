class SpectraError(Exception):
    """Root of every computational error raised by jcspectra."""

class ParameterError(SpectraError, ValueError):
    """Invalid physical or numerical input."""

class NonPositiveOmega(ParameterError):
    pass

class NegativeFrequency(ParameterError):
    pass

class NegativeCoupling(ParameterError):
    pass

class NonFinite(ParameterError):
    pass

class NegativeArgument(ParameterError):
    pass

class NonPositiveX(ParameterError):
    pass

class InvalidTruncation(ParameterError):
    pass

class DimensionTooLarge(ParameterError):
    pass

class OrderTooHigh(ParameterError):
    pass

class OrderTooLow(ParameterError):
    pass

class NonConvergedQuadrature(SpectraError):
    pass

class BisectionStall(SpectraError):
    pass

class NotAnEigenvalue(SpectraError):
    pass

class NoConvergence(SpectraError):
    pass

class TailNotConverged(SpectraError):
    pass

class OutsideConvergentRegime(SpectraError):
    pass

class M0NotCertified(SpectraError):
    pass

class NotFoundWithinHorizon(SpectraError):
    pass

class NotResonant(SpectraError):
    pass
