"""Exception types shared across the toolkit."""


class RandRefineError(Exception):
    """Base class for every error raised by this package."""


# measure construction ------------------------------------------------------

class InvalidMeasure(RandRefineError):
    """A scale/shift measure failed validation."""


class EmptyMeasure(InvalidMeasure):
    pass


class ZeroScaleAtom(InvalidMeasure):
    """An atom carries scale 0; the maps must stay invertible."""


class NonPositiveWeight(InvalidMeasure):
    pass


class WeightsNotNormalized(InvalidMeasure):
    """Atom weights deviate from total mass 1 by more than the tolerance."""


# sampling / enumeration -----------------------------------------------------

class EnumerationTooLarge(RandRefineError):
    """Exact path enumeration would exceed the state cap."""


class RegimeMismatch(RandRefineError):
    """The requested operation is not meaningful in the measure's regime."""


# spectral solver ------------------------------------------------------------

class CriticalRegime(RandRefineError):
    """Zero log-scale mean: the solution family is not unique, solver refuses."""


class NonzeroMeanInhomogeneity(RandRefineError):
    """The forcing term must integrate to zero for integrable solutions."""


class MassMustBeZero(RandRefineError):
    """In the contractive regime the solution's total integral is forced to 0."""


class SpectralLeakage(RandRefineError):
    """Spectrum magnitude at the grid edge is too large for safe inversion."""


class ImaginaryResidueTooLarge(RandRefineError):
    """Inverse transform of a supposedly real function kept a large imaginary part."""


# CDF iteration ----------------------------------------------------------------

class NotMeanContractive(RandRefineError):
    pass


class NegativeScale(RandRefineError):
    """CDF-level iteration requires almost-surely positive scales."""


# misc -----------------------------------------------------------------------

class WindowTooSmall(RandRefineError):
    pass


class SymmetryViolated(RandRefineError):
    pass
