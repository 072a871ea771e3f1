"""Exception hierarchy shared by all modules."""


class LaguerreHahnError(Exception):
    """Base class for all package errors."""


class IntegrabilityError(LaguerreHahnError):
    """Weight exponents violate the integrability bounds."""


class QuadratureNonconvergence(LaguerreHahnError):
    """Successive node-count refinements kept disagreeing beyond tolerance."""


class CompatibilityError(LaguerreHahnError):
    """Cross-direction consistency relation between the two Riccati systems failed."""


class RegularityError(LaguerreHahnError):
    """A leading principal Hankel minor is numerically zero; the moment problem is degenerate."""


class DegreeOverflowError(LaguerreHahnError):
    """A ladder polynomial exceeded its structural degree bound by a non-dust coefficient."""


class SampleAtPoleError(LaguerreHahnError):
    """A residual sample point hit a zero of the system's denominator polynomial."""


class PhiMismatchError(LaguerreHahnError):
    """The quartic invariant evaluated at a spectral-pole did not match its closed form."""


class DegenerateTranscendentError(LaguerreHahnError):
    """The transcendent q (or a derived denominator) is too close to a singular value."""
