"""Exception hierarchy shared across the package."""


class PcgcSenseError(Exception):
    """Base class for all package-specific errors."""


class IndexOutOfTruncation(PcgcSenseError):
    """An occupation number exceeds the cutoff of its mode."""


class TruncationTooSevere(PcgcSenseError):
    """A constructor discarded more probability mass than it tolerates."""


class InvalidState(PcgcSenseError):
    """A state violates a structural invariant (hermiticity, positivity, trace)."""


class DomainError(PcgcSenseError):
    """A parameter lies outside the domain an operation is defined on."""


class DimensionMismatch(PcgcSenseError):
    """Truncations or matrix shapes of two objects are incompatible."""


class TraceLossExceeded(PcgcSenseError):
    """A channel application lost more trace than the allowed tolerance."""


class DegenerateSupport(PcgcSenseError):
    """A state derivative has significant weight outside the numerical support."""


class NonConvergent(PcgcSenseError):
    """Finite-difference step halving did not stabilize the result."""


class SingularBound(PcgcSenseError):
    """The information bound diverges at the requested parameter point."""


class SingularInformation(PcgcSenseError):
    """An information matrix is numerically singular and cannot be inverted."""


class SupportExceedsN0(PcgcSenseError):
    """A probe occupies photon numbers above the phase-randomization cutoff."""


class ZeroProbabilityCondition(PcgcSenseError):
    """Conditioning on an event of zero probability."""
