"""Typed errors raised across the omega package."""


class OmegaError(Exception):
    """Root of every error raised by omega."""


class DimensionMismatch(OmegaError, ValueError):
    """Operands live in Hilbert spaces of different dimension."""


class NotNormalized(OmegaError, ValueError):
    """A state vector is not of unit norm."""


class AsymmetricMatrix(OmegaError, ValueError):
    """An operator is not symmetric within tolerance."""


class DegenerateSpectrum(OmegaError, ValueError):
    """Two adjacent eigenvalues are closer than the degeneracy guard."""


class ParallelStates(OmegaError, ValueError):
    """Two states are (numerically) parallel where orthogonalization is needed."""


class IllConditionedBasis(OmegaError, ValueError):
    """A trial basis is numerically linearly dependent."""


class ChartOutOfRange(OmegaError, ValueError):
    """Eigenbasis coordinates leave the unit ball."""


class NoHigherComponent(OmegaError, ValueError):
    """A state has no weight above the target level."""


class EnergyOrderingViolation(OmegaError, ValueError):
    """The trial energy is not above a lower approximant's energy."""


class OverlapSaturation(OmegaError, ValueError):
    """The trial state lies (almost) inside the span of the lower approximants."""


class ZeroEf(OmegaError, ValueError):
    """The auxiliary energy of the steepened functional is zero."""


class InfeasibleStart(OmegaError, ValueError):
    """An optimizer start point violates the run's preconditions."""


class EmptyComplement(OmegaError, ValueError):
    """Orthogonality constraints span the whole space."""


class TargetOutOfRange(OmegaError, ValueError):
    """A target energy lies outside the reachable interval."""


class NonEigenPair(OmegaError, ValueError):
    """Two states are not eigenvectors of the operator on their common span."""


class NoCandidateDirection(OmegaError, ValueError):
    """No new direction orthogonal to the current states is available."""


class InvalidParameters(OmegaError, ValueError):
    """Model or construction parameters violate their invariants."""


class ConfigError(OmegaError, ValueError):
    """A scenario or optimizer configuration is invalid."""


class IoError(OmegaError, OSError):
    """An input file is missing, unreadable or malformed."""
