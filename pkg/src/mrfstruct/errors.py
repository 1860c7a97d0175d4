"""Exception and warning types shared across the package."""


class MRFError(Exception):
    """Base class for package errors."""


class StateSpaceError(MRFError):
    """Exact enumeration would exceed the state-count cap."""


class ZeroProbabilityError(MRFError):
    """Conditioning on (or dividing by) a zero-probability event."""


class HardConstraintDeadlock(MRFError):
    """A Gibbs site update found no symbol with positive probability."""


class ReconstructionError(MRFError):
    """A per-vertex neighborhood search failed to accept any candidate."""


class CorrelationNeighborhoodError(MRFError):
    """A correlation neighborhood exceeded the safety cap (threshold too small)."""


class CliqueOverlapError(MRFError):
    """Maximal cliques from hidden-vertex recovery overlap; separation hypothesis violated."""


class ModelFormatError(MRFError):
    """Malformed model / samples / config input."""


class HardConstraintWarning(UserWarning):
    """A potential table contains -inf; reconstruction guarantees are not claimed."""


class EmptyNeighborhoodWarning(UserWarning):
    """All correlation neighborhoods are empty; the correlation threshold is too large."""
