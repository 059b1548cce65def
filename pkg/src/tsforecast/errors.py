"""Exception types shared across the package."""


class DomainError(ValueError):
    """A value lies outside the domain of a transform (e.g. log of a nonpositive number)."""


class StateError(RuntimeError):
    """A stateful object was used before its state was populated."""


class DegenerateSeriesError(ValueError):
    """The series carries no usable variation (constant series, singular Toeplitz system)."""


class FactorizationError(ArithmeticError):
    """A matrix factorization failed (non-SPD pivot, singular matrix)."""


class EstimationError(RuntimeError):
    """Model parameters could not be estimated."""


class TrainingError(RuntimeError):
    """Neural network training diverged."""


class RankDeficiencyError(ArithmeticError):
    """An incremental kernel-system update hit a near-zero pivot."""


class SearchError(RuntimeError):
    """Every candidate of a model search failed."""


class IntegrityError(RuntimeError):
    """An embedded data fixture does not match its recorded checksum."""
