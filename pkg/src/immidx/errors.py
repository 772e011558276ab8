"""Exception and warning types shared across the package."""


class ImmIdxError(Exception):
    """Base class for every error raised by immidx."""


class RankDeficient(ImmIdxError):
    """A matrix that should be a Stiefel point has rank below n."""


class TooLarge(ImmIdxError):
    pass


class PreimageMismatch(ImmIdxError):
    pass


class DimensionMismatch(ImmIdxError):
    pass


class NonTransversal(ImmIdxError):
    """A converged self-intersection failed the transversality check."""


class DegenerateDeterminant(ImmIdxError):
    pass


class OddDimension(ImmIdxError):
    """The n-form is only defined for even n."""


class RoundingAmbiguous(ImmIdxError):
    pass


class SpecError(ImmIdxError):
    """Malformed immersion descriptor or run manifest."""


class BudgetWarning(UserWarning):
    """Adaptive quadrature hit its subdivision limit before the tolerance."""


class CompletenessWarning(UserWarning):
    """A denser seed grid found a different set of self-intersections."""
