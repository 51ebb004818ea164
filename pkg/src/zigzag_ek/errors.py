"""Exception and warning classes shared across the package."""


class ZigZagEKError(Exception):
    """Base class for all errors raised by this package."""


class MorseViolation(ZigZagEKError):
    """A critical point is degenerate (second derivative below the Morse floor)."""


class GridTooCoarse(ZigZagEKError):
    """Sign-change bracketing produced an inconsistent set of critical points."""


class H01Violated(ZigZagEKError):
    """The global maximum of V is attained at more than one critical point."""


class FictiveSaddle(ZigZagEKError):
    """A prefactor was requested for the global minimum, whose saddle is fictive."""


class AlphaVanishes(ZigZagEKError):
    """The refreshment rate vanishes at a minimum where a refreshed formula was asked."""


class GapNotFound(ZigZagEKError):
    """No clean spectral gap after the expected number of low-lying Witten modes."""


class WSingular(ZigZagEKError):
    """The projected weight matrix of the Grushin reduction is numerically singular."""


class CountMismatch(ZigZagEKError):
    """The direct eigensolve found a different number of small eigenvalues than n0."""

    def __init__(self, message, eigenvalues=()):
        super().__init__(message)
        self.eigenvalues = tuple(eigenvalues)


class FitUnstable(ZigZagEKError):
    """The log-linear fit of a semigroup decay curve has a large residual."""


class ConfigError(ZigZagEKError):
    """An experiment configuration could not be parsed or validated."""


class TieBreakNeeded(UserWarning):
    """A sublevel component has two global minima at equal value."""


class MixedRegimeWarning(UserWarning):
    """Some minima are refreshed (alpha > 0) and others are not."""
