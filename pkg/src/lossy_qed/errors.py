"""Exception hierarchy shared by all modules."""


class LossyQEDError(Exception):
    """Base class for every error raised by the package."""


class RangeError(LossyQEDError, ValueError):
    """A frequency (or other coordinate) lies outside the supported range."""


class PassivityError(LossyQEDError, ValueError):
    """A susceptibility sample has negative imaginary part."""


class EdgeTruncationError(RangeError):
    """A principal-value evaluation point sits too close to the grid edge."""


class ResolutionError(LossyQEDError, ValueError):
    """The frequency grid is too coarse for the requested time."""


class StabilityError(LossyQEDError, ArithmeticError):
    """A quadratic form or response function is dynamically unstable."""


class PoleError(LossyQEDError, ArithmeticError):
    """A kernel denominator vanishes (resonance or longitudinal pole)."""


class SingularPermittivityError(PoleError):
    """The permittivity is exactly zero."""


class ConvergenceError(LossyQEDError, ArithmeticError):
    """An iterative numerical procedure did not reach its tolerance."""


class DomainError(LossyQEDError, ValueError):
    """A transform was evaluated where it is undefined."""


class FormatError(LossyQEDError, ValueError):
    """Malformed input file or configuration."""


class ConfigError(LossyQEDError, ValueError):
    """Invalid configuration or command-line usage."""
