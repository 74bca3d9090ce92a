"""Exception types shared across the package."""


class GMMGANError(Exception):
    """Base class for all errors raised by gmmgan."""


class IdenticalParameters(GMMGANError, ValueError):
    """Target and model are the same mixture, so the density gap is identically zero."""


class ZeroGap(GMMGANError, ArithmeticError):
    """The signed mass gap is zero and its sign (the |L| subgradient) is undefined."""


class InvalidConfig(GMMGANError, ValueError):
    """A configuration value is outside its admissible range."""


class UnknownFigure(GMMGANError, KeyError):
    """Requested figure id has no shipped configuration."""
