"""Exception hierarchy shared across the package."""


class SepsplitError(Exception):
    """Base class for all package errors."""


class ParseError(SepsplitError):
    """Malformed expression source.

    Carries the byte offset of the first offending token so callers can
    point at the exact spot in the input.
    """

    def __init__(self, message, offset):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class DomainError(SepsplitError):
    """Evaluation left the domain of a real elementary function."""


class HypothesisError(SepsplitError):
    """A structural hypothesis of the asymptotic theory is violated.

    Examples: forcing exponent r <= 5/2, non-hyperbolic equilibrium,
    degenerate (tangential) critical point, resonant frequency vector.
    The CLI maps this to exit code 2.
    """


class ConfigError(SepsplitError):
    """Invalid run configuration (unknown keys, missing fields, bad types).

    The CLI maps this to exit code 3.
    """


class NumericsError(SepsplitError):
    """A numerical procedure failed to converge to its stated tolerance."""
