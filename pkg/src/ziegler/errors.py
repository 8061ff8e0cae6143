"""Exception types raised by the stability and optimization routines."""


class ZieglerError(Exception):
    """Base class for all package errors."""


class ConfigError(ZieglerError, ValueError):
    """A pendulum configuration violates its invariants."""


class NumericError(ZieglerError):
    """A numerical routine could not produce a trustworthy answer."""


class OddCoefficientsPresent(NumericError):
    pass


class ZeroPolynomial(NumericError):
    pass


class InfiniteLoad(NumericError):
    """The requested critical load is infinite (e.g. vanishing free-end mass)."""


class DegenerateDamping(NumericError):
    pass


class UnstableAtZeroLoad(NumericError):
    pass


class NoConvergence(NumericError):
    pass


class ConvergedToLowerOrder(NumericError):
    """Newton iterates satisfy the double-root equations but not the triple-root one."""


class NotARoot(NumericError):
    pass
