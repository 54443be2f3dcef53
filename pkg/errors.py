"""
nfa-lab Errors
Exception types raised by the library modules.
"""


class NfaLabError(Exception):
    """Base class for every error raised by nfa-lab."""
    pass


class NonFiniteEntries(NfaLabError, ValueError):
    pass


class ShapeMismatch(NfaLabError, ValueError):
    pass


class ShapeError(NfaLabError, ValueError):
    pass


class ZeroMatrix(NfaLabError, ValueError):
    pass


class NotSymmetric(NfaLabError, ValueError):
    pass


class IndefiniteInput(NfaLabError, ValueError):
    pass


class NotPsd(NfaLabError, ValueError):
    pass


class NoConvergence(NfaLabError, RuntimeError):
    pass


class NonScalarOutput(NfaLabError, ValueError):
    pass


class EmptyDataset(NfaLabError, ValueError):
    pass


class TooShallow(NfaLabError, ValueError):
    pass


class InsufficientTrace(NfaLabError, ValueError):
    pass


class InsufficientDecay(NfaLabError, ValueError):
    pass


class ConfigInvalid(NfaLabError, ValueError):
    pass


class DivergenceDetected(NfaLabError, RuntimeError):
    """Training produced a non-finite loss or parameter.

    The partial trace recorded up to the failure is kept on the exception.
    """

    def __init__(self, message, trace=None, epoch=None):
        super().__init__(message)
        self.trace = trace
        self.epoch = epoch
